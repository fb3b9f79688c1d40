// Copyright 2026 The ntdh Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Line charts as standalone SVG. Input is a long-format summary CSV with
// columns series,x,n,mean,std,min,max: one line per series through the
// means, shaded between the per-seed min and max.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "ntdh/error.hpp"
#include "ntdh/experiment/csv.hpp"

namespace ntdh::exp {

namespace detail {

inline std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

inline std::vector<double> nice_ticks(double lo, double hi, int target = 5) {
  if (!(hi > lo)) {
    lo -= 0.5;
    hi += 0.5;
  }
  const double raw = (hi - lo) / target;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  double step = mag;
  for (double m : {1.0, 2.0, 2.5, 5.0, 10.0}) {
    step = m * mag;
    if (step >= raw) break;
  }
  std::vector<double> t;
  for (double v = std::ceil(lo / step) * step; v <= hi + 1e-9 * step; v += step)
    t.push_back(std::abs(v) < 1e-12 * step ? 0.0 : v);
  return t;
}

inline std::string f2(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

inline std::string tick_label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

}  // namespace detail

struct PlotOptions {
  std::string title;
  std::string x_label = "x";
  std::string y_label = "value";
};

/// Writes the chart for `summary_csv` to `svg_path`.
inline void emit_plot(const std::string& summary_csv, const std::string& svg_path,
                      const PlotOptions& opt = {}) {
  const CsvTable t = read_csv(summary_csv);
  for (const char* c : {"series", "x", "mean", "min", "max"})
    if (!t.has(c)) throw InvalidArgument("emit_plot: " + summary_csv + " lacks column '" + c + "'");

  struct Pt {
    double x, mean, lo, hi;
  };
  std::vector<std::string> order;
  std::map<std::string, std::vector<Pt>> series;
  double xmin = INFINITY, xmax = -INFINITY, ymin = INFINITY, ymax = -INFINITY;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const std::string& name = t.str(r, "series");
    if (!series.count(name)) order.push_back(name);
    Pt p{t.num(r, "x"), t.num(r, "mean"), t.num(r, "min"), t.num(r, "max")};
    series[name].push_back(p);
    xmin = std::min(xmin, p.x);
    xmax = std::max(xmax, p.x);
    ymin = std::min(ymin, p.lo);
    ymax = std::max(ymax, p.hi);
  }
  if (order.empty()) {
    xmin = 0; xmax = 1; ymin = 0; ymax = 1;
  }
  if (!(xmax > xmin)) { xmin -= 0.5; xmax += 0.5; }
  const double pad = ymax > ymin ? 0.05 * (ymax - ymin) : 0.5;
  ymin -= pad;
  ymax += pad;

  const double W = 720, H = 440, L = 70, R = 180, T = 40, B = 55;
  const double pw = W - L - R, ph = H - T - B;
  auto sx = [&](double x) { return L + (x - xmin) / (xmax - xmin) * pw; };
  auto sy = [&](double y) { return T + (1.0 - (y - ymin) / (ymax - ymin)) * ph; };
  static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
                                  "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};
  using detail::f2;

  std::ofstream os(svg_path, std::ios::binary | std::ios::trunc);
  if (!os) throw InvalidArgument("emit_plot: cannot open " + svg_path);
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << f2(W) << "\" height=\"" << f2(H)
     << "\" viewBox=\"0 0 " << f2(W) << ' ' << f2(H) << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << f2(L + pw / 2) << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">"
     << detail::xml_escape(opt.title) << "</text>\n";
  for (double v : detail::nice_ticks(xmin, xmax)) {
    os << "<line x1=\"" << f2(sx(v)) << "\" y1=\"" << f2(T) << "\" x2=\"" << f2(sx(v)) << "\" y2=\""
       << f2(T + ph) << "\" stroke=\"#eee\"/>\n";
    os << "<text x=\"" << f2(sx(v)) << "\" y=\"" << f2(T + ph + 18) << "\" text-anchor=\"middle\">"
       << detail::tick_label(v) << "</text>\n";
  }
  for (double v : detail::nice_ticks(ymin, ymax)) {
    os << "<line x1=\"" << f2(L) << "\" y1=\"" << f2(sy(v)) << "\" x2=\"" << f2(L + pw) << "\" y2=\""
       << f2(sy(v)) << "\" stroke=\"#eee\"/>\n";
    os << "<text x=\"" << f2(L - 8) << "\" y=\"" << f2(sy(v) + 4) << "\" text-anchor=\"end\">"
       << detail::tick_label(v) << "</text>\n";
  }
  os << "<rect x=\"" << f2(L) << "\" y=\"" << f2(T) << "\" width=\"" << f2(pw) << "\" height=\"" << f2(ph)
     << "\" fill=\"none\" stroke=\"#333\"/>\n";
  os << "<text x=\"" << f2(L + pw / 2) << "\" y=\"" << f2(H - 12) << "\" text-anchor=\"middle\">"
     << detail::xml_escape(opt.x_label) << "</text>\n";
  os << "<text transform=\"translate(18 " << f2(T + ph / 2) << ") rotate(-90)\" text-anchor=\"middle\">"
     << detail::xml_escape(opt.y_label) << "</text>\n";

  for (std::size_t s = 0; s < order.size(); ++s) {
    auto pts = series[order[s]];
    std::stable_sort(pts.begin(), pts.end(), [](const Pt& a, const Pt& b) { return a.x < b.x; });
    const char* color = palette[s % 10];
    os << "<polygon fill=\"" << color << "\" fill-opacity=\"0.15\" stroke=\"none\" points=\"";
    for (const auto& p : pts) os << f2(sx(p.x)) << ',' << f2(sy(p.hi)) << ' ';
    for (auto it = pts.rbegin(); it != pts.rend(); ++it) os << f2(sx(it->x)) << ',' << f2(sy(it->lo)) << ' ';
    os << "\"/>\n<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
    for (const auto& p : pts) os << f2(sx(p.x)) << ',' << f2(sy(p.mean)) << ' ';
    os << "\"/>\n";
    for (const auto& p : pts)
      os << "<circle cx=\"" << f2(sx(p.x)) << "\" cy=\"" << f2(sy(p.mean)) << "\" r=\"3\" fill=\"" << color
         << "\"/>\n";
    const double ly = T + 14 + 18.0 * static_cast<double>(s);
    os << "<line x1=\"" << f2(L + pw + 12) << "\" y1=\"" << f2(ly) << "\" x2=\"" << f2(L + pw + 32)
       << "\" y2=\"" << f2(ly) << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
    os << "<text x=\"" << f2(L + pw + 38) << "\" y=\"" << f2(ly + 4) << "\">" << detail::xml_escape(order[s])
       << "</text>\n";
  }
  os << "</svg>\n";
}

}  // namespace ntdh::exp
