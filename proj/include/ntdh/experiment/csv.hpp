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

// Minimal CSV for the sweep outputs: no quoting, no embedded commas (list
// fields use ';').

#pragma once

#include <cstddef>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "ntdh/error.hpp"
#include "ntdh/experiment/config.hpp"

namespace ntdh::exp {

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Column index, or throws.
  std::size_t col(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return i;
    throw InvalidArgument("csv: no column '" + name + "'");
  }
  bool has(const std::string& name) const {
    for (const auto& h : header)
      if (h == name) return true;
    return false;
  }
  double num(std::size_t row, const std::string& name) const {
    return detail::parse_double(rows[row][col(name)]);
  }
  const std::string& str(std::size_t row, const std::string& name) const { return rows[row][col(name)]; }
};

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out(1);
  for (char c : line) {
    if (c == ',') out.emplace_back();
    else if (c != '\r') out.back().push_back(c);
  }
  return out;
}

inline std::string join_csv(const std::vector<std::string>& fields) {
  std::string s;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) s += ',';
    s += fields[i];
  }
  return s;
}

/// Rows whose width differs from the header (e.g. a line truncated by an
/// interrupted run) are dropped.
inline CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("csv: cannot open " + path);
  CsvTable t;
  std::string line;
  if (!std::getline(in, line)) return t;
  t.header = split_csv_line(line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto f = split_csv_line(line);
    if (f.size() == t.header.size()) t.rows.push_back(std::move(f));
  }
  return t;
}

inline void write_csv(const std::string& path, const CsvTable& t) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw InvalidArgument("csv: cannot open " + path + " for writing");
  os << join_csv(t.header) << '\n';
  for (const auto& r : t.rows) os << join_csv(r) << '\n';
  if (!os) throw InvalidArgument("csv: write failed for " + path);
}

/// Fixed-precision number formatting shared by every sweep CSV.
inline std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

}  // namespace ntdh::exp
