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

// Binary MlpParams file, all integers little-endian:
//
//   char[4]  magic "NTDH"
//   u32      format version (1)
//   u32      activation (0 = relu, 1 = tanh)
//   u64      rng_seed
//   u32      dense layer count L
//   u32[L+1] layer sizes
//   per layer: f64[in*out] weights (row-major, in x out), f64[out] biases

#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "ntdh/error.hpp"
#include "ntdh/mlp.hpp"

namespace ntdh {

inline constexpr std::uint32_t kParamsFormatVersion = 1;

namespace detail {

template <typename T>
void put_le(std::ostream& os, T v) {
  std::uint64_t bits = 0;
  if constexpr (std::is_same_v<T, double>) {
    bits = std::bit_cast<std::uint64_t>(v);
  } else {
    bits = static_cast<std::uint64_t>(v);
  }
  char buf[sizeof(T)];
  for (std::size_t i = 0; i < sizeof(T); ++i) buf[i] = static_cast<char>((bits >> (8 * i)) & 0xff);
  os.write(buf, sizeof(T));
}

template <typename T>
T get_le(std::istream& is) {
  unsigned char buf[sizeof(T)];
  if (!is.read(reinterpret_cast<char*>(buf), sizeof(T)))
    throw InvalidArgument("read_params: truncated file");
  std::uint64_t bits = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) bits |= std::uint64_t{buf[i]} << (8 * i);
  if constexpr (std::is_same_v<T, double>) {
    return std::bit_cast<double>(bits);
  } else {
    return static_cast<T>(bits);
  }
}

}  // namespace detail

inline void write_params(std::ostream& os, const MlpParams& p) {
  os.write("NTDH", 4);
  detail::put_le<std::uint32_t>(os, kParamsFormatVersion);
  detail::put_le<std::uint32_t>(os, p.spec.activation == Activation::relu ? 0u : 1u);
  detail::put_le<std::uint64_t>(os, p.rng_seed);
  detail::put_le<std::uint32_t>(os, static_cast<std::uint32_t>(p.layers.size()));
  for (auto s : p.spec.layer_sizes) detail::put_le<std::uint32_t>(os, static_cast<std::uint32_t>(s));
  for (const auto& l : p.layers) {
    for (double w : l.weight.values()) detail::put_le<double>(os, w);
    for (double b : l.bias) detail::put_le<double>(os, b);
  }
}

inline MlpParams read_params(std::istream& is) {
  char magic[4];
  if (!is.read(magic, 4) || std::memcmp(magic, "NTDH", 4) != 0)
    throw InvalidArgument("read_params: bad magic");
  const auto version = detail::get_le<std::uint32_t>(is);
  if (version != kParamsFormatVersion)
    throw InvalidArgument("read_params: unsupported format version " + std::to_string(version));
  const auto act = detail::get_le<std::uint32_t>(is);
  detail::require(act <= 1, "read_params: unknown activation code");
  MlpParams p;
  p.spec.activation = act == 0 ? Activation::relu : Activation::tanh;
  p.rng_seed = detail::get_le<std::uint64_t>(is);
  const auto layer_count = detail::get_le<std::uint32_t>(is);
  detail::require(layer_count >= 1 && layer_count < 1024, "read_params: implausible layer count");
  for (std::uint32_t i = 0; i <= layer_count; ++i)
    p.spec.layer_sizes.push_back(detail::get_le<std::uint32_t>(is));
  p.spec.validate();
  for (std::uint32_t l = 0; l < layer_count; ++l) {
    Layer layer{Matrix(p.spec.layer_sizes[l], p.spec.layer_sizes[l + 1]),
                std::vector<double>(p.spec.layer_sizes[l + 1])};
    for (double& w : layer.weight.values()) w = detail::get_le<double>(is);
    for (double& b : layer.bias) b = detail::get_le<double>(is);
    p.layers.push_back(std::move(layer));
  }
  return p;
}

inline void save_params(const std::string& path, const MlpParams& p) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw InvalidArgument("save_params: cannot open " + path);
  write_params(os, p);
}

inline MlpParams load_params(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw InvalidArgument("load_params: cannot open " + path);
  return read_params(is);
}

}  // namespace ntdh
