// Copyright 2026 The AWA Lab Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "awa/params_io.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>

namespace awa {

static_assert(std::endian::native == std::endian::little,
              "parameter files are written in host order on little-endian "
              "targets only");

namespace {

constexpr char kMagic[8] = {'A', 'W', 'A', 'P', 'A', 'R', 'A', 'M'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void put(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw std::runtime_error("parameter file truncated");
  return v;
}

}  // namespace

void write_params(std::ostream& out, const ModelParams& params) {
  out.write(kMagic, sizeof(kMagic));
  put<std::uint32_t>(out, kVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(params.arch.size()));
  out.write(params.arch.data(), static_cast<std::streamsize>(params.arch.size()));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(params.layers.size()));
  for (const LayerParams& l : params.layers) {
    put<std::uint8_t>(out, static_cast<std::uint8_t>(l.kind));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(l.tensors.size()));
    for (const Tensor& t : l.tensors) {
      put<std::uint32_t>(out, static_cast<std::uint32_t>(t.rank()));
      for (std::size_t d : t.shape()) put<std::uint64_t>(out, d);
    }
  }
  for (const LayerParams& l : params.layers)
    for (const Tensor& t : l.tensors)
      out.write(reinterpret_cast<const char*>(t.data().data()),
                static_cast<std::streamsize>(t.numel() * sizeof(double)));
  if (!out) throw std::runtime_error("failed writing parameter file");
}

ModelParams read_params(std::istream& in) {
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw std::runtime_error("not a parameter file (bad magic)");
  }
  const auto version = get<std::uint32_t>(in);
  if (version != kVersion) {
    throw std::runtime_error("unsupported parameter file version " +
                             std::to_string(version));
  }
  ModelParams p;
  const auto name_len = get<std::uint32_t>(in);
  if (name_len > 256) throw std::runtime_error("architecture name too long");
  p.arch.resize(name_len);
  in.read(p.arch.data(), name_len);
  const auto layers = get<std::uint32_t>(in);
  if (layers > 4096) throw std::runtime_error("implausible layer count");
  for (std::uint32_t l = 0; l < layers; ++l) {
    LayerParams lp;
    const auto kind = get<std::uint8_t>(in);
    if (kind > static_cast<std::uint8_t>(LayerKind::kFullyConnected)) {
      throw std::runtime_error("unknown layer kind " + std::to_string(kind));
    }
    lp.kind = static_cast<LayerKind>(kind);
    const auto count = get<std::uint32_t>(in);
    for (std::uint32_t k = 0; k < count; ++k) {
      const auto rank = get<std::uint32_t>(in);
      if (rank > 8) throw std::runtime_error("implausible tensor rank");
      Shape s(rank);
      for (auto& d : s) d = get<std::uint64_t>(in);
      lp.tensors.emplace_back(std::move(s));
    }
    p.layers.push_back(std::move(lp));
  }
  for (LayerParams& l : p.layers)
    for (Tensor& t : l.tensors) {
      in.read(reinterpret_cast<char*>(t.data().data()),
              static_cast<std::streamsize>(t.numel() * sizeof(double)));
      if (!in) throw std::runtime_error("parameter payload truncated");
    }
  return p;
}

void save_params(const std::filesystem::path& path, const ModelParams& params) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string());
  write_params(out, params);
}

ModelParams load_params(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return read_params(in);
}

}  // namespace awa
