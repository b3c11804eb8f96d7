// Copyright 2026 The exlab Authors
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

#include "exlab/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "exlab/errors.hpp"

namespace exlab {

namespace {

constexpr char kMagic[4] = {'E', 'X', 'L', 'B'};

static_assert(std::endian::native == std::endian::little ||
                  std::endian::native == std::endian::big,
              "mixed-endian platforms unsupported");

std::uint32_t to_le32(std::uint32_t v) {
  if constexpr (std::endian::native == std::endian::big) {
    return __builtin_bswap32(v);
  }
  return v;
}

std::uint64_t to_le64(std::uint64_t v) {
  if constexpr (std::endian::native == std::endian::big) {
    return __builtin_bswap64(v);
  }
  return v;
}

void write_u32(std::ostream& out, std::uint32_t v) {
  const std::uint32_t le = to_le32(v);
  out.write(reinterpret_cast<const char*>(&le), sizeof(le));
}

void write_f64(std::ostream& out, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, sizeof(bits));
  bits = to_le64(bits);
  out.write(reinterpret_cast<const char*>(&bits), sizeof(bits));
}

std::uint32_t read_u32(std::istream& in) {
  std::uint32_t le = 0;
  in.read(reinterpret_cast<char*>(&le), sizeof(le));
  if (!in) throw FormatError("checkpoint: truncated file");
  return to_le32(le);
}

double read_f64(std::istream& in) {
  std::uint64_t bits = 0;
  in.read(reinterpret_cast<char*>(&bits), sizeof(bits));
  if (!in) throw FormatError("checkpoint: truncated file");
  bits = to_le64(bits);
  double v;
  std::memcpy(&v, &bits, sizeof(v));
  return v;
}

}  // namespace

void save_checkpoint(const Network& net, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FileError("checkpoint: cannot open for writing: " +
                            path.string());
  out.write(kMagic, sizeof(kMagic));
  write_u32(out, kCheckpointVersion);
  write_u32(out, static_cast<std::uint32_t>(net.layer_count()));
  for (const auto& l : net.layers()) {
    write_u32(out, static_cast<std::uint32_t>(l.in_dim()));
    write_u32(out, static_cast<std::uint32_t>(l.out_dim()));
    write_u32(out, static_cast<std::uint32_t>(l.activation));
  }
  for (const auto& l : net.layers()) {
    for (double v : l.weights.data()) write_f64(out, v);
    for (double v : l.bias.data()) write_f64(out, v);
  }
  if (!out) throw FileError("checkpoint: write failed: " + path.string());
}

Network load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FileError("checkpoint: cannot open: " + path.string());
  char magic[4] = {};
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw FormatError("checkpoint: bad magic header");
  }
  const std::uint32_t version = read_u32(in);
  if (version != kCheckpointVersion) {
    throw FormatError("checkpoint: unsupported format version " +
                      std::to_string(version));
  }
  const std::uint32_t n_layers = read_u32(in);
  if (n_layers == 0 || n_layers > 1024) {
    throw FormatError("checkpoint: implausible layer count " +
                      std::to_string(n_layers));
  }
  struct Dims {
    std::uint32_t in, out, act;
  };
  std::vector<Dims> dims(n_layers);
  for (auto& d : dims) {
    d.in = read_u32(in);
    d.out = read_u32(in);
    d.act = read_u32(in);
    if (d.in == 0 || d.out == 0 || d.act > 2) {
      throw FormatError("checkpoint: invalid layer descriptor");
    }
  }
  std::vector<DenseLayer> layers;
  layers.reserve(n_layers);
  for (const auto& d : dims) {
    DenseLayer layer;
    layer.activation = static_cast<Activation>(d.act);
    layer.weights = Tensor::matrix(d.out, d.in);
    for (auto& v : layer.weights.data()) v = read_f64(in);
    layer.bias = Tensor::vector(d.out);
    for (auto& v : layer.bias.data()) v = read_f64(in);
    layers.push_back(std::move(layer));
  }
  // Network's constructor rejects non-chaining widths with DimensionError.
  return Network(std::move(layers));
}

}  // namespace exlab
