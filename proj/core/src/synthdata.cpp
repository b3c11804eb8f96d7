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

#include "exlab/synthdata.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <numbers>
#include <sstream>

#include "exlab/errors.hpp"

namespace exlab {

const char* to_string(GeneratorFamily f) {
  switch (f) {
    case GeneratorFamily::oriented_bars: return "oriented_bars";
    case GeneratorFamily::blob_mixtures: return "blob_mixtures";
  }
  return "?";
}

GeneratorFamily family_from_string(const std::string& s) {
  if (s == "oriented_bars") return GeneratorFamily::oriented_bars;
  if (s == "blob_mixtures") return GeneratorFamily::blob_mixtures;
  throw ParameterError("unknown generator family: " + s);
}

void DatasetSpec::validate() const {
  if (n_classes < 2) throw ParameterError("DatasetSpec: n_classes must be >= 2");
  if (samples_per_class < 1 || test_per_class < 1) {
    throw ParameterError("DatasetSpec: per-class sample counts must be >= 1");
  }
  if (image_size < 8) throw ParameterError("DatasetSpec: image_size too small");
  if (noise_level < 0.0) {
    throw ParameterError("DatasetSpec: noise_level must be >= 0");
  }
}

double DatasetSpec::class_angle_deg(int class_id) {
  return 10.0 + 25.0 * static_cast<double>(class_id);
}

namespace {

constexpr double kDeg2Rad = std::numbers::pi / 180.0;

double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

// Intensity of a ray from `origin` in direction `angle_deg` (visual CCW from
// east, row axis down): anti-aliased by distance to the segment, with a
// brightness ramp toward the tip so the pattern is 180-degree asymmetric.
void draw_ray(GridImage& img, double origin_r, double origin_c,
              double angle_deg, double length, double half_width) {
  const double dx = std::cos(angle_deg * kDeg2Rad);
  const double dy = -std::sin(angle_deg * kDeg2Rad);
  for (std::size_t r = 0; r < img.height; ++r) {
    for (std::size_t c = 0; c < img.width; ++c) {
      const double px = static_cast<double>(c) - origin_c;
      const double py = static_cast<double>(r) - origin_r;
      const double along = px * dx + py * dy;
      if (along < 0.0 || along > length) continue;
      const double across = std::fabs(px * dy - py * dx);
      if (across > half_width + 1.0) continue;
      const double edge = clamp01(half_width + 1.0 - across);
      const double ramp = 0.45 + 0.55 * along / length;
      img.at(r, c) = std::max(img.at(r, c), clamp01(edge * ramp));
    }
  }
}

void draw_blob(GridImage& img, double center_r, double center_c,
               double sigma, double amplitude) {
  for (std::size_t r = 0; r < img.height; ++r) {
    for (std::size_t c = 0; c < img.width; ++c) {
      const double dr = static_cast<double>(r) - center_r;
      const double dc = static_cast<double>(c) - center_c;
      const double v =
          amplitude * std::exp(-(dr * dr + dc * dc) / (2.0 * sigma * sigma));
      img.at(r, c) = clamp01(img.at(r, c) + v);
    }
  }
}

GridImage sample_oriented_bar(const DatasetSpec& spec, int class_id,
                              Rng& rng) {
  const auto s = static_cast<double>(spec.image_size);
  GridImage img = GridImage::zeros(spec.image_size, spec.image_size);
  const double cy = (s - 1.0) / 2.0 + rng.uniform(-0.8, 0.8);
  const double cx = (s - 1.0) / 2.0 + rng.uniform(-0.8, 0.8);
  const double angle =
      DatasetSpec::class_angle_deg(class_id) + rng.uniform(-4.0, 4.0);
  const double length = 0.42 * s * rng.uniform(0.9, 1.1);
  draw_ray(img, cy, cx, angle, length, 0.7);

  // Orientation anchor: a fixed bright dot east of center, identical for
  // every class. It carries no class information but breaks 180-degree
  // symmetry, which is what the rotation watermark reads.
  const double anchor_dist = 0.33 * s;
  draw_blob(img, cy, cx + anchor_dist, 0.9, 1.0);

  if (spec.noise_level > 0.0) {
    for (auto& v : img.pixels.data()) {
      v = clamp01(v + spec.noise_level * rng.normal());
    }
  }
  return img;
}

GridImage sample_blob_mixture(const DatasetSpec& spec, int class_id,
                              Rng& rng) {
  const auto s = static_cast<double>(spec.image_size);
  GridImage img = GridImage::zeros(spec.image_size, spec.image_size);
  // Class layout: deterministic blob configuration per class id.
  Rng layout = Rng::stream(0x6c61796f75745fULL, static_cast<std::uint64_t>(class_id));
  const int n_blobs = 2 + static_cast<int>(layout.index(2));
  for (int b = 0; b < n_blobs; ++b) {
    const double base_r = layout.uniform(0.2 * s, 0.8 * s);
    const double base_c = layout.uniform(0.2 * s, 0.8 * s);
    const double base_sigma = layout.uniform(0.06 * s, 0.14 * s);
    draw_blob(img, base_r + rng.uniform(-1.0, 1.0),
              base_c + rng.uniform(-1.0, 1.0),
              base_sigma * rng.uniform(0.85, 1.15), rng.uniform(0.7, 1.0));
  }
  if (spec.noise_level > 0.0) {
    for (auto& v : img.pixels.data()) {
      v = clamp01(v + spec.noise_level * rng.normal());
    }
  }
  return img;
}

LabeledDataset make_split(const DatasetSpec& spec, LabeledDataset::Split split,
                          int per_class, std::uint64_t stream_tag) {
  LabeledDataset out;
  out.split = split;
  out.spec = spec;
  Rng rng = Rng::stream(spec.seed, stream_tag);
  for (int k = 0; k < spec.n_classes; ++k) {
    for (int i = 0; i < per_class; ++i) {
      out.images.push_back(spec.family == GeneratorFamily::oriented_bars
                               ? sample_oriented_bar(spec, k, rng)
                               : sample_blob_mixture(spec, k, rng));
      out.labels.push_back(k);
    }
  }
  return out;
}

}  // namespace

DataBundle generate(const DatasetSpec& spec) {
  spec.validate();
  DataBundle bundle;
  bundle.train = make_split(spec, LabeledDataset::Split::train,
                            spec.samples_per_class, /*stream_tag=*/11);
  bundle.test = make_split(spec, LabeledDataset::Split::test,
                           spec.test_per_class, /*stream_tag=*/22);
  return bundle;
}

std::vector<GridImage> make_query_pool(const LabeledDataset& dataset,
                                       PoolMode mode, std::size_t size,
                                       std::uint64_t seed) {
  if (size == 0) throw ParameterError("make_query_pool: size must be >= 1");
  if (mode == PoolMode::in_distribution) {
    if (size > dataset.size()) {
      throw ParameterError(
          "make_query_pool: in-distribution pool exceeds available images (" +
          std::to_string(size) + " > " + std::to_string(dataset.size()) + ")");
    }
    std::vector<std::size_t> order(dataset.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng rng = Rng::stream(seed, 33);
    rng.shuffle(order);
    std::vector<GridImage> pool;
    pool.reserve(size);
    for (std::size_t i = 0; i < size; ++i) {
      pool.push_back(dataset.images[order[i]]);
    }
    return pool;
  }
  // Out-of-distribution: the other generator family at the same size.
  DatasetSpec other = dataset.spec;
  other.family = dataset.spec.family == GeneratorFamily::oriented_bars
                     ? GeneratorFamily::blob_mixtures
                     : GeneratorFamily::oriented_bars;
  other.seed = derive_seed(seed, 44);
  other.samples_per_class = static_cast<int>(
      (size + other.n_classes - 1) / static_cast<std::size_t>(other.n_classes));
  other.test_per_class = 1;
  DataBundle bundle = generate(other);
  bundle.train.images.resize(size);
  return bundle.train.images;
}

void export_csv(const LabeledDataset& dataset,
                const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw FileError("export_csv: cannot open " + path.string());
  char buf[40];
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    out << dataset.labels[i];
    for (double v : dataset.images[i].pixels.data()) {
      std::snprintf(buf, sizeof(buf), "%.17g", v);
      out << ',' << buf;
    }
    out << '\n';
  }
  if (!out) throw FileError("export_csv: write failed: " + path.string());
}

LabeledDataset import_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FileError("import_csv: cannot open " + path.string());
  LabeledDataset out;
  std::string line;
  std::size_t expected_pixels = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string field;
    if (!std::getline(ss, field, ',')) {
      throw FormatError("import_csv: empty row");
    }
    out.labels.push_back(std::stoi(field));
    std::vector<double> pixels;
    while (std::getline(ss, field, ',')) {
      pixels.push_back(std::strtod(field.c_str(), nullptr));
    }
    if (expected_pixels == 0) {
      expected_pixels = pixels.size();
      const auto side =
          static_cast<std::size_t>(std::lround(std::sqrt(
              static_cast<double>(expected_pixels))));
      if (side * side != expected_pixels || side == 0) {
        throw FormatError("import_csv: pixel count is not a square");
      }
    } else if (pixels.size() != expected_pixels) {
      throw FormatError("import_csv: ragged rows");
    }
    const auto side = static_cast<std::size_t>(
        std::lround(std::sqrt(static_cast<double>(expected_pixels))));
    out.images.push_back(
        GridImage{side, side, Tensor({side, side}, std::move(pixels))});
  }
  if (out.images.empty()) throw FormatError("import_csv: no rows");
  return out;
}

}  // namespace exlab
