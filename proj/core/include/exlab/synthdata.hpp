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

#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "exlab/augment.hpp"

namespace exlab {

enum class GeneratorFamily { oriented_bars, blob_mixtures };

const char* to_string(GeneratorFamily f);
GeneratorFamily family_from_string(const std::string& s);

/// Deterministic synthetic data. oriented_bars draws a class-specific ray
/// from the image center plus a shared orientation anchor dot, so the data
/// is both class-separable and rotation-asymmetric (the watermark rotation
/// task is learnable). blob_mixtures is the out-of-distribution family.
struct DatasetSpec {
  int n_classes = 8;
  int samples_per_class = 200;       // train split
  int test_per_class = 50;
  std::size_t image_size = 16;       // H == W
  GeneratorFamily family = GeneratorFamily::oriented_bars;
  double noise_level = 0.02;
  std::uint64_t seed = 1;

  void validate() const;
  /// Base ray angle (degrees) for a class; spaced 25 degrees apart starting
  /// at 10 so that no two classes are 180-degree or mirror counterparts.
  static double class_angle_deg(int class_id);
};

struct LabeledDataset {
  enum class Split { train, test };
  std::vector<GridImage> images;
  std::vector<int> labels;
  Split split = Split::train;
  DatasetSpec spec;

  std::size_t size() const { return images.size(); }
};

struct DataBundle {
  LabeledDataset train;
  LabeledDataset test;
};

/// Pure function of the spec; train/test are drawn from disjoint
/// substreams and class-balanced.
DataBundle generate(const DatasetSpec& spec);

enum class PoolMode { in_distribution, out_distribution };

/// Unlabeled attacker query pool. in_distribution samples without
/// replacement from the given dataset's images; out_distribution generates
/// from the other family at the same image size.
std::vector<GridImage> make_query_pool(const LabeledDataset& dataset,
                                       PoolMode mode, std::size_t size,
                                       std::uint64_t seed);

/// CSV interchange: one row per sample, label first then H*W pixel reals
/// (round-trip exact via shortest-representation formatting).
void export_csv(const LabeledDataset& dataset,
                const std::filesystem::path& path);
LabeledDataset import_csv(const std::filesystem::path& path);

}  // namespace exlab
