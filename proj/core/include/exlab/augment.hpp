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

#include <optional>
#include <span>
#include <vector>

#include "exlab/rng.hpp"
#include "exlab/tensor.hpp"

namespace exlab {

/// Single-channel image with values in [0,1]. Every operator clamps its
/// output back into [0,1].
struct GridImage {
  std::size_t height = 0;
  std::size_t width = 0;
  Tensor pixels;  // [H x W]

  static GridImage zeros(std::size_t h, std::size_t w) {
    return GridImage{h, w, Tensor::matrix(h, w)};
  }
  double& at(std::size_t r, std::size_t c) { return pixels.at(r, c); }
  double at(std::size_t r, std::size_t c) const { return pixels.at(r, c); }
};

struct Range {
  double lo = 0.0;
  double hi = 0.0;
};

struct CropBox {
  std::size_t top = 0, left = 0, h = 0, w = 0;
};

/// Which operators a view sampler may apply, with their parameter ranges.
/// Rotation is reserved for the watermark task and stays unset in standard
/// contrastive policies.
struct ViewPolicy {
  std::optional<Range> crop_scale;     // linear crop scale, in (0, 1]
  double flip_prob = 0.0;
  std::optional<Range> jitter_scale;   // > 0
  std::optional<Range> jitter_shift;
  std::optional<Range> blur_sigma;     // >= 0
  std::optional<Range> rotation_deg;

  void validate() const;
  bool empty() const;

  /// SimCLR-like default chain used by victims: crop, flip, jitter, blur.
  static ViewPolicy standard();
};

/// The exact operator parameters one sampled view was produced with.
struct ViewDescriptor {
  std::optional<CropBox> crop;
  bool flipped = false;
  std::optional<double> jitter_scale;
  std::optional<double> jitter_shift;
  std::optional<double> blur_sigma;
  std::optional<double> rotation_deg;
};

struct ViewPair {
  GridImage first, second;
  ViewDescriptor first_desc, second_desc;
};

/// Rotation about the image center, positive angle counterclockwise,
/// nearest-neighbor resampling, out-of-frame pixels filled with 0. The
/// angle is reduced mod 360.
GridImage rotate(const GridImage& img, double angle_deg);

/// Column order reversed.
GridImage hflip(const GridImage& img);

/// Crops the box and bilinearly resizes it back to the full H x W frame.
/// Box must lie inside the image with h, w >= 2.
GridImage crop_resize(const GridImage& img, const CropBox& box);

/// clamp01(scale * p + shift) per pixel; scale must be > 0.
GridImage jitter(const GridImage& img, double scale, double shift);

/// Separable convolution with a 3-sigma-truncated normalized Gaussian.
/// sigma 0 is the identity.
GridImage gaussian_blur(const GridImage& img, double sigma);

ViewDescriptor sample_descriptor(const ViewPolicy& policy, std::size_t h,
                                 std::size_t w, Rng& rng);
GridImage apply_view(const GridImage& img, const ViewDescriptor& desc);

/// Two independently sampled operator chains over the same source image.
ViewPair sample_view_pair(const GridImage& img, const ViewPolicy& policy,
                          Rng& rng);

/// The watermark augmentation: view0 rotated by an angle uniform in
/// [0, 180) carries label 0; view1 by an angle in [180, 360) carries
/// label 1.
struct WatermarkPair {
  GridImage view0, view1;
  double angle0 = 0.0, angle1 = 0.0;
  // Labels are 0 and 1 by construction.
  static constexpr int kLabel0 = 0;
  static constexpr int kLabel1 = 1;
};

WatermarkPair sample_watermark_pair(const GridImage& img, Rng& rng);

/// Row-major flattening for network input.
std::vector<double> flatten(const GridImage& img);
Tensor images_to_batch(std::span<const GridImage> images);
Tensor image_to_row(const GridImage& img);

}  // namespace exlab
