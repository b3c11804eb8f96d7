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

#include "exlab/augment.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "exlab/errors.hpp"

namespace exlab {

namespace {

double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

void clamp_image(GridImage& img) {
  for (auto& v : img.pixels.data()) v = clamp01(v);
}

void check_range(const std::optional<Range>& r, const char* name, double lo,
                 double hi, bool lo_exclusive = false) {
  if (!r) return;
  if (r->lo > r->hi) {
    throw ParameterError(std::string("ViewPolicy: empty range for ") + name);
  }
  const bool lo_ok = lo_exclusive ? r->lo > lo : r->lo >= lo;
  if (!lo_ok || r->hi > hi) {
    throw ParameterError(std::string("ViewPolicy: range out of domain for ") +
                         name);
  }
}

}  // namespace

void ViewPolicy::validate() const {
  check_range(crop_scale, "crop_scale", 0.0, 1.0, /*lo_exclusive=*/true);
  if (flip_prob < 0.0 || flip_prob > 1.0) {
    throw ParameterError("ViewPolicy: flip_prob must be in [0,1]");
  }
  check_range(jitter_scale, "jitter_scale", 0.0, 1e6, /*lo_exclusive=*/true);
  check_range(jitter_shift, "jitter_shift", -1.0, 1.0);
  check_range(blur_sigma, "blur_sigma", 0.0, 1e3);
  if (rotation_deg && rotation_deg->lo > rotation_deg->hi) {
    throw ParameterError("ViewPolicy: empty rotation range");
  }
}

bool ViewPolicy::empty() const {
  return !crop_scale && flip_prob == 0.0 && !jitter_scale && !jitter_shift &&
         !blur_sigma && !rotation_deg;
}

ViewPolicy ViewPolicy::standard() {
  ViewPolicy p;
  p.crop_scale = Range{0.6, 1.0};
  p.flip_prob = 0.5;
  p.jitter_scale = Range{0.8, 1.2};
  p.jitter_shift = Range{-0.1, 0.1};
  p.blur_sigma = Range{0.0, 1.0};
  return p;
}

GridImage rotate(const GridImage& img, double angle_deg) {
  double a = std::fmod(angle_deg, 360.0);
  if (a < 0.0) a += 360.0;
  if (a == 0.0) return img;

  const double rad = a * std::numbers::pi / 180.0;
  const double c = std::cos(rad), s = std::sin(rad);
  const double cy = (static_cast<double>(img.height) - 1.0) / 2.0;
  const double cx = (static_cast<double>(img.width) - 1.0) / 2.0;

  GridImage out = GridImage::zeros(img.height, img.width);
  for (std::size_t r = 0; r < img.height; ++r) {
    for (std::size_t col = 0; col < img.width; ++col) {
      // Inverse map: rotate the destination offset by -angle. Row axis
      // points down, so visual CCW is (x,y) -> (x cos + y sin, -x sin + y cos).
      const double xd = static_cast<double>(col) - cx;
      const double yd = static_cast<double>(r) - cy;
      const double xs = xd * c - yd * s;
      const double ys = xd * s + yd * c;
      const long sr = std::lround(ys + cy);
      const long sc = std::lround(xs + cx);
      if (sr >= 0 && sc >= 0 && sr < static_cast<long>(img.height) &&
          sc < static_cast<long>(img.width)) {
        out.at(r, col) = img.at(static_cast<std::size_t>(sr),
                                static_cast<std::size_t>(sc));
      }
    }
  }
  clamp_image(out);
  return out;
}

GridImage hflip(const GridImage& img) {
  GridImage out = GridImage::zeros(img.height, img.width);
  for (std::size_t r = 0; r < img.height; ++r) {
    for (std::size_t c = 0; c < img.width; ++c) {
      out.at(r, c) = img.at(r, img.width - 1 - c);
    }
  }
  return out;
}

GridImage crop_resize(const GridImage& img, const CropBox& box) {
  if (box.h < 2 || box.w < 2 || box.top + box.h > img.height ||
      box.left + box.w > img.width) {
    throw ParameterError("crop_resize: box out of bounds or smaller than 2x2");
  }
  GridImage out = GridImage::zeros(img.height, img.width);
  // Corner-aligned mapping: a full-frame box reproduces the image exactly.
  const double sy = img.height > 1 ? static_cast<double>(box.h - 1) /
                                         static_cast<double>(img.height - 1)
                                   : 0.0;
  const double sx = img.width > 1 ? static_cast<double>(box.w - 1) /
                                        static_cast<double>(img.width - 1)
                               : 0.0;
  for (std::size_t r = 0; r < img.height; ++r) {
    const double fy = static_cast<double>(box.top) + sy * static_cast<double>(r);
    const std::size_t y0 = std::min(static_cast<std::size_t>(fy),
                                    box.top + box.h - 2);
    const double wy = fy - static_cast<double>(y0);
    for (std::size_t c = 0; c < img.width; ++c) {
      const double fx =
          static_cast<double>(box.left) + sx * static_cast<double>(c);
      const std::size_t x0 = std::min(static_cast<std::size_t>(fx),
                                      box.left + box.w - 2);
      const double wx = fx - static_cast<double>(x0);
      const double top = (1.0 - wx) * img.at(y0, x0) + wx * img.at(y0, x0 + 1);
      const double bot =
          (1.0 - wx) * img.at(y0 + 1, x0) + wx * img.at(y0 + 1, x0 + 1);
      out.at(r, c) = (1.0 - wy) * top + wy * bot;
    }
  }
  clamp_image(out);
  return out;
}

GridImage jitter(const GridImage& img, double scale, double shift) {
  if (!(scale > 0.0)) throw ParameterError("jitter: scale must be > 0");
  GridImage out = img;
  for (auto& v : out.pixels.data()) v = clamp01(scale * v + shift);
  return out;
}

GridImage gaussian_blur(const GridImage& img, double sigma) {
  if (sigma < 0.0) throw ParameterError("gaussian_blur: sigma must be >= 0");
  if (sigma == 0.0) return img;

  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> kernel(2 * radius + 1);
  double total = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    const double v = std::exp(-0.5 * (i / sigma) * (i / sigma));
    kernel[i + radius] = v;
    total += v;
  }
  for (auto& v : kernel) v /= total;

  const long h = static_cast<long>(img.height);
  const long w = static_cast<long>(img.width);
  // Horizontal pass (zero padding), then vertical.
  GridImage mid = GridImage::zeros(img.height, img.width);
  for (long r = 0; r < h; ++r) {
    for (long c = 0; c < w; ++c) {
      double acc = 0.0;
      for (int i = -radius; i <= radius; ++i) {
        const long cc = c + i;
        if (cc >= 0 && cc < w) acc += kernel[i + radius] * img.at(r, cc);
      }
      mid.at(r, c) = acc;
    }
  }
  GridImage out = GridImage::zeros(img.height, img.width);
  for (long r = 0; r < h; ++r) {
    for (long c = 0; c < w; ++c) {
      double acc = 0.0;
      for (int i = -radius; i <= radius; ++i) {
        const long rr = r + i;
        if (rr >= 0 && rr < h) acc += kernel[i + radius] * mid.at(rr, c);
      }
      out.at(r, c) = acc;
    }
  }
  clamp_image(out);
  return out;
}

ViewDescriptor sample_descriptor(const ViewPolicy& policy, std::size_t h,
                                 std::size_t w, Rng& rng) {
  policy.validate();
  ViewDescriptor d;
  if (policy.crop_scale) {
    const double s = rng.uniform(policy.crop_scale->lo, policy.crop_scale->hi);
    const auto side = [s](std::size_t full) {
      const auto v = static_cast<std::size_t>(
          std::lround(s * static_cast<double>(full)));
      return std::clamp<std::size_t>(v, 2, full);
    };
    CropBox box;
    box.h = side(h);
    box.w = side(w);
    box.top = rng.index(h - box.h + 1);
    box.left = rng.index(w - box.w + 1);
    d.crop = box;
  }
  if (policy.flip_prob > 0.0) d.flipped = rng.bernoulli(policy.flip_prob);
  if (policy.jitter_scale) {
    d.jitter_scale =
        rng.uniform(policy.jitter_scale->lo, policy.jitter_scale->hi);
  }
  if (policy.jitter_shift) {
    d.jitter_shift =
        rng.uniform(policy.jitter_shift->lo, policy.jitter_shift->hi);
  }
  if (policy.blur_sigma) {
    d.blur_sigma = rng.uniform(policy.blur_sigma->lo, policy.blur_sigma->hi);
  }
  if (policy.rotation_deg) {
    d.rotation_deg =
        rng.uniform(policy.rotation_deg->lo, policy.rotation_deg->hi);
  }
  return d;
}

GridImage apply_view(const GridImage& img, const ViewDescriptor& desc) {
  GridImage out = img;
  if (desc.crop) out = crop_resize(out, *desc.crop);
  if (desc.flipped) out = hflip(out);
  if (desc.jitter_scale || desc.jitter_shift) {
    out = jitter(out, desc.jitter_scale.value_or(1.0),
                 desc.jitter_shift.value_or(0.0));
  }
  if (desc.blur_sigma && *desc.blur_sigma > 0.0) {
    out = gaussian_blur(out, *desc.blur_sigma);
  }
  if (desc.rotation_deg) out = rotate(out, *desc.rotation_deg);
  return out;
}

ViewPair sample_view_pair(const GridImage& img, const ViewPolicy& policy,
                          Rng& rng) {
  ViewPair pair;
  pair.first_desc = sample_descriptor(policy, img.height, img.width, rng);
  pair.second_desc = sample_descriptor(policy, img.height, img.width, rng);
  pair.first = apply_view(img, pair.first_desc);
  pair.second = apply_view(img, pair.second_desc);
  return pair;
}

WatermarkPair sample_watermark_pair(const GridImage& img, Rng& rng) {
  WatermarkPair pair;
  // Half-open intervals keep the label well defined at 0/180/360.
  pair.angle0 = rng.uniform(0.0, 180.0);
  pair.angle1 = rng.uniform(180.0, 360.0);
  pair.view0 = rotate(img, pair.angle0);
  pair.view1 = rotate(img, pair.angle1);
  return pair;
}

std::vector<double> flatten(const GridImage& img) {
  const auto d = img.pixels.data();
  return std::vector<double>(d.begin(), d.end());
}

Tensor images_to_batch(std::span<const GridImage> images) {
  if (images.empty()) throw ParameterError("images_to_batch: empty batch");
  const std::size_t dim = images.front().height * images.front().width;
  Tensor batch({images.size(), dim});
  for (std::size_t i = 0; i < images.size(); ++i) {
    const auto src = images[i].pixels.data();
    if (src.size() != dim) {
      throw DimensionError("images_to_batch: inconsistent image sizes");
    }
    auto dst = batch.row_span(i);
    std::copy(src.begin(), src.end(), dst.begin());
  }
  return batch;
}

Tensor image_to_row(const GridImage& img) {
  return Tensor({1, img.height * img.width}, flatten(img));
}

}  // namespace exlab
