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

#include <string>

#include "exlab/augment.hpp"
#include "exlab/network.hpp"
#include "exlab/stats.hpp"

namespace exlab {

enum class Claim { stolen, inconclusive };

const char* to_string(Claim c);

/// When a suspect's representation width differs from the predictor input,
/// a ridge-regression adapter from suspect space to the victim's
/// representation space is fitted on held-out images first (and flagged in
/// the verdict).
struct AdapterOptions {
  const Network* victim_encoder = nullptr;
  std::span<const GridImage> fit_images;
  double ridge_lambda = 1e-2;
};

/// Accuracy of aug_predictor(suspect(rotated view)) against the rotation
/// interval labels, over 2*n_pairs watermark views of images drawn from
/// probe_images. Throws DimensionError when widths mismatch and no adapter
/// material is supplied.
double watermark_success_rate(const Network& suspect,
                              const Network& aug_predictor,
                              std::span<const GridImage> probe_images,
                              std::size_t n_pairs, Rng& rng,
                              const AdapterOptions* adapter = nullptr);

/// Rates over n_sets disjoint probe subsets (the sample the ownership
/// t-test runs on).
std::vector<double> bootstrap_watermark_rates(
    const Network& suspect, const Network& aug_predictor,
    std::span<const GridImage> pool, std::size_t n_sets,
    std::size_t pairs_per_set, Rng& rng,
    const AdapterOptions* adapter = nullptr);

struct WatermarkVerdict {
  double success_rate = 0.0;  // mean of the rate sample
  TTestResult ttest;
  Claim claim = Claim::inconclusive;
  bool adapter_used = false;
};

/// One-sided test of mean rate > baseline (0.5 = chance on balanced
/// watermark pairs); claim = stolen iff p < 0.05. Needs >= 20 rates; with
/// all rates equal the exact decision path applies.
WatermarkVerdict ownership_ttest(std::span<const double> rates,
                                 double baseline = 0.5);

struct DIScores {
  std::vector<double> private_scores;  // l_t
  std::vector<double> public_scores;   // l_p
};

/// Per-point loss score: mean over n_aug augmentations of
/// || g(f(x)) - g(f(t(x))) ||_2. Private and public samples must be
/// equal-sized.
DIScores di_scores(const Network& encoder, const Network& head,
                   std::span<const GridImage> private_set,
                   std::span<const GridImage> public_set, int n_aug,
                   const ViewPolicy& policy, Rng& rng);

struct DIVerdict {
  TTestResult ttest;
  Claim verdict = Claim::inconclusive;
};

/// One-sided Welch test with alternative mean(l_p) > mean(l_t); rejection
/// (p < 0.05) reads as "the model fits its private data tighter" and yields
/// the stolen claim.
DIVerdict di_test(const DIScores& scores);

/// Mean over data of || f_ref(x) - f_cand(x) ||_2.
double rep_distance(const Network& reference, const Network& candidate,
                    std::span<const GridImage> data);

/// External interface: one JSON object per test,
/// {"test": ..., "t": ..., "df": ..., "p": ..., "delta_mu": ..., "claim": ...}.
std::string verdict_json(const std::string& test_name, const TTestResult& t,
                         Claim claim);

}  // namespace exlab
