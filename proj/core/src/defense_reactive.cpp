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

#include "exlab/defense_reactive.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "exlab/errors.hpp"

namespace exlab {

const char* to_string(Claim c) {
  return c == Claim::stolen ? "stolen" : "inconclusive";
}

namespace {

// Cholesky solve of the SPD system M X = B for the small ridge systems the
// adapter needs.
std::vector<std::vector<double>> solve_spd(
    std::vector<std::vector<double>> m, std::vector<std::vector<double>> b) {
  const std::size_t n = m.size();
  // In-place Cholesky: m becomes lower-triangular L.
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      double sum = m[i][j];
      for (std::size_t k = 0; k < j; ++k) sum -= m[i][k] * m[j][k];
      if (i == j) {
        if (sum <= 0.0) {
          throw NumericError("ridge adapter: matrix not positive definite");
        }
        m[i][i] = std::sqrt(sum);
      } else {
        m[i][j] = sum / m[j][j];
      }
    }
  }
  const std::size_t cols = b.front().size();
  // Forward then backward substitution per right-hand side column.
  for (std::size_t c = 0; c < cols; ++c) {
    for (std::size_t i = 0; i < n; ++i) {
      double sum = b[i][c];
      for (std::size_t k = 0; k < i; ++k) sum -= m[i][k] * b[k][c];
      b[i][c] = sum / m[i][i];
    }
    for (std::size_t i = n; i-- > 0;) {
      double sum = b[i][c];
      for (std::size_t k = i + 1; k < n; ++k) sum -= m[k][i] * b[k][c];
      b[i][c] = sum / m[i][i];
    }
  }
  return b;
}

// Ridge map from suspect representations to victim representations,
// fit on the adapter's held-out images.
Tensor fit_adapter(const Network& suspect, const AdapterOptions& opts,
                   std::size_t victim_dim) {
  if (opts.victim_encoder == nullptr || opts.fit_images.empty()) {
    throw DimensionError(
        "watermark_success_rate: suspect width differs from the predictor "
        "input and no adapter material was provided");
  }
  const Tensor a = forward_output(suspect, images_to_batch(opts.fit_images));
  const Tensor b = forward_output(*opts.victim_encoder,
                                  images_to_batch(opts.fit_images));
  if (b.cols() != victim_dim) {
    throw DimensionError("adapter: victim encoder width mismatch");
  }
  const std::size_t da = a.cols(), dv = b.cols();
  std::vector<std::vector<double>> ata(da, std::vector<double>(da, 0.0));
  std::vector<std::vector<double>> atb(da, std::vector<double>(dv, 0.0));
  for (std::size_t r = 0; r < a.rows(); ++r) {
    const auto ar = a.row_span(r);
    const auto br = b.row_span(r);
    for (std::size_t i = 0; i < da; ++i) {
      for (std::size_t j = 0; j < da; ++j) ata[i][j] += ar[i] * ar[j];
      for (std::size_t j = 0; j < dv; ++j) atb[i][j] += ar[i] * br[j];
    }
  }
  for (std::size_t i = 0; i < da; ++i) ata[i][i] += opts.ridge_lambda;
  const auto w = solve_spd(std::move(ata), std::move(atb));
  Tensor adapter({da, dv});
  for (std::size_t i = 0; i < da; ++i) {
    for (std::size_t j = 0; j < dv; ++j) adapter.at(i, j) = w[i][j];
  }
  return adapter;
}

}  // namespace

double watermark_success_rate(const Network& suspect,
                              const Network& aug_predictor,
                              std::span<const GridImage> probe_images,
                              std::size_t n_pairs, Rng& rng,
                              const AdapterOptions* adapter) {
  if (probe_images.empty()) {
    throw ParameterError("watermark_success_rate: no probe images");
  }
  if (n_pairs == 0) {
    throw ParameterError("watermark_success_rate: n_pairs must be >= 1");
  }
  const std::size_t predictor_in = aug_predictor.input_dim();
  Tensor adapter_map;
  bool use_adapter = false;
  if (suspect.output_dim() != predictor_in) {
    if (adapter == nullptr) {
      throw DimensionError(
          "watermark_success_rate: suspect representation width " +
          std::to_string(suspect.output_dim()) +
          " does not match the predictor input " +
          std::to_string(predictor_in) + " (no adapter provided)");
    }
    adapter_map = fit_adapter(suspect, *adapter, predictor_in);
    use_adapter = true;
  }

  std::vector<GridImage> views;
  views.reserve(2 * n_pairs);
  std::vector<int> labels;
  labels.reserve(2 * n_pairs);
  for (std::size_t i = 0; i < n_pairs; ++i) {
    const GridImage& img = probe_images[rng.index(probe_images.size())];
    WatermarkPair pair = sample_watermark_pair(img, rng);
    views.push_back(std::move(pair.view0));
    labels.push_back(WatermarkPair::kLabel0);
    views.push_back(std::move(pair.view1));
    labels.push_back(WatermarkPair::kLabel1);
  }
  Tensor reps = forward_output(suspect, images_to_batch(views));
  if (use_adapter) reps = matmul(reps, adapter_map);
  const Tensor logits = forward_output(aug_predictor, reps);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const auto row = logits.row_span(i);
    const int pred = row[1] > row[0] ? 1 : 0;
    if (pred == labels[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(labels.size());
}

std::vector<double> bootstrap_watermark_rates(
    const Network& suspect, const Network& aug_predictor,
    std::span<const GridImage> pool, std::size_t n_sets,
    std::size_t pairs_per_set, Rng& rng, const AdapterOptions* adapter) {
  if (n_sets == 0 || pool.size() < n_sets) {
    throw ParameterError(
        "bootstrap_watermark_rates: pool must cover n_sets disjoint subsets");
  }
  std::vector<std::size_t> order(pool.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  rng.shuffle(order);
  const std::size_t per_set = pool.size() / n_sets;

  std::vector<double> rates;
  rates.reserve(n_sets);
  for (std::size_t s = 0; s < n_sets; ++s) {
    std::vector<GridImage> subset;
    subset.reserve(per_set);
    for (std::size_t i = 0; i < per_set; ++i) {
      subset.push_back(pool[order[s * per_set + i]]);
    }
    rates.push_back(watermark_success_rate(suspect, aug_predictor, subset,
                                           pairs_per_set, rng, adapter));
  }
  return rates;
}

WatermarkVerdict ownership_ttest(std::span<const double> rates,
                                 double baseline) {
  if (rates.size() < 20) {
    throw ParameterError(
        "ownership_ttest: need at least 20 resampled rate estimates");
  }
  WatermarkVerdict verdict;
  verdict.success_rate = mean(rates);
  verdict.ttest = one_sample_t(rates, baseline);
  verdict.claim =
      verdict.ttest.p < 0.05 ? Claim::stolen : Claim::inconclusive;
  return verdict;
}

DIScores di_scores(const Network& encoder, const Network& head,
                   std::span<const GridImage> private_set,
                   std::span<const GridImage> public_set, int n_aug,
                   const ViewPolicy& policy, Rng& rng) {
  if (private_set.size() != public_set.size()) {
    throw ParameterError("di_scores: private/public samples must be equal-sized");
  }
  if (private_set.empty()) throw ParameterError("di_scores: empty samples");
  if (n_aug < 1) throw ParameterError("di_scores: n_aug must be >= 1");

  auto score_point = [&](const GridImage& img) {
    const Tensor base =
        forward_output(head, forward_output(encoder, image_to_row(img)));
    double total = 0.0;
    for (int a = 0; a < n_aug; ++a) {
      const ViewDescriptor desc =
          sample_descriptor(policy, img.height, img.width, rng);
      const GridImage view = apply_view(img, desc);
      const Tensor z =
          forward_output(head, forward_output(encoder, image_to_row(view)));
      total += l2_distance(base.row_span(0), z.row_span(0));
    }
    return total / static_cast<double>(n_aug);
  };

  DIScores scores;
  scores.private_scores.reserve(private_set.size());
  for (const auto& img : private_set) {
    scores.private_scores.push_back(score_point(img));
  }
  scores.public_scores.reserve(public_set.size());
  for (const auto& img : public_set) {
    scores.public_scores.push_back(score_point(img));
  }
  return scores;
}

DIVerdict di_test(const DIScores& scores) {
  if (scores.private_scores.size() != scores.public_scores.size()) {
    throw ParameterError("di_test: score vectors must be equal-sized");
  }
  DIVerdict verdict;
  verdict.ttest = welch_t(scores.public_scores, scores.private_scores);
  verdict.verdict =
      verdict.ttest.p < 0.05 ? Claim::stolen : Claim::inconclusive;
  return verdict;
}

double rep_distance(const Network& reference, const Network& candidate,
                    std::span<const GridImage> data) {
  if (reference.output_dim() != candidate.output_dim()) {
    throw DimensionError("rep_distance: representation widths differ");
  }
  if (data.empty()) throw ParameterError("rep_distance: empty data");
  const Tensor batch = images_to_batch(data);
  const Tensor a = forward_output(reference, batch);
  const Tensor b = forward_output(candidate, batch);
  double total = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i) {
    total += l2_distance(a.row_span(i), b.row_span(i));
  }
  return total / static_cast<double>(a.rows());
}

std::string verdict_json(const std::string& test_name, const TTestResult& t,
                         Claim claim) {
  char buf[256];
  std::snprintf(buf, sizeof(buf),
                "{\"test\": \"%s\", \"t\": %.17g, \"df\": %.17g, "
                "\"p\": %.17g, \"delta_mu\": %.17g, \"claim\": \"%s\"}",
                test_name.c_str(), t.t, t.df, t.p, t.delta_mu,
                to_string(claim));
  return std::string(buf);
}

}  // namespace exlab
