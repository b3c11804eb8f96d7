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

#include "exlab/defense_detect.hpp"
#include "exlab/linear_eval.hpp"
#include "exlab/network.hpp"
#include "exlab/rng.hpp"

namespace exlab {

struct NoiseConfig {
  double mean = 0.0;
  double sigma = 0.0;

  void validate() const;
};

/// y + n with n iid Normal(mean, sigma^2) per coordinate.
std::vector<double> perturb_noise(std::span<const double> y,
                                  const NoiseConfig& cfg, Rng& rng);

/// If the detector flagged this query, the output is REPLACED by a noise
/// draw (not added to); otherwise it passes through untouched.
std::vector<double> perturb_if_similar(std::span<const double> y,
                                       const SimilarityVerdict& verdict,
                                       const NoiseConfig& big_noise, Rng& rng);

/// Flattened parameter-space direction a = -(2/n) J^T (F(x) - target),
/// where J is the Jacobian of the model output w.r.t. its parameters at the
/// single input row x. Computed from the explicit Jacobian (one backward
/// per output coordinate), independently of the aggregated-backward path it
/// is cross-checked against.
std::vector<double> attacker_grad(const Network& f, const Tensor& x_row,
                                  std::span<const double> target);

/// Flattened phi-direction of the legitimate user's step:
/// sum_k t_k * d(log softmax(G(y))_k)/d(phi) for the linear softmax
/// classifier G = (W, b). Equals minus the cross-entropy gradient.
std::vector<double> legit_grad(const LinearProbe& g, std::span<const double> y,
                               std::span<const double> t);
std::vector<double> legit_grad(const LinearProbe& g, std::span<const double> y,
                               int target_class);

struct PoisonConfig {
  Network surrogate_encoder;   // stands in for the attacker's model F
  LinearProbe surrogate_probe; // stands in for the legitimate user's G
  int target_class = 0;        // the label t the victim assumes
  double epsilon = 0.0;        // l2 budget for || y~ - y_v ||
  double beta = 1.0;           // weight of the legitimate-user term
  int steps = 100;
  double step_size = 0.0;      // 0 -> epsilon / 20

  void validate() const;
};

struct PoisonResult {
  std::vector<double> y_tilde;
  double sim_ab = 1.0;   // cosine of attacker gradients at the final y~
  double sim_cd = 1.0;   // cosine of legitimate gradients at the final y~
  double objective = 0.0;  // sim_ab - beta * sim_cd
};

/// Projected gradient descent over y~ of sim(a, b(y~)) - beta*sim(c, d(y~)),
/// constrained to the epsilon ball around y_v. x_row is the query that
/// produced y_v.
PoisonResult poison(std::span<const double> y_v, const Tensor& x_row,
                    const PoisonConfig& cfg);

}  // namespace exlab
