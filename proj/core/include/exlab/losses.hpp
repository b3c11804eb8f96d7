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
#include <vector>

#include "exlab/tensor.hpp"

namespace exlab {

enum class LossKind {
  mse,
  neg_cosine_sym,
  info_nce,
  soft_nn,
  sup_con,
  barlow,
  wasserstein_1d,
};

const char* to_string(LossKind k);
LossKind loss_kind_from_string(const std::string& s);

/// Loss hyperparameters; defaults follow the conventions of the frameworks
/// each loss comes from and are exposed through configs.
struct LossHyper {
  double temperature = 0.5;          // info_nce / sup_con
  double soft_nn_temperature = 1.0;
  double barlow_lambda = 5e-3;
};

/// Scalar value plus exact gradients, one tensor per input batch in call
/// order. Inputs that are gradient-stopped get zero tensors.
struct LossOutput {
  double value = 0.0;
  std::vector<Tensor> grads;
};

/// Mean over B*d of squared differences; y_v is constant (its gradient is
/// omitted). grads = {d/d y_a}.
LossOutput mse_loss(const Tensor& y_a, const Tensor& y_v);

/// Symmetrized negative cosine: mean_B[-cos(p1,z2)/2 - cos(p2,z1)/2] with
/// stop-gradient on z2 and z1. grads = {d/dp1, 0, d/dp2, 0}.
LossOutput neg_cosine_sym(const Tensor& p1, const Tensor& z2, const Tensor& p2,
                          const Tensor& z1);

/// NT-Xent over the 2B pooled views of (z, z'); rows are L2-normalized
/// internally and each anchor's positive is its paired view. Requires
/// B >= 2. grads = {d/dz, d/dz'}.
LossOutput info_nce(const Tensor& z, const Tensor& z_prime,
                    double temperature);

/// Soft nearest neighbor over raw (unnormalized) rows: positives are rows
/// with the same source id. Every row needs at least one positive and one
/// negative. grads = {d/d reps}.
LossOutput soft_nn(const Tensor& reps, const std::vector<int>& source_ids,
                   double temperature);

/// Supervised contrastive (mean over anchors of the mean-log-prob form);
/// positives are all other same-label rows; rows normalized internally.
/// grads = {d/dz}.
LossOutput sup_con(const Tensor& z, const std::vector<int>& labels,
                   double temperature);

/// Barlow Twins: columns standardized over the batch (std floor 1e-8),
/// C = (1/B) z_std^T z'_std, value = sum_i (1-C_ii)^2 +
/// lambda * sum_{i!=j} C_ij^2. grads = {d/dz, d/dz'}.
LossOutput barlow(const Tensor& z, const Tensor& z_prime,
                  double lambda_offdiag);

/// Per-dimension 1-D 1-Wasserstein distance between the two batch empirical
/// distributions (sorted-column matching), averaged over dimensions; y_v
/// constant. grads = {d/d y_a}.
LossOutput wasserstein_1d(const Tensor& y_a, const Tensor& y_v);

/// Softmax cross-entropy over logits [B x C] with integer labels; utility
/// shared by the augmentation predictor, supervised training and linear
/// probes. grads = {d/d logits}.
LossOutput softmax_cross_entropy(const Tensor& logits,
                                 const std::vector<int>& labels);

/// Dispatch for stealing objectives: loss between the attacker batch
/// (differentiable) and the victim batch (constant), returning the gradient
/// w.r.t. y_a. sup_con requires per-row labels. neg_cosine_sym needs two
/// views per input and is handled inside the attack loop, not here.
struct StealLoss {
  double value = 0.0;
  Tensor grad_attacker;
};

StealLoss extraction_loss(LossKind kind, const Tensor& y_a, const Tensor& y_v,
                          const LossHyper& hyper,
                          const std::vector<int>* labels = nullptr);

}  // namespace exlab
