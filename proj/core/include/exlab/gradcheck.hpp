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

#include <functional>

#include "exlab/network.hpp"

namespace exlab {

/// Scalar objective of the network output plus its gradient w.r.t. that
/// output; the glue between a loss and the parameter-space checker.
struct LossEval {
  double value = 0.0;
  Tensor output_grad;
};

using OutputLoss = std::function<LossEval(const Tensor& output)>;

/// Max over parameters of |given - central difference| /
/// max(|given|, |numeric|, 1e-12). The comparator used both by
/// finite_diff_check and by tests that feed deliberately wrong gradients.
double finite_diff_error(const Network& net, const OutputLoss& loss,
                         const Tensor& batch, double eps,
                         const ParamGrads& analytic);

/// Computes analytic gradients via backward() and compares them against
/// central finite differences of loss(forward(net)). eps must be in
/// (0, 1e-3].
double finite_diff_check(const Network& net, const OutputLoss& loss,
                         const Tensor& batch, double eps);

}  // namespace exlab
