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

#include "exlab/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "exlab/errors.hpp"

namespace exlab {

namespace {

double relative_error(double analytic, double numeric) {
  const double denom =
      std::max({std::fabs(analytic), std::fabs(numeric), 1e-12});
  return std::fabs(analytic - numeric) / denom;
}

}  // namespace

double finite_diff_error(const Network& net, const OutputLoss& loss,
                         const Tensor& batch, double eps,
                         const ParamGrads& analytic) {
  if (!(eps > 0.0) || eps > 1e-3) {
    throw ParameterError("finite_diff: eps must be in (0, 1e-3]");
  }
  Network probe = net;  // perturbed copy; the input network is untouched
  double worst = 0.0;
  auto probe_value = [&]() {
    return loss(forward_output(probe, batch)).value;
  };
  for (std::size_t k = 0; k < probe.layer_count(); ++k) {
    auto check_tensor = [&](Tensor& param, const Tensor& grad) {
      auto p = param.data();
      auto g = grad.data();
      for (std::size_t i = 0; i < p.size(); ++i) {
        const double saved = p[i];
        p[i] = saved + eps;
        const double up = probe_value();
        p[i] = saved - eps;
        const double down = probe_value();
        p[i] = saved;
        const double numeric = (up - down) / (2.0 * eps);
        worst = std::max(worst, relative_error(g[i], numeric));
      }
    };
    check_tensor(probe.mutable_layer(k).weights, analytic.weights[k]);
    check_tensor(probe.mutable_layer(k).bias, analytic.biases[k]);
  }
  return worst;
}

double finite_diff_check(const Network& net, const OutputLoss& loss,
                         const Tensor& batch, double eps) {
  ForwardTrace trace = forward(net, batch);
  LossEval at_point = loss(trace.output);
  BackwardResult back = backward(net, trace, at_point.output_grad);
  return finite_diff_error(net, loss, batch, eps, back.grads);
}

}  // namespace exlab
