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

#include "exlab/optimizer.hpp"

#include <cmath>

#include "exlab/errors.hpp"

namespace exlab {

const char* to_string(OptimizerKind k) {
  switch (k) {
    case OptimizerKind::sgd_momentum: return "sgd_momentum";
    case OptimizerKind::adam: return "adam";
  }
  return "?";
}

OptimizerKind optimizer_kind_from_string(const std::string& s) {
  if (s == "sgd_momentum" || s == "sgd") return OptimizerKind::sgd_momentum;
  if (s == "adam") return OptimizerKind::adam;
  throw ParameterError("unknown optimizer kind: " + s);
}

void OptimizerConfig::validate() const {
  if (!(learning_rate > 0.0)) {
    throw ParameterError("OptimizerConfig: learning_rate must be > 0");
  }
  if (momentum < 0.0 || momentum >= 1.0) {
    throw ParameterError("OptimizerConfig: momentum must be in [0,1)");
  }
  if (beta1 < 0.0 || beta1 >= 1.0 || beta2 < 0.0 || beta2 >= 1.0) {
    throw ParameterError("OptimizerConfig: adam betas must be in [0,1)");
  }
  if (weight_decay < 0.0) {
    throw ParameterError("OptimizerConfig: weight_decay must be >= 0");
  }
}

namespace {

void ensure_state(OptimizerState& state, const Network& net, bool second) {
  if (state.initialized()) {
    if (state.slot1_w.size() != net.layer_count()) {
      throw DimensionError("optimizer_step: state does not match network");
    }
    return;
  }
  for (const auto& l : net.layers()) {
    state.slot1_w.push_back(Tensor::matrix(l.out_dim(), l.in_dim()));
    state.slot1_b.push_back(Tensor::vector(l.out_dim()));
    if (second) {
      state.slot2_w.push_back(Tensor::matrix(l.out_dim(), l.in_dim()));
      state.slot2_b.push_back(Tensor::vector(l.out_dim()));
    }
  }
}

void sgd_update(std::span<double> p, std::span<const double> g,
                std::span<double> vel, const OptimizerConfig& c) {
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double geff = g[i] + c.weight_decay * p[i];
    vel[i] = c.momentum * vel[i] + geff;
    p[i] -= c.learning_rate * vel[i];
  }
}

void adam_update(std::span<double> p, std::span<const double> g,
                 std::span<double> m, std::span<double> v,
                 const OptimizerConfig& c, double bc1, double bc2) {
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double geff = g[i] + c.weight_decay * p[i];
    m[i] = c.beta1 * m[i] + (1.0 - c.beta1) * geff;
    v[i] = c.beta2 * v[i] + (1.0 - c.beta2) * geff * geff;
    const double mhat = m[i] / bc1;
    const double vhat = v[i] / bc2;
    p[i] -= c.learning_rate * mhat / (std::sqrt(vhat) + c.eps);
  }
}

}  // namespace

void optimizer_step(Network& net, const ParamGrads& grads,
                    const OptimizerConfig& config, OptimizerState& state) {
  config.validate();
  if (grads.weights.size() != net.layer_count()) {
    throw DimensionError("optimizer_step: gradient layer count mismatch");
  }
  if (!grads.all_finite()) {
    throw NumericError("optimizer_step: non-finite gradient at step " +
                       std::to_string(state.step + 1));
  }
  const bool adam = config.kind == OptimizerKind::adam;
  ensure_state(state, net, adam);
  ++state.step;
  const double bc1 = 1.0 - std::pow(config.beta1, state.step);
  const double bc2 = 1.0 - std::pow(config.beta2, state.step);

  for (std::size_t k = 0; k < net.layer_count(); ++k) {
    DenseLayer& layer = net.mutable_layer(k);
    if (!grads.weights[k].same_shape(layer.weights) ||
        !grads.biases[k].same_shape(layer.bias)) {
      throw DimensionError("optimizer_step: gradient shape mismatch at layer " +
                           std::to_string(k));
    }
    if (adam) {
      adam_update(layer.weights.data(), grads.weights[k].data(),
                  state.slot1_w[k].data(), state.slot2_w[k].data(), config,
                  bc1, bc2);
      adam_update(layer.bias.data(), grads.biases[k].data(),
                  state.slot1_b[k].data(), state.slot2_b[k].data(), config,
                  bc1, bc2);
    } else {
      sgd_update(layer.weights.data(), grads.weights[k].data(),
                 state.slot1_w[k].data(), config);
      sgd_update(layer.bias.data(), grads.biases[k].data(),
                 state.slot1_b[k].data(), config);
    }
  }
}

}  // namespace exlab
