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

#include <cstdint>
#include <string>
#include <vector>

#include "exlab/rng.hpp"
#include "exlab/tensor.hpp"

namespace exlab {

enum class Activation { identity, relu, tanh };

const char* to_string(Activation a);
Activation activation_from_string(const std::string& s);

/// Fully connected layer: y = act(x * Wt + b). weights is [out x in].
struct DenseLayer {
  Tensor weights;
  Tensor bias;
  Activation activation = Activation::identity;

  std::size_t in_dim() const { return weights.cols(); }
  std::size_t out_dim() const { return weights.rows(); }
};

/// Gradients shaped exactly like the network parameters.
struct ParamGrads {
  std::vector<Tensor> weights;
  std::vector<Tensor> biases;

  void accumulate(const ParamGrads& other, double scale = 1.0);
  void scale(double s);
  bool all_finite() const;
};

/// Everything backward() needs from the corresponding forward() call.
struct ForwardTrace {
  std::vector<Tensor> inputs;    // input to layer k, [B x in_k]
  std::vector<Tensor> preacts;   // pre-activation of layer k, [B x out_k]
  Tensor output;                 // activated final output, [B x out]
  std::uint64_t net_revision = 0;
};

/// Ordered dense layers with chained widths. Value-semantic: copies are
/// independent models. Any parameter mutation bumps the revision counter so
/// stale traces can be rejected.
class Network {
 public:
  Network() = default;
  explicit Network(std::vector<DenseLayer> layers);

  /// widths = {in, h1, ..., out}; hidden layers get `hidden`, the last layer
  /// `output`. He-uniform init for relu layers, Xavier-uniform otherwise.
  static Network dense(const std::vector<std::size_t>& widths,
                       Activation hidden, Activation output, Rng& rng);

  /// Single identity layer with unit weights (pass-through).
  static Network identity(std::size_t dim);

  bool empty() const { return layers_.empty(); }
  std::size_t input_dim() const;
  std::size_t output_dim() const;
  std::size_t layer_count() const { return layers_.size(); }
  const std::vector<DenseLayer>& layers() const { return layers_; }
  const DenseLayer& layer(std::size_t k) const { return layers_[k]; }

  /// Mutable access bumps the revision (treat any touch as a mutation).
  DenseLayer& mutable_layer(std::size_t k);

  std::uint64_t revision() const { return revision_; }
  void bump_revision() { ++revision_; }

  std::size_t param_count() const;
  /// FNV-1a over raw parameter bytes; used to assert freeze contracts.
  std::uint64_t param_hash() const;

  /// Copy of the first n_layers layers (penultimate-representation views).
  Network truncated(std::size_t n_layers) const;

 private:
  std::vector<DenseLayer> layers_;
  std::uint64_t revision_ = 0;
};

/// Runs the batch through the network, retaining per-layer intermediates.
/// batch is [B x input_dim], B >= 1.
ForwardTrace forward(const Network& net, const Tensor& batch);

/// Forward without keeping the trace alive at the call site.
Tensor forward_output(const Network& net, const Tensor& batch);

struct BackwardResult {
  ParamGrads grads;
  Tensor input_grad;  // [B x input_dim], for chaining head -> encoder
};

/// Backpropagates output_grad [B x out] through the traced forward pass.
/// Throws ConsistencyError if the network changed since the trace was made.
BackwardResult backward(const Network& net, const ForwardTrace& trace,
                        const Tensor& output_grad);

/// Zero-initialized gradients matching the network's parameters.
ParamGrads zero_grads(const Network& net);

}  // namespace exlab
