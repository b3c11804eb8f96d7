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

#include "exlab/network.hpp"

#include <cmath>
#include <cstring>

#include "exlab/errors.hpp"

namespace exlab {

const char* to_string(Activation a) {
  switch (a) {
    case Activation::identity: return "identity";
    case Activation::relu: return "relu";
    case Activation::tanh: return "tanh";
  }
  return "?";
}

Activation activation_from_string(const std::string& s) {
  if (s == "identity") return Activation::identity;
  if (s == "relu") return Activation::relu;
  if (s == "tanh") return Activation::tanh;
  throw ParameterError("unknown activation: " + s);
}

void ParamGrads::accumulate(const ParamGrads& other, double scale) {
  if (weights.size() != other.weights.size()) {
    throw DimensionError("ParamGrads::accumulate: layer count mismatch");
  }
  for (std::size_t k = 0; k < weights.size(); ++k) {
    auto w = weights[k].data();
    auto ow = other.weights[k].data();
    if (w.size() != ow.size()) {
      throw DimensionError("ParamGrads::accumulate: weight shape mismatch");
    }
    for (std::size_t i = 0; i < w.size(); ++i) w[i] += scale * ow[i];
    auto b = biases[k].data();
    auto ob = other.biases[k].data();
    for (std::size_t i = 0; i < b.size(); ++i) b[i] += scale * ob[i];
  }
}

void ParamGrads::scale(double s) {
  for (auto& t : weights) t *= s;
  for (auto& t : biases) t *= s;
}

bool ParamGrads::all_finite() const {
  for (const auto& t : weights) {
    if (!t.all_finite()) return false;
  }
  for (const auto& t : biases) {
    if (!t.all_finite()) return false;
  }
  return true;
}

Network::Network(std::vector<DenseLayer> layers) : layers_(std::move(layers)) {
  for (std::size_t k = 0; k < layers_.size(); ++k) {
    const auto& l = layers_[k];
    if (l.bias.size() != l.out_dim()) {
      throw DimensionError("Network: layer " + std::to_string(k) +
                           " bias width disagrees with weight rows");
    }
    if (k > 0 && layers_[k - 1].out_dim() != l.in_dim()) {
      throw DimensionError("Network: layer " + std::to_string(k) +
                           " input width " + std::to_string(l.in_dim()) +
                           " does not chain from previous output " +
                           std::to_string(layers_[k - 1].out_dim()));
    }
  }
}

Network Network::dense(const std::vector<std::size_t>& widths,
                       Activation hidden, Activation output, Rng& rng) {
  if (widths.size() < 2) {
    throw ParameterError("Network::dense: need at least {in, out} widths");
  }
  std::vector<DenseLayer> layers;
  for (std::size_t k = 0; k + 1 < widths.size(); ++k) {
    const std::size_t in = widths[k], out = widths[k + 1];
    const Activation act = (k + 2 == widths.size()) ? output : hidden;
    DenseLayer layer;
    layer.activation = act;
    layer.weights = Tensor::matrix(out, in);
    layer.bias = Tensor::vector(out);
    // He-uniform for relu, Xavier-uniform otherwise.
    const double limit = act == Activation::relu
                             ? std::sqrt(6.0 / static_cast<double>(in))
                             : std::sqrt(6.0 / static_cast<double>(in + out));
    for (auto& w : layer.weights.data()) w = rng.uniform(-limit, limit);
    layers.push_back(std::move(layer));
  }
  return Network(std::move(layers));
}

Network Network::identity(std::size_t dim) {
  DenseLayer layer;
  layer.activation = Activation::identity;
  layer.weights = Tensor::matrix(dim, dim);
  for (std::size_t i = 0; i < dim; ++i) layer.weights.at(i, i) = 1.0;
  layer.bias = Tensor::vector(dim);
  return Network({std::move(layer)});
}

std::size_t Network::input_dim() const {
  if (layers_.empty()) throw ParameterError("Network: empty");
  return layers_.front().in_dim();
}

std::size_t Network::output_dim() const {
  if (layers_.empty()) throw ParameterError("Network: empty");
  return layers_.back().out_dim();
}

DenseLayer& Network::mutable_layer(std::size_t k) {
  bump_revision();
  return layers_[k];
}

std::size_t Network::param_count() const {
  std::size_t n = 0;
  for (const auto& l : layers_) n += l.weights.size() + l.bias.size();
  return n;
}

std::uint64_t Network::param_hash() const {
  std::uint64_t h = 1469598103934665603ULL;  // FNV offset basis
  auto mix = [&h](const Tensor& t) {
    for (double v : t.data()) {
      std::uint64_t bits;
      std::memcpy(&bits, &v, sizeof(bits));
      for (int byte = 0; byte < 8; ++byte) {
        h ^= (bits >> (8 * byte)) & 0xffULL;
        h *= 1099511628211ULL;
      }
    }
  };
  for (const auto& l : layers_) {
    mix(l.weights);
    mix(l.bias);
  }
  return h;
}

Network Network::truncated(std::size_t n_layers) const {
  if (n_layers == 0 || n_layers > layers_.size()) {
    throw ParameterError("Network::truncated: layer count out of range");
  }
  return Network(std::vector<DenseLayer>(layers_.begin(),
                                         layers_.begin() + n_layers));
}

namespace {

void apply_activation(Activation act, const Tensor& pre, Tensor& out) {
  out = pre;
  switch (act) {
    case Activation::identity:
      break;
    case Activation::relu:
      for (auto& v : out.data()) v = v > 0.0 ? v : 0.0;
      break;
    case Activation::tanh:
      for (auto& v : out.data()) v = std::tanh(v);
      break;
  }
}

// d(act)/d(pre) as a function of pre (and of act(pre) for tanh).
double activation_grad(Activation act, double pre) {
  switch (act) {
    case Activation::identity: return 1.0;
    case Activation::relu: return pre > 0.0 ? 1.0 : 0.0;
    case Activation::tanh: {
      const double t = std::tanh(pre);
      return 1.0 - t * t;
    }
  }
  return 0.0;
}

}  // namespace

ForwardTrace forward(const Network& net, const Tensor& batch) {
  if (net.empty()) throw ParameterError("forward: empty network");
  if (batch.rows() < 1) throw ParameterError("forward: empty batch");
  if (batch.cols() != net.input_dim()) {
    throw DimensionError("forward: batch width " +
                         std::to_string(batch.cols()) +
                         " does not match layer 0 input width " +
                         std::to_string(net.input_dim()));
  }
  ForwardTrace trace;
  trace.net_revision = net.revision();
  Tensor x = batch;
  for (std::size_t k = 0; k < net.layer_count(); ++k) {
    const DenseLayer& layer = net.layer(k);
    Tensor pre = matmul_nt(x, layer.weights);
    for (std::size_t r = 0; r < pre.rows(); ++r) {
      auto row = pre.row_span(r);
      const auto b = layer.bias.data();
      for (std::size_t j = 0; j < row.size(); ++j) row[j] += b[j];
    }
    trace.inputs.push_back(std::move(x));
    Tensor activated;
    apply_activation(layer.activation, pre, activated);
    trace.preacts.push_back(std::move(pre));
    x = std::move(activated);
  }
  x.require_finite("network forward output");
  trace.output = std::move(x);
  return trace;
}

Tensor forward_output(const Network& net, const Tensor& batch) {
  return forward(net, batch).output;
}

BackwardResult backward(const Network& net, const ForwardTrace& trace,
                        const Tensor& output_grad) {
  if (trace.net_revision != net.revision()) {
    throw ConsistencyError(
        "backward: network mutated since the trace was produced");
  }
  if (trace.inputs.size() != net.layer_count()) {
    throw ConsistencyError("backward: trace depth does not match network");
  }
  if (!output_grad.same_shape(trace.output)) {
    throw DimensionError("backward: output_grad shape mismatch");
  }

  BackwardResult res;
  res.grads.weights.resize(net.layer_count());
  res.grads.biases.resize(net.layer_count());

  Tensor delta = output_grad;  // gradient w.r.t. activated output of layer k
  for (std::size_t k = net.layer_count(); k-- > 0;) {
    const DenseLayer& layer = net.layer(k);
    const Tensor& pre = trace.preacts[k];
    // Through the activation.
    for (std::size_t i = 0; i < delta.size(); ++i) {
      delta[i] *= activation_grad(layer.activation, pre[i]);
    }
    // Parameter gradients.
    res.grads.weights[k] = matmul_tn(delta, trace.inputs[k]);
    Tensor bgrad = Tensor::vector(layer.out_dim());
    for (std::size_t r = 0; r < delta.rows(); ++r) {
      const auto row = delta.row_span(r);
      for (std::size_t j = 0; j < row.size(); ++j) bgrad[j] += row[j];
    }
    res.grads.biases[k] = std::move(bgrad);
    // Gradient w.r.t. this layer's input.
    delta = matmul(delta, layer.weights);
  }
  res.input_grad = std::move(delta);
  return res;
}

ParamGrads zero_grads(const Network& net) {
  ParamGrads g;
  for (const auto& l : net.layers()) {
    g.weights.push_back(Tensor::matrix(l.out_dim(), l.in_dim()));
    g.biases.push_back(Tensor::vector(l.out_dim()));
  }
  return g;
}

}  // namespace exlab
