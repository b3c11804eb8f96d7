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

#include "exlab/linear_eval.hpp"

#include <algorithm>

#include "exlab/errors.hpp"
#include "exlab/losses.hpp"

namespace exlab {

namespace {

// The probe is a single identity-activation layer, so probe training reuses
// the network machinery on precomputed representations.
Network probe_as_network(const LinearProbe& probe) {
  DenseLayer layer;
  layer.weights = probe.weights;
  layer.bias = probe.bias;
  layer.activation = Activation::identity;
  return Network({std::move(layer)});
}

}  // namespace

LinearProbe train_probe(const Network& encoder, const LabeledDataset& data,
                        int n_classes, const ProbeConfig& cfg) {
  if (data.size() == 0) throw ParameterError("train_probe: empty dataset");
  if (n_classes < 2) throw ParameterError("train_probe: n_classes must be >= 2");
  for (int label : data.labels) {
    if (label < 0 || label >= n_classes) {
      throw ParameterError("train_probe: label out of range: " +
                           std::to_string(label));
    }
  }
  const std::uint64_t frozen_hash = encoder.param_hash();

  // Frozen encoder: representations are computed once.
  const Tensor reps = forward_output(encoder, images_to_batch(data.images));
  const std::size_t d = reps.cols();

  Rng rng = Rng::stream(cfg.seed, 71);
  Network net =
      Network::dense({d, static_cast<std::size_t>(n_classes)},
                     Activation::identity, Activation::identity, rng);
  OptimizerState state;

  std::vector<std::size_t> order(data.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  const std::size_t batch =
      std::min<std::size_t>(static_cast<std::size_t>(cfg.batch), data.size());

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(order);
    for (std::size_t start = 0; start + batch <= order.size();
         start += batch) {
      Tensor x({batch, d});
      std::vector<int> labels(batch);
      for (std::size_t i = 0; i < batch; ++i) {
        const auto row = reps.row_span(order[start + i]);
        std::copy(row.begin(), row.end(), x.row_span(i).begin());
        labels[i] = data.labels[order[start + i]];
      }
      ForwardTrace trace = forward(net, x);
      LossOutput loss = softmax_cross_entropy(trace.output, labels);
      BackwardResult back = backward(net, trace, loss.grads[0]);
      optimizer_step(net, back.grads, cfg.opt, state);
    }
  }

  if (encoder.param_hash() != frozen_hash) {
    throw ConsistencyError("train_probe: encoder parameters changed");
  }
  return LinearProbe{net.layer(0).weights, net.layer(0).bias};
}

Tensor probe_logits(const LinearProbe& probe, const Tensor& reps) {
  if (reps.cols() != probe.rep_dim()) {
    throw DimensionError("probe_logits: representation dim mismatch");
  }
  Tensor logits = matmul_nt(reps, probe.weights);
  for (std::size_t r = 0; r < logits.rows(); ++r) {
    auto row = logits.row_span(r);
    const auto b = probe.bias.data();
    for (std::size_t c = 0; c < row.size(); ++c) row[c] += b[c];
  }
  return logits;
}

double top1_on_reps(const LinearProbe& probe, const Tensor& reps,
                    const std::vector<int>& labels) {
  if (labels.empty()) throw ParameterError("top1: empty test set");
  if (reps.rows() != labels.size()) {
    throw DimensionError("top1: reps/labels length mismatch");
  }
  const Tensor logits = probe_logits(probe, reps);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const auto row = logits.row_span(i);
    const std::size_t argmax =
        static_cast<std::size_t>(std::distance(
            row.begin(), std::max_element(row.begin(), row.end())));
    if (argmax == static_cast<std::size_t>(labels[i])) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(labels.size());
}

double top1(const LinearProbe& probe, const Network& encoder,
            const LabeledDataset& test) {
  if (test.size() == 0) throw ParameterError("top1: empty test set");
  const Tensor reps = forward_output(encoder, images_to_batch(test.images));
  return top1_on_reps(probe, reps, test.labels);
}

}  // namespace exlab
