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

#include "exlab/network.hpp"
#include "exlab/optimizer.hpp"
#include "exlab/synthdata.hpp"

namespace exlab {

/// Linear classifier over frozen representations.
struct LinearProbe {
  Tensor weights;  // [classes x d]
  Tensor bias;     // [classes]

  std::size_t classes() const { return weights.rows(); }
  std::size_t rep_dim() const { return weights.cols(); }
};

struct ProbeConfig {
  OptimizerConfig opt{OptimizerKind::adam, 1e-2};
  int epochs = 50;
  int batch = 128;
  std::uint64_t seed = 5;
};

/// Softmax cross-entropy training of the probe only; the encoder is frozen
/// (its parameter hash is asserted unchanged). Labels must lie in
/// [0, n_classes).
LinearProbe train_probe(const Network& encoder, const LabeledDataset& data,
                        int n_classes, const ProbeConfig& cfg);

/// Logits for precomputed representations [B x d].
Tensor probe_logits(const LinearProbe& probe, const Tensor& reps);

/// Fraction of argmax-correct predictions on the test split.
double top1(const LinearProbe& probe, const Network& encoder,
            const LabeledDataset& test);

double top1_on_reps(const LinearProbe& probe, const Tensor& reps,
                    const std::vector<int>& labels);

}  // namespace exlab
