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

#include "exlab/network.hpp"

namespace exlab {

enum class OptimizerKind { sgd_momentum, adam };

const char* to_string(OptimizerKind k);
OptimizerKind optimizer_kind_from_string(const std::string& s);

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::adam;
  double learning_rate = 1e-3;
  double momentum = 0.9;    // sgd_momentum only
  double beta1 = 0.9;       // adam only
  double beta2 = 0.999;     // adam only
  double eps = 1e-8;        // adam only
  double weight_decay = 0.0;

  void validate() const;
};

/// Per-parameter slots; lazily sized to the network on first step.
struct OptimizerState {
  std::vector<Tensor> slot1_w, slot1_b;  // velocity (sgd) / first moment (adam)
  std::vector<Tensor> slot2_w, slot2_b;  // second moment (adam)
  long step = 0;

  bool initialized() const { return !slot1_w.empty(); }
};

/// One update: theta := theta - eta * direction(grads). Throws NumericError
/// (naming the step) if grads contain NaN/Inf.
void optimizer_step(Network& net, const ParamGrads& grads,
                    const OptimizerConfig& config, OptimizerState& state);

}  // namespace exlab
