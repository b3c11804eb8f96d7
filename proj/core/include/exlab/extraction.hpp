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

#include <optional>

#include "exlab/linear_eval.hpp"
#include "exlab/losses.hpp"
#include "exlab/victim.hpp"

namespace exlab {

/// Attack hyperparameters. The attacker only ever sees the API: its
/// architecture defaults mirror the victim's published default (one hidden
/// layer of 256) with the output width taken from the served vectors; a
/// mismatched-architecture attack passes explicit widths.
struct AttackConfig {
  LossKind loss = LossKind::mse;
  LossHyper hyper;
  std::size_t query_budget = 0;
  ViewPolicy policy;                      // empty: w = w' = x
  std::vector<std::size_t> arch_widths;   // empty: {in, 256, out}
  std::vector<std::size_t> head_widths;   // recreate_head; empty: {d, 64, 32}
  OptimizerConfig opt{OptimizerKind::adam, 1e-3};
  int epochs = 30;
  int batch = 128;
  std::uint64_t seed = 99;
  std::vector<int> pool_labels;  // per pool index; required for sup_con
  std::uint64_t pow_max_attempts = 1 << 22;
};

struct StolenModel {
  Network encoder;               // f_a
  std::optional<Network> head;   // g_a when a recreated head was used
  std::size_t queries_spent = 0;
};

/// Direct extraction: per sampled input, views w and w' are generated
/// (identity when the policy is empty), the victim is queried on w', the
/// attacker net runs on w, and cfg.loss matches the two. Victim responses
/// are cached by input hash, so repeated epochs over identical views are
/// not re-billed. Training stops issuing queries at budget exhaustion.
/// neg_cosine_sym queries both views (two calls per input).
StolenModel steal_direct(VictimApi& api, std::span<const GridImage> pool,
                         const AttackConfig& cfg);

struct RecreatedHead {
  Network head;
  std::size_t queries_spent = 0;
};

/// Recreates the victim's projection head by training g_a contrastively on
/// victim representations of two genuine views per input (two queries per
/// input). Requires a non-empty policy.
RecreatedHead recreate_head(VictimApi& api, std::span<const GridImage> pool,
                            const AttackConfig& cfg);

/// Stealing through a head g: the attacker trains f_a so that g(f_a(w))
/// matches g(victim response to w'). With g = identity over served vectors
/// this is exactly steal_direct (access-head mode when the victim exposes
/// projections); with g from recreate_head it is the recreated-head attack.
/// g's parameters stay fixed.
StolenModel steal_with_head(VictimApi& api, const Network& g,
                            std::span<const GridImage> pool,
                            const AttackConfig& cfg);

struct EvalTask {
  std::string name;
  const DataBundle* data = nullptr;
};

struct TaskScore {
  std::string task;
  double stolen_acc = 0.0;
  double victim_acc = 0.0;
};

struct StolenReport {
  std::vector<TaskScore> tasks;
  double rep_distance = 0.0;   // mean l2 on the first task's train images
  bool rep_dims_match = false;
  std::size_t queries_spent = 0;
};

/// Linear-evaluation comparison of stolen vs victim encoders on each
/// downstream task, plus the representation distance when dimensions agree.
StolenReport evaluate_stolen(const StolenModel& stolen,
                             const VictimModel& victim,
                             std::span<const EvalTask> tasks,
                             const ProbeConfig& probe_cfg);

}  // namespace exlab
