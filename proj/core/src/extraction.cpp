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

#include "exlab/extraction.hpp"

#include <algorithm>
#include <limits>
#include <unordered_map>

#include "exlab/defense_reactive.hpp"

namespace exlab {

namespace {

// Budget-accounted query cache. Responses are keyed by the queried image's
// hash: re-querying an identical view is free (a rational attacker caches).
class QueryClient {
 public:
  QueryClient(VictimApi& api, std::size_t budget, std::uint64_t pow_attempts)
      : api_(api), budget_left_(budget), pow_attempts_(pow_attempts) {}

  // Returns nullptr when the budget cannot cover a fresh query.
  const std::vector<double>* query(const GridImage& img) {
    const std::string key = image_hash(img);
    auto it = cache_.find(key);
    if (it != cache_.end()) return &it->second;
    if (budget_left_ == 0) return nullptr;
    std::vector<double> response =
        query_with_pow(api_, account_, img, pow_attempts_);
    --budget_left_;
    ++spent_;
    return &cache_.emplace(key, std::move(response)).first->second;
  }

  std::size_t spent() const { return spent_; }
  std::size_t budget_left() const { return budget_left_; }

 private:
  VictimApi& api_;
  std::string account_ = "attacker";
  std::size_t budget_left_;
  std::uint64_t pow_attempts_;
  std::size_t spent_ = 0;
  std::unordered_map<std::string, std::vector<double>> cache_;
};

std::vector<std::size_t> attacker_widths(const AttackConfig& cfg,
                                         std::size_t in_dim,
                                         std::size_t out_dim) {
  if (cfg.arch_widths.empty()) return {in_dim, 256, out_dim};
  std::vector<std::size_t> widths = cfg.arch_widths;
  if (widths.front() != in_dim) {
    throw DimensionError("attack: arch input width does not match images");
  }
  if (widths.back() != out_dim) {
    throw DimensionError("attack: arch output width does not match targets");
  }
  return widths;
}

struct PreparedSample {
  std::size_t pool_index = 0;
  GridImage w;                          // attacker-side view
  const std::vector<double>* target1;   // victim response (primary)
  GridImage w_prime;                    // only used by neg_cosine_sym
  const std::vector<double>* target2 = nullptr;
};

// Core loop shared by direct and through-head stealing. `head` is empty for
// direct extraction; when present, its parameters are frozen and both sides
// of the loss pass through it.
StolenModel steal_core(VictimApi& api, const Network* head,
                       std::span<const GridImage> pool,
                       const AttackConfig& cfg) {
  cfg.policy.validate();
  cfg.opt.validate();
  if (pool.empty()) throw ParameterError("steal: empty query pool");
  if (cfg.batch < 1) throw ParameterError("steal: batch must be >= 1");
  if (cfg.loss == LossKind::sup_con && cfg.pool_labels.size() != pool.size()) {
    throw ParameterError("steal: sup_con requires one label per pool image");
  }
  if (head != nullptr && cfg.loss == LossKind::neg_cosine_sym) {
    throw ParameterError(
        "steal_with_head: neg_cosine_sym is only supported by steal_direct");
  }
  const bool symmetrized = cfg.loss == LossKind::neg_cosine_sym;

  const std::size_t in_dim = pool.front().height * pool.front().width;
  const std::size_t served = api.served_dim();
  if (head != nullptr && head->input_dim() != served) {
    throw DimensionError("steal_with_head: head input width " +
                         std::to_string(head->input_dim()) +
                         " does not match served vectors of width " +
                         std::to_string(served));
  }
  const std::size_t target_dim = head ? head->output_dim() : served;
  const std::size_t f_out = head ? head->input_dim() : served;

  Rng init_rng = Rng::stream(cfg.seed, 7);
  StolenModel stolen;
  stolen.encoder = Network::dense(attacker_widths(cfg, in_dim, f_out),
                                  Activation::relu, Activation::identity,
                                  init_rng);

  QueryClient client(api, cfg.query_budget, cfg.pow_max_attempts);
  Rng rng = Rng::stream(cfg.seed, 8);
  OptimizerState state;

  std::vector<std::size_t> order(pool.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  const std::size_t min_batch =
      (cfg.loss == LossKind::mse || cfg.loss == LossKind::wasserstein_1d ||
       symmetrized)
          ? 1
          : 2;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(order);
    std::size_t usable = 0;
    std::size_t cursor = 0;
    while (cursor < order.size()) {
      // Assemble one batch worth of (view, victim target) samples.
      std::vector<PreparedSample> samples;
      while (cursor < order.size() &&
             samples.size() < static_cast<std::size_t>(cfg.batch)) {
        const std::size_t idx = order[cursor++];
        PreparedSample s;
        s.pool_index = idx;
        if (cfg.policy.empty()) {
          s.w = pool[idx];
          s.w_prime = pool[idx];
        } else {
          ViewPair views = sample_view_pair(pool[idx], cfg.policy, rng);
          s.w = std::move(views.first);
          s.w_prime = std::move(views.second);
        }
        s.target1 = client.query(s.w_prime);
        if (s.target1 == nullptr) continue;  // budget exhausted
        if (symmetrized) {
          s.target2 = client.query(s.w);
          if (s.target2 == nullptr) continue;
        }
        samples.push_back(std::move(s));
      }
      if (samples.size() < min_batch) continue;
      usable += samples.size();

      const std::size_t b = samples.size();
      if (symmetrized) {
        // Stack [w rows; w' rows] so both attacker views share one pass.
        Tensor x({2 * b, in_dim});
        for (std::size_t i = 0; i < b; ++i) {
          const auto wv = flatten(samples[i].w);
          const auto wp = flatten(samples[i].w_prime);
          std::copy(wv.begin(), wv.end(), x.row_span(i).begin());
          std::copy(wp.begin(), wp.end(), x.row_span(b + i).begin());
        }
        ForwardTrace trace = forward(stolen.encoder, x);
        Tensor p1({b, target_dim}), p2({b, target_dim});
        Tensor z2({b, target_dim}), z1({b, target_dim});
        for (std::size_t i = 0; i < b; ++i) {
          const auto a1 = trace.output.row_span(i);
          const auto a2 = trace.output.row_span(b + i);
          std::copy(a1.begin(), a1.end(), p1.row_span(i).begin());
          std::copy(a2.begin(), a2.end(), p2.row_span(i).begin());
          std::copy(samples[i].target1->begin(), samples[i].target1->end(),
                    z2.row_span(i).begin());
          std::copy(samples[i].target2->begin(), samples[i].target2->end(),
                    z1.row_span(i).begin());
        }
        LossOutput loss = neg_cosine_sym(p1, z2, p2, z1);
        Tensor out_grad({2 * b, target_dim});
        for (std::size_t i = 0; i < b; ++i) {
          const auto g1 = loss.grads[0].row_span(i);
          const auto g2 = loss.grads[2].row_span(i);
          std::copy(g1.begin(), g1.end(), out_grad.row_span(i).begin());
          std::copy(g2.begin(), g2.end(), out_grad.row_span(b + i).begin());
        }
        BackwardResult back = backward(stolen.encoder, trace, out_grad);
        optimizer_step(stolen.encoder, back.grads, cfg.opt, state);
        continue;
      }

      Tensor x({b, in_dim});
      Tensor targets({b, served});
      std::vector<int> labels(b, 0);
      for (std::size_t i = 0; i < b; ++i) {
        const auto wv = flatten(samples[i].w);
        std::copy(wv.begin(), wv.end(), x.row_span(i).begin());
        std::copy(samples[i].target1->begin(), samples[i].target1->end(),
                  targets.row_span(i).begin());
        if (cfg.loss == LossKind::sup_con) {
          labels[i] = cfg.pool_labels[samples[i].pool_index];
        }
      }

      ForwardTrace f_trace = forward(stolen.encoder, x);
      Tensor y_a = f_trace.output;
      Tensor target_side = targets;
      ForwardTrace head_trace;
      if (head != nullptr) {
        head_trace = forward(*head, y_a);
        y_a = head_trace.output;
        target_side = forward_output(*head, targets);
      }
      const StealLoss loss = extraction_loss(
          cfg.loss, y_a, target_side, cfg.hyper,
          cfg.loss == LossKind::sup_con ? &labels : nullptr);

      Tensor f_grad;
      if (head != nullptr) {
        // Head parameters are frozen; only its input gradient chains back.
        f_grad = backward(*head, head_trace, loss.grad_attacker).input_grad;
      } else {
        f_grad = loss.grad_attacker;
      }
      BackwardResult back = backward(stolen.encoder, f_trace, f_grad);
      optimizer_step(stolen.encoder, back.grads, cfg.opt, state);
    }
    if (usable == 0) break;  // nothing fetchable: budget was exhausted
  }

  stolen.queries_spent = client.spent();
  if (head != nullptr) stolen.head = *head;
  return stolen;
}

}  // namespace

StolenModel steal_direct(VictimApi& api, std::span<const GridImage> pool,
                         const AttackConfig& cfg) {
  return steal_core(api, nullptr, pool, cfg);
}

StolenModel steal_with_head(VictimApi& api, const Network& g,
                            std::span<const GridImage> pool,
                            const AttackConfig& cfg) {
  return steal_core(api, &g, pool, cfg);
}

RecreatedHead recreate_head(VictimApi& api, std::span<const GridImage> pool,
                            const AttackConfig& cfg) {
  if (cfg.policy.empty()) {
    throw ParameterError(
        "recreate_head: needs a non-empty augmentation policy (two genuine "
        "views per input)");
  }
  cfg.policy.validate();
  cfg.opt.validate();
  if (pool.empty()) throw ParameterError("recreate_head: empty query pool");

  const std::size_t d = api.served_dim();
  std::vector<std::size_t> widths =
      cfg.head_widths.empty() ? std::vector<std::size_t>{d, 64, 32}
                              : cfg.head_widths;
  if (widths.front() != d) {
    throw DimensionError("recreate_head: head input width must equal the "
                         "served representation width");
  }

  Rng init_rng = Rng::stream(cfg.seed, 17);
  RecreatedHead result;
  result.head = Network::dense(widths, Activation::relu, Activation::identity,
                               init_rng);

  QueryClient client(api, cfg.query_budget, cfg.pow_max_attempts);
  Rng rng = Rng::stream(cfg.seed, 18);
  OptimizerState state;

  std::vector<std::size_t> order(pool.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(order);
    std::size_t usable = 0;
    std::size_t cursor = 0;
    while (cursor < order.size()) {
      std::vector<std::pair<const std::vector<double>*,
                            const std::vector<double>*>>
          reps;
      while (cursor < order.size() &&
             reps.size() < static_cast<std::size_t>(cfg.batch)) {
        const std::size_t idx = order[cursor++];
        ViewPair views = sample_view_pair(pool[idx], cfg.policy, rng);
        const auto* y = client.query(views.first);
        if (y == nullptr) continue;
        const auto* y_prime = client.query(views.second);
        if (y_prime == nullptr) continue;
        reps.emplace_back(y, y_prime);
      }
      if (reps.size() < 2) continue;  // info_nce needs negatives
      usable += reps.size();

      const std::size_t b = reps.size();
      Tensor stacked({2 * b, d});
      for (std::size_t i = 0; i < b; ++i) {
        std::copy(reps[i].first->begin(), reps[i].first->end(),
                  stacked.row_span(i).begin());
        std::copy(reps[i].second->begin(), reps[i].second->end(),
                  stacked.row_span(b + i).begin());
      }
      ForwardTrace trace = forward(result.head, stacked);
      const std::size_t p = result.head.output_dim();
      Tensor z({b, p}), z_prime({b, p});
      for (std::size_t i = 0; i < b; ++i) {
        const auto zr = trace.output.row_span(i);
        const auto zp = trace.output.row_span(b + i);
        std::copy(zr.begin(), zr.end(), z.row_span(i).begin());
        std::copy(zp.begin(), zp.end(), z_prime.row_span(i).begin());
      }
      LossOutput nce = info_nce(z, z_prime, cfg.hyper.temperature);
      Tensor out_grad({2 * b, p});
      for (std::size_t i = 0; i < b; ++i) {
        const auto g0 = nce.grads[0].row_span(i);
        const auto g1 = nce.grads[1].row_span(i);
        std::copy(g0.begin(), g0.end(), out_grad.row_span(i).begin());
        std::copy(g1.begin(), g1.end(), out_grad.row_span(b + i).begin());
      }
      BackwardResult back = backward(result.head, trace, out_grad);
      optimizer_step(result.head, back.grads, cfg.opt, state);
    }
    if (usable == 0) break;
  }

  result.queries_spent = client.spent();
  return result;
}

StolenReport evaluate_stolen(const StolenModel& stolen,
                             const VictimModel& victim,
                             std::span<const EvalTask> tasks,
                             const ProbeConfig& probe_cfg) {
  if (tasks.empty()) throw ParameterError("evaluate_stolen: no tasks");
  StolenReport report;
  report.queries_spent = stolen.queries_spent;
  for (const auto& task : tasks) {
    if (task.data == nullptr) {
      throw ParameterError("evaluate_stolen: task without data: " + task.name);
    }
    const int classes = task.data->train.spec.n_classes;
    const LinearProbe stolen_probe =
        train_probe(stolen.encoder, task.data->train, classes, probe_cfg);
    const LinearProbe victim_probe =
        train_probe(victim.encoder, task.data->train, classes, probe_cfg);
    report.tasks.push_back(
        TaskScore{task.name, top1(stolen_probe, stolen.encoder, task.data->test),
                  top1(victim_probe, victim.encoder, task.data->test)});
  }
  report.rep_dims_match =
      stolen.encoder.output_dim() == victim.encoder.output_dim();
  if (report.rep_dims_match) {
    report.rep_distance = rep_distance(victim.encoder, stolen.encoder,
                                       tasks.front().data->train.images);
  } else {
    report.rep_distance = std::numeric_limits<double>::quiet_NaN();
  }
  return report;
}

}  // namespace exlab
