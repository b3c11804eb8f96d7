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

#include "exlab/defense_detect.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

#include "exlab/errors.hpp"

namespace exlab {

const char* to_string(Metric m) {
  return m == Metric::l2 ? "l2" : "cosine";
}

Metric metric_from_string(const std::string& s) {
  if (s == "l2") return Metric::l2;
  if (s == "cosine") return Metric::cosine;
  throw ParameterError("unknown metric: " + s);
}

const char* to_string(Space s) {
  return s == Space::projection_z ? "projection_z" : "representation_y";
}

Space space_from_string(const std::string& s) {
  if (s == "projection_z" || s == "z") return Space::projection_z;
  if (s == "representation_y" || s == "y") return Space::representation_y;
  throw ParameterError("unknown space: " + s);
}

std::uint64_t HistoryStore::append(const std::string& account,
                                   std::vector<double> vec) {
  std::lock_guard lock(mutex_);
  auto& list = records_[account];
  const std::uint64_t id = list.size();
  list.emplace_back(id, std::move(vec));
  return id;
}

std::vector<std::pair<std::uint64_t, std::vector<double>>>
HistoryStore::account_history(const std::string& account) const {
  std::lock_guard lock(mutex_);
  auto it = records_.find(account);
  if (it == records_.end()) return {};
  return it->second;
}

std::vector<std::string> HistoryStore::accounts() const {
  std::lock_guard lock(mutex_);
  std::vector<std::string> out;
  out.reserve(records_.size());
  for (const auto& [account, _] : records_) out.push_back(account);
  return out;
}

std::size_t HistoryStore::total_records() const {
  std::lock_guard lock(mutex_);
  std::size_t n = 0;
  for (const auto& [_, list] : records_) n += list.size();
  return n;
}

std::uint64_t record(HistoryStore& store, const std::string& account,
                     std::span<const double> vec) {
  for (double v : vec) {
    if (!std::isfinite(v)) {
      throw NumericError("record: non-finite vector entry");
    }
  }
  return store.append(account, std::vector<double>(vec.begin(), vec.end()));
}

namespace {

bool flags(Metric metric, double threshold, double score) {
  return metric == Metric::l2 ? score < threshold : score > threshold;
}

double score_between(Metric metric, std::span<const double> a,
                     std::span<const double> b) {
  return metric == Metric::l2 ? l2_distance(a, b) : cosine_similarity(a, b);
}

}  // namespace

SimilarityVerdict check_similar(const HistoryStore& store,
                                const std::string& account,
                                std::span<const double> vec,
                                const DetectorConfig& cfg) {
  SimilarityVerdict verdict;
  const auto history = store.account_history(account);
  for (const auto& [id, stored] : history) {
    if (stored.size() != vec.size()) {
      throw DimensionError("check_similar: stored vector width mismatch");
    }
    const double s = score_between(cfg.metric, vec, stored);
    const bool better =
        !verdict.best_match_id ||
        (cfg.metric == Metric::l2 ? s < verdict.best_score
                                  : s > verdict.best_score);
    if (better) {
      verdict.best_match_id = id;
      verdict.best_score = s;
    }
  }
  if (verdict.best_match_id) {
    verdict.flagged = flags(cfg.metric, cfg.threshold, verdict.best_score);
  }
  return verdict;
}

Rates rates_from_pairs(std::span<const VectorPair> paired,
                       std::span<const VectorPair> distinct, Metric metric,
                       double threshold) {
  if (paired.empty() || distinct.empty()) {
    throw ParameterError("rates_from_pairs: empty evaluation sets");
  }
  std::size_t missed = 0;
  for (const auto& [a, b] : paired) {
    if (!flags(metric, threshold, score_between(metric, a, b))) ++missed;
  }
  std::size_t false_hits = 0;
  for (const auto& [a, b] : distinct) {
    if (flags(metric, threshold, score_between(metric, a, b))) ++false_hits;
  }
  return Rates{
      static_cast<double>(false_hits) / static_cast<double>(distinct.size()),
      static_cast<double>(missed) / static_cast<double>(paired.size())};
}

namespace {

std::vector<double> embed(const Network& encoder, const Network& head,
                          Space space, const GridImage& img) {
  Tensor y = forward_output(encoder, image_to_row(img));
  if (space == Space::representation_y) {
    const auto row = y.row_span(0);
    return std::vector<double>(row.begin(), row.end());
  }
  Tensor z = forward_output(head, y);
  const auto row = z.row_span(0);
  return std::vector<double>(row.begin(), row.end());
}

}  // namespace

std::vector<double> pair_scores(const Network& encoder, const Network& head,
                                Metric metric, Space space,
                                std::span<const ImagePair> pairs) {
  std::vector<double> scores;
  scores.reserve(pairs.size());
  for (const auto& [a, b] : pairs) {
    scores.push_back(score_between(metric, embed(encoder, head, space, a),
                                   embed(encoder, head, space, b)));
  }
  return scores;
}

Rates evaluate_rates(const Network& encoder, const Network& head,
                     const DetectorConfig& cfg,
                     std::span<const ImagePair> paired,
                     std::span<const ImagePair> distinct) {
  if (paired.empty() || distinct.empty()) {
    throw ParameterError("evaluate_rates: empty evaluation sets");
  }
  std::vector<VectorPair> paired_vecs, distinct_vecs;
  paired_vecs.reserve(paired.size());
  for (const auto& [a, b] : paired) {
    paired_vecs.emplace_back(embed(encoder, head, cfg.space, a),
                             embed(encoder, head, cfg.space, b));
  }
  distinct_vecs.reserve(distinct.size());
  for (const auto& [a, b] : distinct) {
    distinct_vecs.emplace_back(embed(encoder, head, cfg.space, a),
                               embed(encoder, head, cfg.space, b));
  }
  return rates_from_pairs(paired_vecs, distinct_vecs, cfg.metric,
                          cfg.threshold);
}

double calibrate_threshold(std::vector<double> distinct_scores, Metric metric,
                           double target_fpr) {
  if (distinct_scores.empty()) {
    throw ParameterError("calibrate_threshold: no scores");
  }
  if (target_fpr < 0.0 || target_fpr > 1.0) {
    throw ParameterError("calibrate_threshold: target_fpr must be in [0,1]");
  }
  std::sort(distinct_scores.begin(), distinct_scores.end());
  const auto n = distinct_scores.size();
  const auto budget =
      static_cast<std::size_t>(target_fpr * static_cast<double>(n));
  if (metric == Metric::l2) {
    // Flags when score < tau: tau just at the budget-th smallest score.
    return budget == 0 ? distinct_scores.front()
                       : distinct_scores[budget - 1] +
                             1e-12 * std::max(1.0, distinct_scores[budget - 1]);
  }
  // Cosine flags when score > tau: tau just at the budget-th largest score.
  return budget == 0 ? distinct_scores.back()
                     : distinct_scores[n - budget];
}

std::vector<std::vector<std::string>> cross_account_scan(
    const HistoryStore& store, const DetectorConfig& cfg) {
  const std::vector<std::string> accounts = store.accounts();
  if (accounts.size() < 2) {
    throw ParameterError("cross_account_scan: need at least 2 accounts");
  }
  std::vector<std::size_t> parent(accounts.size());
  std::iota(parent.begin(), parent.end(), 0);
  std::function<std::size_t(std::size_t)> find = [&](std::size_t x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  };

  std::vector<std::vector<std::pair<std::uint64_t, std::vector<double>>>>
      histories;
  histories.reserve(accounts.size());
  for (const auto& a : accounts) histories.push_back(store.account_history(a));

  for (std::size_t i = 0; i < accounts.size(); ++i) {
    for (std::size_t j = i + 1; j < accounts.size(); ++j) {
      if (find(i) == find(j)) continue;
      bool linked = false;
      for (const auto& [ida, va] : histories[i]) {
        for (const auto& [idb, vb] : histories[j]) {
          if (va.size() != vb.size()) continue;
          if (flags(cfg.metric, cfg.threshold,
                    score_between(cfg.metric, va, vb))) {
            linked = true;
            break;
          }
        }
        if (linked) break;
      }
      if (linked) parent[find(i)] = find(j);
    }
  }

  std::map<std::size_t, std::vector<std::string>> groups;
  for (std::size_t i = 0; i < accounts.size(); ++i) {
    groups[find(i)].push_back(accounts[i]);
  }
  std::vector<std::vector<std::string>> out;
  for (auto& [_, members] : groups) {
    std::sort(members.begin(), members.end());
    out.push_back(std::move(members));
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace exlab
