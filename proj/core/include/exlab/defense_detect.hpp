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

#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "exlab/augment.hpp"
#include "exlab/network.hpp"

namespace exlab {

enum class Metric { l2, cosine };
enum class Space { projection_z, representation_y };

const char* to_string(Metric m);
Metric metric_from_string(const std::string& s);
const char* to_string(Space s);
Space space_from_string(const std::string& s);

/// l2 flags when distance < threshold; cosine flags when similarity >
/// threshold. Comparison happens in head-projected space by default.
struct DetectorConfig {
  Metric metric = Metric::l2;
  double threshold = 0.0;
  Space space = Space::projection_z;
};

/// Per-account append-only history of served vectors. Appends are
/// serialized; reads take a snapshot of one account's list.
class HistoryStore {
 public:
  std::uint64_t append(const std::string& account,
                       std::vector<double> vec);
  std::vector<std::pair<std::uint64_t, std::vector<double>>> account_history(
      const std::string& account) const;
  std::vector<std::string> accounts() const;
  std::size_t total_records() const;

 private:
  mutable std::mutex mutex_;
  std::map<std::string,
           std::vector<std::pair<std::uint64_t, std::vector<double>>>>
      records_;
};

/// Appends; returns the per-account monotone id (0-based). vec must be
/// finite.
std::uint64_t record(HistoryStore& store, const std::string& account,
                     std::span<const double> vec);

struct SimilarityVerdict {
  bool flagged = false;
  std::optional<std::uint64_t> best_match_id;
  /// Distance for l2, similarity for cosine; unset when history is empty.
  double best_score = 0.0;
};

/// Exact linear scan over the account's history. An empty history never
/// flags.
SimilarityVerdict check_similar(const HistoryStore& store,
                                const std::string& account,
                                std::span<const double> vec,
                                const DetectorConfig& cfg);

struct Rates {
  double fpr = 0.0;
  double fnr = 0.0;
};

using VectorPair = std::pair<std::vector<double>, std::vector<double>>;

/// FNR = fraction of same-input pairs not flagged; FPR = fraction of
/// distinct-input pairs flagged. Operates on precomputed vectors.
Rates rates_from_pairs(std::span<const VectorPair> paired,
                       std::span<const VectorPair> distinct, Metric metric,
                       double threshold);

using ImagePair = std::pair<GridImage, GridImage>;

/// Embeds the image pairs in the configured space (encoder output, or head
/// of encoder output) and computes FPR/FNR at cfg.threshold.
Rates evaluate_rates(const Network& encoder, const Network& head,
                     const DetectorConfig& cfg,
                     std::span<const ImagePair> paired,
                     std::span<const ImagePair> distinct);

/// Pair scores in the configured metric/space (distance for l2, similarity
/// for cosine); useful for threshold calibration.
std::vector<double> pair_scores(const Network& encoder, const Network& head,
                                Metric metric, Space space,
                                std::span<const ImagePair> pairs);

/// Largest l2 threshold (or smallest cosine threshold) with FPR <=
/// target_fpr on the given distinct-pair scores.
double calibrate_threshold(std::vector<double> distinct_scores, Metric metric,
                           double target_fpr);

/// Union-find grouping of accounts: two accounts are linked whenever any
/// cross-account pair of stored vectors is flagged under cfg. Every account
/// lands in exactly one group (singletons included); members and groups are
/// sorted so the partition is independent of account labeling.
std::vector<std::vector<std::string>> cross_account_scan(
    const HistoryStore& store, const DetectorConfig& cfg);

}  // namespace exlab
