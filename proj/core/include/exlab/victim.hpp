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

#include <atomic>
#include <map>
#include <mutex>
#include <optional>
#include <variant>

#include "exlab/augment.hpp"
#include "exlab/defense_active.hpp"
#include "exlab/defense_detect.hpp"
#include "exlab/optimizer.hpp"
#include "exlab/pow.hpp"
#include "exlab/synthdata.hpp"

namespace exlab {

/// Layer widths for the victim stack. Output layers are identity; hidden
/// layers use hidden_act. Defaults: encoder 256->256->64 (d = 64
/// representations), head 64->64->32 (p = 32 projections), augmentation
/// predictor 64->32->2.
struct ArchConfig {
  std::vector<std::size_t> encoder_widths{256, 256, 64};
  std::vector<std::size_t> head_widths{64, 64, 32};
  std::vector<std::size_t> predictor_widths{64, 32, 2};
  Activation hidden_act = Activation::relu;

  void validate() const;
  std::size_t rep_dim() const { return encoder_widths.back(); }
  std::size_t proj_dim() const { return head_widths.back(); }
};

struct TrainConfig {
  OptimizerConfig opt{OptimizerKind::adam, 1e-3};
  int epochs = 30;
  int batch = 128;
  double temperature = 0.5;
  double watermark_weight = 1.0;  // lambda coupling the predictor objective
  std::uint64_t seed = 7;
};

struct VictimModel {
  Network encoder;  // f_v
  Network head;     // g_v
  std::optional<Network> aug_predictor;
  ArchConfig arch;
  TrainConfig train_cfg;
  ViewPolicy policy;
  std::vector<double> epoch_losses;  // mean per-step loss, one per epoch

  std::size_t rep_dim() const { return encoder.output_dim(); }
  std::size_t proj_dim() const { return head.output_dim(); }
};

/// SimCLR-style contrastive training of encoder + head with info_nce on
/// z = g(f(view)); deterministic per seed. Divergence raises NumericError
/// naming the epoch/step/seed.
VictimModel train_victim(const LabeledDataset& data, const ViewPolicy& policy,
                         const ArchConfig& arch, const TrainConfig& cfg);

/// Same plus the rotation-watermark objective: per step the total loss is
/// info_nce + watermark_weight * cross-entropy of the augmentation
/// predictor on watermark pairs drawn from the same batch images. With
/// watermark_weight == 0 the encoder/head trajectory is identical to
/// train_victim at the same seed and the predictor stays at init.
VictimModel train_victim_watermarked(const LabeledDataset& data,
                                     const ViewPolicy& policy,
                                     const ArchConfig& arch,
                                     const TrainConfig& cfg);

/// Plain supervised classifier (cross-entropy, no augmentation); widths end
/// in the class count. Used as the overfitting-prone baseline for dataset
/// inference comparisons. Representations live in the penultimate layer:
/// net.truncated(net.layer_count() - 1).
Network train_supervised_classifier(const LabeledDataset& data,
                                    const std::vector<std::size_t>& widths,
                                    const OptimizerConfig& opt, int epochs,
                                    int batch, std::uint64_t seed);

enum class Expose { representations_y, projections_z };

struct SimilarityPerturbConfig {
  DetectorConfig detector;
  NoiseConfig big_noise;  // replacement noise for flagged queries
};

struct PowGateConfig {
  DifficultyPolicy policy;
};

/// Defense stages run in configured order. Keep the gate first: a denial
/// must not consume noise draws.
using DefenseStage =
    std::variant<PowGateConfig, SimilarityPerturbConfig, NoiseConfig>;

struct ServeConfig {
  Expose expose = Expose::representations_y;
  std::vector<DefenseStage> defenses;
  bool log_queries = true;
  std::uint64_t rng_seed = 1234;
};

struct QueryLogEntry {
  std::string account;
  std::uint64_t index = 0;  // per-account, monotone from 0
  std::string input_hash;   // sha256 of the pixel bytes
  std::vector<double> served;
  std::vector<std::string> defense_actions;
};

/// Append-only, serialized. Line format (external interface):
///   account,index,hash,v0,...,vD-1,flags
/// where flags is ';'-joined action names or '-' when none applied.
class QueryLog {
 public:
  void append(QueryLogEntry entry);
  std::size_t size() const;
  std::vector<QueryLogEntry> entries() const;
  void write_lines(const std::filesystem::path& path) const;
  static std::string format_line(const QueryLogEntry& entry);

 private:
  mutable std::mutex mutex_;
  std::vector<QueryLogEntry> entries_;
};

/// The representation API the attacker talks to. Serving never mutates
/// model parameters and is safe under concurrent calls from multiple
/// accounts.
class VictimApi {
 public:
  VictimApi(VictimModel model, ServeConfig cfg);

  /// Serves f(x) (or g(f(x)) when exposing projections) after the defense
  /// chain. Throws AccessDeniedError carrying a fresh puzzle when a PoW
  /// gate is active and no valid solution accompanies the query.
  std::vector<double> serve(const std::string& account, const GridImage& input);
  std::vector<double> serve(const std::string& account, const GridImage& input,
                            std::span<const std::uint8_t> pow_suffix);

  std::size_t served_dim() const;
  const VictimModel& model() const { return model_; }
  const QueryLog& log() const { return log_; }
  const HistoryStore& history() const { return history_; }
  std::uint64_t total_queries() const { return total_queries_.load(); }

 private:
  struct AccountState {
    std::uint64_t query_counter = 0;
    int detector_flags = 0;
    std::optional<Puzzle> pending_puzzle;
  };

  std::vector<double> serve_impl(const std::string& account,
                                 const GridImage& input,
                                 std::span<const std::uint8_t> pow_suffix,
                                 bool has_suffix);

  VictimModel model_;
  ServeConfig cfg_;
  QueryLog log_;
  HistoryStore history_;
  PuzzleIssuer issuer_;
  std::mutex state_mutex_;   // account states
  std::map<std::string, AccountState> accounts_;
  std::mutex rng_mutex_;
  Rng noise_rng_;
  std::atomic<std::uint64_t> total_queries_{0};
};

/// Simulated client that solves PoW challenges as needed (one puzzle per
/// query when the gate is active).
std::vector<double> query_with_pow(VictimApi& api, const std::string& account,
                                   const GridImage& input,
                                   std::uint64_t max_attempts = 1 << 22);

std::string image_hash(const GridImage& img);

}  // namespace exlab
