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

#include "exlab/victim.hpp"

#include <algorithm>
#include <cstdio>
#include <cstring>
#include <fstream>

#include "exlab/losses.hpp"

namespace exlab {

void ArchConfig::validate() const {
  if (encoder_widths.size() < 2 || head_widths.size() < 2 ||
      predictor_widths.size() < 2) {
    throw ParameterError("ArchConfig: each stack needs at least {in, out}");
  }
  if (head_widths.front() != encoder_widths.back()) {
    throw DimensionError(
        "ArchConfig: head input width must equal encoder output width");
  }
  if (predictor_widths.front() != encoder_widths.back()) {
    throw DimensionError(
        "ArchConfig: predictor input width must equal encoder output width");
  }
  if (predictor_widths.back() != 2) {
    throw ParameterError(
        "ArchConfig: the augmentation predictor distinguishes 2 intervals");
  }
}

namespace {

struct BatchViews {
  Tensor stacked;            // [2b x in]: first all w rows, then all w' rows
  std::size_t pairs = 0;
};

BatchViews make_contrastive_batch(const LabeledDataset& data,
                                  std::span<const std::size_t> indices,
                                  const ViewPolicy& policy, Rng& rng) {
  BatchViews out;
  out.pairs = indices.size();
  const std::size_t dim =
      data.images.front().height * data.images.front().width;
  out.stacked = Tensor({2 * out.pairs, dim});
  for (std::size_t i = 0; i < indices.size(); ++i) {
    const ViewPair pair =
        sample_view_pair(data.images[indices[i]], policy, rng);
    const auto w = flatten(pair.first);
    const auto wp = flatten(pair.second);
    std::copy(w.begin(), w.end(), out.stacked.row_span(i).begin());
    std::copy(wp.begin(), wp.end(),
              out.stacked.row_span(out.pairs + i).begin());
  }
  return out;
}

VictimModel train_impl(const LabeledDataset& data, const ViewPolicy& policy,
                       const ArchConfig& arch, const TrainConfig& cfg,
                       bool watermarked) {
  arch.validate();
  policy.validate();
  cfg.opt.validate();
  if (data.size() == 0) throw ParameterError("train_victim: empty dataset");
  if (cfg.batch < 2) throw ParameterError("train_victim: batch must be >= 2");
  const std::size_t pixel_dim =
      data.images.front().height * data.images.front().width;
  if (arch.encoder_widths.front() != pixel_dim) {
    throw DimensionError("train_victim: encoder input width " +
                         std::to_string(arch.encoder_widths.front()) +
                         " does not match image pixels " +
                         std::to_string(pixel_dim));
  }

  VictimModel model;
  model.arch = arch;
  model.train_cfg = cfg;
  model.policy = policy;

  Rng init_rng = Rng::stream(cfg.seed, 0);
  model.encoder = Network::dense(arch.encoder_widths, arch.hidden_act,
                                 Activation::identity, init_rng);
  model.head = Network::dense(arch.head_widths, arch.hidden_act,
                              Activation::identity, init_rng);
  // The predictor draws from its own stream so that plain and watermarked
  // runs share encoder/head initialization bit for bit.
  Rng predictor_rng = Rng::stream(cfg.seed, 3);
  model.aug_predictor = Network::dense(arch.predictor_widths, arch.hidden_act,
                                       Activation::identity, predictor_rng);
  if (!watermarked) model.aug_predictor.reset();

  Rng main_rng = Rng::stream(cfg.seed, 1);
  Rng wm_rng = Rng::stream(cfg.seed, 2);
  OptimizerState enc_state, head_state, pred_state;
  const bool use_watermark = watermarked && cfg.watermark_weight > 0.0;

  std::vector<std::size_t> order(data.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  const std::size_t batch =
      std::min<std::size_t>(static_cast<std::size_t>(cfg.batch), data.size());

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    main_rng.shuffle(order);
    double epoch_loss = 0.0;
    std::size_t steps = 0;
    for (std::size_t start = 0; start < order.size(); start += batch) {
      const std::size_t take = std::min(batch, order.size() - start);
      if (take < 2) break;  // info_nce needs negatives
      const std::span<const std::size_t> indices(order.data() + start, take);
      try {
        const BatchViews views =
            make_contrastive_batch(data, indices, policy, main_rng);
        ForwardTrace enc_trace = forward(model.encoder, views.stacked);
        ForwardTrace head_trace = forward(model.head, enc_trace.output);

        const std::size_t b = views.pairs;
        const std::size_t p = model.head.output_dim();
        Tensor z({b, p}), z_prime({b, p});
        for (std::size_t i = 0; i < b; ++i) {
          const auto zr = head_trace.output.row_span(i);
          const auto zp = head_trace.output.row_span(b + i);
          std::copy(zr.begin(), zr.end(), z.row_span(i).begin());
          std::copy(zp.begin(), zp.end(), z_prime.row_span(i).begin());
        }
        LossOutput nce = info_nce(z, z_prime, cfg.temperature);
        double step_loss = nce.value;

        Tensor z_grad({2 * b, p});
        for (std::size_t i = 0; i < b; ++i) {
          const auto g0 = nce.grads[0].row_span(i);
          const auto g1 = nce.grads[1].row_span(i);
          std::copy(g0.begin(), g0.end(), z_grad.row_span(i).begin());
          std::copy(g1.begin(), g1.end(), z_grad.row_span(b + i).begin());
        }
        BackwardResult head_back = backward(model.head, head_trace, z_grad);
        BackwardResult enc_back =
            backward(model.encoder, enc_trace, head_back.input_grad);

        ParamGrads pred_grads;
        if (use_watermark) {
          // Watermark pairs from the same images as the contrastive batch.
          const std::size_t dim = views.stacked.cols();
          Tensor wm_batch({2 * b, dim});
          std::vector<int> wm_labels(2 * b);
          for (std::size_t i = 0; i < b; ++i) {
            const WatermarkPair pair =
                sample_watermark_pair(data.images[indices[i]], wm_rng);
            const auto v0 = flatten(pair.view0);
            const auto v1 = flatten(pair.view1);
            std::copy(v0.begin(), v0.end(),
                      wm_batch.row_span(2 * i).begin());
            std::copy(v1.begin(), v1.end(),
                      wm_batch.row_span(2 * i + 1).begin());
            wm_labels[2 * i] = WatermarkPair::kLabel0;
            wm_labels[2 * i + 1] = WatermarkPair::kLabel1;
          }
          ForwardTrace wm_enc_trace = forward(model.encoder, wm_batch);
          ForwardTrace pred_trace =
              forward(*model.aug_predictor, wm_enc_trace.output);
          LossOutput ce = softmax_cross_entropy(pred_trace.output, wm_labels);
          step_loss += cfg.watermark_weight * ce.value;

          BackwardResult pred_back =
              backward(*model.aug_predictor, pred_trace, ce.grads[0]);
          BackwardResult wm_enc_back =
              backward(model.encoder, wm_enc_trace, pred_back.input_grad);
          pred_grads = std::move(pred_back.grads);
          pred_grads.scale(cfg.watermark_weight);
          enc_back.grads.accumulate(wm_enc_back.grads, cfg.watermark_weight);
        }

        optimizer_step(model.encoder, enc_back.grads, cfg.opt, enc_state);
        optimizer_step(model.head, head_back.grads, cfg.opt, head_state);
        if (use_watermark) {
          optimizer_step(*model.aug_predictor, pred_grads, cfg.opt,
                         pred_state);
        }
        epoch_loss += step_loss;
        ++steps;
      } catch (const NumericError& e) {
        throw NumericError("train_victim: " + std::string(e.what()) +
                           " (epoch " + std::to_string(epoch) + ", step " +
                           std::to_string(steps) + ", seed " +
                           std::to_string(cfg.seed) + ")");
      }
    }
    model.epoch_losses.push_back(steps > 0 ? epoch_loss / static_cast<double>(steps)
                                           : 0.0);
  }
  return model;
}

}  // namespace

VictimModel train_victim(const LabeledDataset& data, const ViewPolicy& policy,
                         const ArchConfig& arch, const TrainConfig& cfg) {
  return train_impl(data, policy, arch, cfg, /*watermarked=*/false);
}

VictimModel train_victim_watermarked(const LabeledDataset& data,
                                     const ViewPolicy& policy,
                                     const ArchConfig& arch,
                                     const TrainConfig& cfg) {
  return train_impl(data, policy, arch, cfg, /*watermarked=*/true);
}

Network train_supervised_classifier(const LabeledDataset& data,
                                    const std::vector<std::size_t>& widths,
                                    const OptimizerConfig& opt, int epochs,
                                    int batch, std::uint64_t seed) {
  opt.validate();
  if (data.size() == 0) {
    throw ParameterError("train_supervised_classifier: empty dataset");
  }
  if (batch < 1) {
    throw ParameterError("train_supervised_classifier: batch must be >= 1");
  }
  Rng init_rng = Rng::stream(seed, 4);
  Network net = Network::dense(widths, Activation::relu, Activation::identity,
                               init_rng);
  Rng rng = Rng::stream(seed, 5);
  OptimizerState state;

  const Tensor all = images_to_batch(data.images);
  std::vector<std::size_t> order(data.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  const std::size_t b =
      std::min<std::size_t>(static_cast<std::size_t>(batch), data.size());

  for (int epoch = 0; epoch < epochs; ++epoch) {
    rng.shuffle(order);
    for (std::size_t start = 0; start + b <= order.size(); start += b) {
      Tensor x({b, all.cols()});
      std::vector<int> labels(b);
      for (std::size_t i = 0; i < b; ++i) {
        const auto row = all.row_span(order[start + i]);
        std::copy(row.begin(), row.end(), x.row_span(i).begin());
        labels[i] = data.labels[order[start + i]];
      }
      ForwardTrace trace = forward(net, x);
      LossOutput loss = softmax_cross_entropy(trace.output, labels);
      BackwardResult back = backward(net, trace, loss.grads[0]);
      optimizer_step(net, back.grads, opt, state);
    }
  }
  return net;
}

void QueryLog::append(QueryLogEntry entry) {
  std::lock_guard lock(mutex_);
  entries_.push_back(std::move(entry));
}

std::size_t QueryLog::size() const {
  std::lock_guard lock(mutex_);
  return entries_.size();
}

std::vector<QueryLogEntry> QueryLog::entries() const {
  std::lock_guard lock(mutex_);
  return entries_;
}

std::string QueryLog::format_line(const QueryLogEntry& entry) {
  std::string line = entry.account + ',' + std::to_string(entry.index) + ',' +
                     entry.input_hash;
  char buf[40];
  for (double v : entry.served) {
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    line += ',';
    line += buf;
  }
  line += ',';
  if (entry.defense_actions.empty()) {
    line += '-';
  } else {
    for (std::size_t i = 0; i < entry.defense_actions.size(); ++i) {
      if (i > 0) line += ';';
      line += entry.defense_actions[i];
    }
  }
  return line;
}

void QueryLog::write_lines(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw FileError("QueryLog: cannot open " + path.string());
  for (const auto& entry : entries()) out << format_line(entry) << '\n';
}

std::string image_hash(const GridImage& img) {
  const auto pixels = img.pixels.data();
  std::vector<std::uint8_t> bytes(pixels.size() * sizeof(double));
  std::memcpy(bytes.data(), pixels.data(), bytes.size());
  return sha256_hex(bytes);
}

VictimApi::VictimApi(VictimModel model, ServeConfig cfg)
    : model_(std::move(model)),
      cfg_(std::move(cfg)),
      noise_rng_(derive_seed(cfg_.rng_seed, 9)) {
  for (const auto& stage : cfg_.defenses) {
    if (const auto* noise = std::get_if<NoiseConfig>(&stage)) {
      noise->validate();
    } else if (const auto* sim = std::get_if<SimilarityPerturbConfig>(&stage)) {
      sim->big_noise.validate();
    } else if (const auto* pow = std::get_if<PowGateConfig>(&stage)) {
      pow->policy.validate();
    }
  }
}

std::size_t VictimApi::served_dim() const {
  return cfg_.expose == Expose::representations_y ? model_.rep_dim()
                                                  : model_.proj_dim();
}

std::vector<double> VictimApi::serve(const std::string& account,
                                     const GridImage& input) {
  return serve_impl(account, input, {}, /*has_suffix=*/false);
}

std::vector<double> VictimApi::serve(const std::string& account,
                                     const GridImage& input,
                                     std::span<const std::uint8_t> pow_suffix) {
  return serve_impl(account, input, pow_suffix, /*has_suffix=*/true);
}

std::vector<double> VictimApi::serve_impl(
    const std::string& account, const GridImage& input,
    std::span<const std::uint8_t> pow_suffix, bool has_suffix) {
  // Model parameters are read-only here; forward passes are safe under
  // concurrency.
  const Tensor y = forward_output(model_.encoder, image_to_row(input));
  const Tensor z = forward_output(model_.head, y);
  const auto y_row = y.row_span(0);
  const auto z_row = z.row_span(0);
  std::vector<double> served =
      cfg_.expose == Expose::representations_y
          ? std::vector<double>(y_row.begin(), y_row.end())
          : std::vector<double>(z_row.begin(), z_row.end());

  std::vector<std::string> actions;
  bool flagged_this_query = false;

  for (const auto& stage : cfg_.defenses) {
    if (const auto* gate = std::get_if<PowGateConfig>(&stage)) {
      std::lock_guard lock(state_mutex_);
      AccountState& st = accounts_[account];
      const bool valid = has_suffix && st.pending_puzzle &&
                         verify(*st.pending_puzzle, pow_suffix);
      if (!valid) {
        Puzzle puzzle = issuer_.make_puzzle(account, gate->policy,
                                            st.detector_flags,
                                            st.query_counter);
        st.pending_puzzle = puzzle;
        throw AccessDeniedError(
            "serve: proof-of-work required for account " + account,
            std::move(puzzle));
      }
      st.pending_puzzle.reset();  // one puzzle admits exactly one query
      actions.emplace_back("pow_ok");
    } else if (const auto* sim = std::get_if<SimilarityPerturbConfig>(&stage)) {
      const std::span<const double> probe_vec =
          sim->detector.space == Space::projection_z ? z_row : y_row;
      const SimilarityVerdict verdict =
          check_similar(history_, account, probe_vec, sim->detector);
      if (verdict.flagged) {
        std::lock_guard lock(rng_mutex_);
        served = perturb_if_similar(served, verdict, sim->big_noise,
                                    noise_rng_);
        actions.emplace_back("similar_replaced");
        flagged_this_query = true;
      }
    } else if (const auto* noise = std::get_if<NoiseConfig>(&stage)) {
      std::lock_guard lock(rng_mutex_);
      served = perturb_noise(served, *noise, noise_rng_);
      actions.emplace_back("noise");
    }
  }

  // History always stores the clean detector-space vector (z by default);
  // appended after the similarity check so a query never matches itself.
  record(history_, account,
         std::vector<double>(z_row.begin(), z_row.end()));

  std::uint64_t index = 0;
  {
    std::lock_guard lock(state_mutex_);
    AccountState& st = accounts_[account];
    index = st.query_counter++;
    if (flagged_this_query) ++st.detector_flags;
  }
  total_queries_.fetch_add(1);

  if (cfg_.log_queries) {
    log_.append(QueryLogEntry{account, index, image_hash(input), served,
                              std::move(actions)});
  }
  return served;
}

std::vector<double> query_with_pow(VictimApi& api, const std::string& account,
                                   const GridImage& input,
                                   std::uint64_t max_attempts) {
  try {
    return api.serve(account, input);
  } catch (const AccessDeniedError& denied) {
    const SolveResult solution = solve(denied.puzzle(), max_attempts);
    return api.serve(account, input, solution.suffix);
  }
}

}  // namespace exlab
