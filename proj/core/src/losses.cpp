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

#include "exlab/losses.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "exlab/errors.hpp"

namespace exlab {

const char* to_string(LossKind k) {
  switch (k) {
    case LossKind::mse: return "mse";
    case LossKind::neg_cosine_sym: return "neg_cosine_sym";
    case LossKind::info_nce: return "info_nce";
    case LossKind::soft_nn: return "soft_nn";
    case LossKind::sup_con: return "sup_con";
    case LossKind::barlow: return "barlow";
    case LossKind::wasserstein_1d: return "wasserstein_1d";
  }
  return "?";
}

LossKind loss_kind_from_string(const std::string& s) {
  if (s == "mse") return LossKind::mse;
  if (s == "neg_cosine_sym" || s == "simsiam") return LossKind::neg_cosine_sym;
  if (s == "info_nce" || s == "infonce") return LossKind::info_nce;
  if (s == "soft_nn" || s == "softnn") return LossKind::soft_nn;
  if (s == "sup_con" || s == "supcon") return LossKind::sup_con;
  if (s == "barlow") return LossKind::barlow;
  if (s == "wasserstein_1d" || s == "wasserstein") {
    return LossKind::wasserstein_1d;
  }
  throw ParameterError("unknown loss kind: " + s);
}

namespace {

void require_same_shape(const Tensor& a, const Tensor& b, const char* where) {
  if (!a.same_shape(b)) {
    throw DimensionError(std::string(where) + ": shape mismatch");
  }
}

void finalize(LossOutput& out, const char* where) {
  if (!std::isfinite(out.value)) {
    throw NumericError(std::string(where) + ": non-finite loss value");
  }
  for (const auto& g : out.grads) {
    if (!g.all_finite()) {
      throw NumericError(std::string(where) + ": non-finite gradient");
    }
  }
}

// Row-normalized copy plus norms; throws on zero rows.
Tensor normalize_rows(const Tensor& z, std::vector<double>& norms,
                      const char* where) {
  Tensor out = z;
  norms.resize(z.rows());
  for (std::size_t i = 0; i < z.rows(); ++i) {
    auto row = out.row_span(i);
    const double n = l2_norm(row);
    if (n == 0.0) {
      throw NumericError(std::string(where) + ": zero-norm row " +
                         std::to_string(i));
    }
    norms[i] = n;
    for (auto& v : row) v /= n;
  }
  return out;
}

// Backprop through row normalization: given dL/d(unit row), produce
// dL/d(raw row) = (g - (g . u) u) / norm.
void chain_row_normalization(const Tensor& unit, const std::vector<double>& norms,
                             Tensor& grad) {
  for (std::size_t i = 0; i < grad.rows(); ++i) {
    auto g = grad.row_span(i);
    const auto u = unit.row_span(i);
    const double gu = dot(g, u);
    for (std::size_t j = 0; j < g.size(); ++j) {
      g[j] = (g[j] - gu * u[j]) / norms[i];
    }
  }
}

}  // namespace

LossOutput mse_loss(const Tensor& y_a, const Tensor& y_v) {
  require_same_shape(y_a, y_v, "mse");
  const double n = static_cast<double>(y_a.size());
  LossOutput out;
  Tensor grad = y_a;
  double total = 0.0;
  for (std::size_t i = 0; i < y_a.size(); ++i) {
    const double diff = y_a[i] - y_v[i];
    total += diff * diff;
    grad[i] = 2.0 * diff / n;
  }
  out.value = total / n;
  out.grads.push_back(std::move(grad));
  finalize(out, "mse");
  return out;
}

LossOutput neg_cosine_sym(const Tensor& p1, const Tensor& z2, const Tensor& p2,
                          const Tensor& z1) {
  require_same_shape(p1, z2, "neg_cosine_sym");
  require_same_shape(p1, p2, "neg_cosine_sym");
  require_same_shape(p1, z1, "neg_cosine_sym");
  const std::size_t batch = p1.rows();
  const double scale = 1.0 / (2.0 * static_cast<double>(batch));

  LossOutput out;
  Tensor grad_p1 = Tensor({p1.rows(), p1.cols()});
  Tensor grad_p2 = Tensor({p1.rows(), p1.cols()});

  auto accumulate = [&](const Tensor& p, const Tensor& z, Tensor& grad) {
    double total = 0.0;
    for (std::size_t i = 0; i < batch; ++i) {
      const auto pr = p.row_span(i);
      const auto zr = z.row_span(i);
      const double np = l2_norm(pr), nz = l2_norm(zr);
      if (np == 0.0 || nz == 0.0) {
        throw NumericError("neg_cosine_sym: zero-norm row " +
                           std::to_string(i));
      }
      const double cos = dot(pr, zr) / (np * nz);
      total += -cos;
      auto gr = grad.row_span(i);
      for (std::size_t j = 0; j < gr.size(); ++j) {
        gr[j] += -scale * (zr[j] / (np * nz) - cos * pr[j] / (np * np));
      }
    }
    return total;
  };

  out.value = scale * (accumulate(p1, z2, grad_p1) + accumulate(p2, z1, grad_p2));
  // Call order {p1, z2, p2, z1}; the z inputs are gradient-stopped.
  out.grads.push_back(std::move(grad_p1));
  out.grads.push_back(Tensor({z2.rows(), z2.cols()}));
  out.grads.push_back(std::move(grad_p2));
  out.grads.push_back(Tensor({z1.rows(), z1.cols()}));
  finalize(out, "neg_cosine_sym");
  return out;
}

LossOutput info_nce(const Tensor& z, const Tensor& z_prime,
                    double temperature) {
  require_same_shape(z, z_prime, "info_nce");
  if (!(temperature > 0.0)) {
    throw ParameterError("info_nce: temperature must be > 0");
  }
  const std::size_t batch = z.rows();
  if (batch < 2) {
    throw ParameterError("info_nce: batch must be >= 2 (needs negatives)");
  }
  const std::size_t n = 2 * batch;
  const std::size_t d = z.cols();

  // Pool the two view batches.
  Tensor pooled({n, d});
  for (std::size_t i = 0; i < batch; ++i) {
    auto a = pooled.row_span(i);
    auto b = pooled.row_span(batch + i);
    const auto za = z.row_span(i);
    const auto zb = z_prime.row_span(i);
    std::copy(za.begin(), za.end(), a.begin());
    std::copy(zb.begin(), zb.end(), b.begin());
  }
  std::vector<double> norms;
  Tensor unit = normalize_rows(pooled, norms, "info_nce");

  // Cosine logits.
  Tensor sim = matmul_nt(unit, unit);
  sim *= 1.0 / temperature;

  Tensor grad_unit({n, d});
  double total = 0.0;
  std::vector<double> probs(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t pos = i < batch ? i + batch : i - batch;
    double max_logit = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i) max_logit = std::max(max_logit, sim.at(i, j));
    }
    double denom = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      probs[j] = j == i ? 0.0 : std::exp(sim.at(i, j) - max_logit);
      denom += probs[j];
    }
    total += std::log(denom) + max_logit - sim.at(i, pos);
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      const double coeff =
          (probs[j] / denom - (j == pos ? 1.0 : 0.0)) /
          (temperature * static_cast<double>(n));
      auto gi = grad_unit.row_span(i);
      auto gj = grad_unit.row_span(j);
      const auto ui = unit.row_span(i);
      const auto uj = unit.row_span(j);
      for (std::size_t k = 0; k < d; ++k) {
        gi[k] += coeff * uj[k];
        gj[k] += coeff * ui[k];
      }
    }
  }

  chain_row_normalization(unit, norms, grad_unit);

  LossOutput out;
  out.value = total / static_cast<double>(n);
  Tensor grad_z({batch, d}), grad_zp({batch, d});
  for (std::size_t i = 0; i < batch; ++i) {
    const auto a = grad_unit.row_span(i);
    const auto b = grad_unit.row_span(batch + i);
    std::copy(a.begin(), a.end(), grad_z.row_span(i).begin());
    std::copy(b.begin(), b.end(), grad_zp.row_span(i).begin());
  }
  out.grads.push_back(std::move(grad_z));
  out.grads.push_back(std::move(grad_zp));
  finalize(out, "info_nce");
  return out;
}

LossOutput soft_nn(const Tensor& reps, const std::vector<int>& source_ids,
                   double temperature) {
  const std::size_t n = reps.rows();
  if (source_ids.size() != n) {
    throw PairingError("soft_nn: one source id per row required");
  }
  if (!(temperature > 0.0)) {
    throw ParameterError("soft_nn: temperature must be > 0");
  }
  const std::size_t d = reps.cols();

  // Pairwise squared distances.
  Tensor dist2({n, n});
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double v = squared_distance(reps.row_span(i), reps.row_span(j));
      dist2.at(i, j) = v;
      dist2.at(j, i) = v;
    }
  }

  LossOutput out;
  Tensor grad({n, d});
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double min_d2 = std::numeric_limits<double>::infinity();
    bool has_pos = false, has_neg = false;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      min_d2 = std::min(min_d2, dist2.at(i, j));
      (source_ids[j] == source_ids[i] ? has_pos : has_neg) = true;
    }
    if (!has_pos) {
      throw PairingError("soft_nn: row " + std::to_string(i) +
                         " has no positive");
    }
    if (!has_neg) {
      throw PairingError("soft_nn: row " + std::to_string(i) +
                         " has no negative");
    }
    // Shifted weights; the shift cancels in the ratio and in its gradient.
    double num = 0.0, den = 0.0;
    std::vector<double> w(n, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      w[j] = std::exp(-(dist2.at(i, j) - min_d2) / temperature);
      den += w[j];
      if (source_ids[j] == source_ids[i]) num += w[j];
    }
    total += -std::log(num / den);
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i || w[j] == 0.0) continue;
      const double pos_term =
          source_ids[j] == source_ids[i] ? w[j] / num : 0.0;
      const double dl_dd2 = (pos_term - w[j] / den) / temperature /
                            static_cast<double>(n);
      const auto ri = reps.row_span(i);
      const auto rj = reps.row_span(j);
      auto gi = grad.row_span(i);
      auto gj = grad.row_span(j);
      for (std::size_t k = 0; k < d; ++k) {
        const double diff = 2.0 * (ri[k] - rj[k]);
        gi[k] += dl_dd2 * diff;
        gj[k] -= dl_dd2 * diff;
      }
    }
  }
  out.value = total / static_cast<double>(n);
  out.grads.push_back(std::move(grad));
  finalize(out, "soft_nn");
  return out;
}

LossOutput sup_con(const Tensor& z, const std::vector<int>& labels,
                   double temperature) {
  const std::size_t n = z.rows();
  if (labels.size() != n) {
    throw PairingError("sup_con: one label per row required");
  }
  if (!(temperature > 0.0)) {
    throw ParameterError("sup_con: temperature must be > 0");
  }
  if (n < 2) throw ParameterError("sup_con: need at least 2 rows");
  const std::size_t d = z.cols();

  std::vector<double> norms;
  Tensor unit = normalize_rows(z, norms, "sup_con");
  Tensor sim = matmul_nt(unit, unit);
  sim *= 1.0 / temperature;

  Tensor grad_unit({n, d});
  double total = 0.0;
  std::vector<double> probs(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t n_pos = 0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i && labels[j] == labels[i]) ++n_pos;
    }
    if (n_pos == 0) {
      throw PairingError("sup_con: label " + std::to_string(labels[i]) +
                         " has a single row (anchor " + std::to_string(i) +
                         " has no positives)");
    }
    double max_logit = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i) max_logit = std::max(max_logit, sim.at(i, j));
    }
    double denom = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      probs[j] = j == i ? 0.0 : std::exp(sim.at(i, j) - max_logit);
      denom += probs[j];
    }
    const double log_denom = std::log(denom) + max_logit;
    double anchor_loss = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i || labels[j] != labels[i]) continue;
      anchor_loss += log_denom - sim.at(i, j);
    }
    total += anchor_loss / static_cast<double>(n_pos);

    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      const double indicator =
          labels[j] == labels[i] ? 1.0 / static_cast<double>(n_pos) : 0.0;
      const double coeff = (probs[j] / denom - indicator) /
                           (temperature * static_cast<double>(n));
      auto gi = grad_unit.row_span(i);
      auto gj = grad_unit.row_span(j);
      const auto ui = unit.row_span(i);
      const auto uj = unit.row_span(j);
      for (std::size_t k = 0; k < d; ++k) {
        gi[k] += coeff * uj[k];
        gj[k] += coeff * ui[k];
      }
    }
  }

  chain_row_normalization(unit, norms, grad_unit);

  LossOutput out;
  out.value = total / static_cast<double>(n);
  out.grads.push_back(std::move(grad_unit));
  finalize(out, "sup_con");
  return out;
}

LossOutput barlow(const Tensor& z, const Tensor& z_prime,
                  double lambda_offdiag) {
  require_same_shape(z, z_prime, "barlow");
  if (lambda_offdiag < 0.0) {
    throw ParameterError("barlow: lambda must be >= 0");
  }
  const std::size_t batch = z.rows();
  if (batch < 2) throw ParameterError("barlow: batch must be >= 2");
  const std::size_t d = z.cols();
  constexpr double kStdFloor = 1e-8;

  struct Standardized {
    Tensor values;
    std::vector<double> stds;
    std::vector<bool> floored;
  };
  auto standardize = [&](const Tensor& m) {
    Standardized s{m, std::vector<double>(d), std::vector<bool>(d)};
    for (std::size_t j = 0; j < d; ++j) {
      double mu = 0.0;
      for (std::size_t b = 0; b < batch; ++b) mu += m.at(b, j);
      mu /= static_cast<double>(batch);
      double var = 0.0;
      for (std::size_t b = 0; b < batch; ++b) {
        const double c = m.at(b, j) - mu;
        var += c * c;
      }
      var /= static_cast<double>(batch);
      double sd = std::sqrt(var);
      s.floored[j] = sd < kStdFloor;
      if (s.floored[j]) sd = kStdFloor;
      s.stds[j] = sd;
      for (std::size_t b = 0; b < batch; ++b) {
        s.values.at(b, j) = (m.at(b, j) - mu) / sd;
      }
    }
    return s;
  };

  const Standardized a = standardize(z);
  const Standardized b = standardize(z_prime);

  Tensor corr = matmul_tn(a.values, b.values);
  corr *= 1.0 / static_cast<double>(batch);

  double value = 0.0;
  Tensor corr_grad({d, d});
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      const double c = corr.at(i, j);
      if (i == j) {
        value += (1.0 - c) * (1.0 - c);
        corr_grad.at(i, j) = -2.0 * (1.0 - c);
      } else {
        value += lambda_offdiag * c * c;
        corr_grad.at(i, j) = 2.0 * lambda_offdiag * c;
      }
    }
  }

  // dL/d(std values): A side gets B'*Gc^T / batch, B side gets A*Gc / batch.
  Tensor grad_a_std = matmul_nt(b.values, corr_grad);
  grad_a_std *= 1.0 / static_cast<double>(batch);
  Tensor grad_b_std = matmul(a.values, corr_grad);
  grad_b_std *= 1.0 / static_cast<double>(batch);

  // Through the per-column standardization.
  auto chain = [&](const Standardized& s, const Tensor& grad_std) {
    Tensor grad({batch, d});
    for (std::size_t j = 0; j < d; ++j) {
      double g_mean = 0.0, gy_mean = 0.0;
      for (std::size_t r = 0; r < batch; ++r) {
        g_mean += grad_std.at(r, j);
        gy_mean += grad_std.at(r, j) * s.values.at(r, j);
      }
      g_mean /= static_cast<double>(batch);
      gy_mean /= static_cast<double>(batch);
      for (std::size_t r = 0; r < batch; ++r) {
        double v = grad_std.at(r, j) - g_mean;
        if (!s.floored[j]) v -= s.values.at(r, j) * gy_mean;
        grad.at(r, j) = v / s.stds[j];
      }
    }
    return grad;
  };

  LossOutput out;
  out.value = value;
  out.grads.push_back(chain(a, grad_a_std));
  out.grads.push_back(chain(b, grad_b_std));
  finalize(out, "barlow");
  return out;
}

LossOutput wasserstein_1d(const Tensor& y_a, const Tensor& y_v) {
  require_same_shape(y_a, y_v, "wasserstein_1d");
  const std::size_t batch = y_a.rows();
  const std::size_t d = y_a.cols();

  LossOutput out;
  Tensor grad({batch, d});
  double total = 0.0;
  std::vector<std::size_t> order_a(batch), order_v(batch);
  for (std::size_t j = 0; j < d; ++j) {
    for (std::size_t b = 0; b < batch; ++b) order_a[b] = order_v[b] = b;
    std::sort(order_a.begin(), order_a.end(), [&](std::size_t x, std::size_t y) {
      return y_a.at(x, j) < y_a.at(y, j);
    });
    std::sort(order_v.begin(), order_v.end(), [&](std::size_t x, std::size_t y) {
      return y_v.at(x, j) < y_v.at(y, j);
    });
    for (std::size_t r = 0; r < batch; ++r) {
      const double diff = y_a.at(order_a[r], j) - y_v.at(order_v[r], j);
      total += std::fabs(diff);
      // Subgradient 0 at exact ties.
      const double sign = diff > 0.0 ? 1.0 : (diff < 0.0 ? -1.0 : 0.0);
      grad.at(order_a[r], j) =
          sign / static_cast<double>(batch * d);
    }
  }
  out.value = total / static_cast<double>(batch * d);
  out.grads.push_back(std::move(grad));
  finalize(out, "wasserstein_1d");
  return out;
}

LossOutput softmax_cross_entropy(const Tensor& logits,
                                 const std::vector<int>& labels) {
  const std::size_t batch = logits.rows();
  const std::size_t classes = logits.cols();
  if (labels.size() != batch) {
    throw DimensionError("softmax_cross_entropy: one label per row required");
  }
  LossOutput out;
  Tensor grad({batch, classes});
  double total = 0.0;
  for (std::size_t i = 0; i < batch; ++i) {
    const int label = labels[i];
    if (label < 0 || static_cast<std::size_t>(label) >= classes) {
      throw ParameterError("softmax_cross_entropy: label out of range: " +
                           std::to_string(label));
    }
    const auto row = logits.row_span(i);
    const double max_logit = *std::max_element(row.begin(), row.end());
    double denom = 0.0;
    for (double v : row) denom += std::exp(v - max_logit);
    total += std::log(denom) + max_logit - row[label];
    auto g = grad.row_span(i);
    for (std::size_t c = 0; c < classes; ++c) {
      const double p = std::exp(row[c] - max_logit) / denom;
      g[c] = (p - (static_cast<std::size_t>(label) == c ? 1.0 : 0.0)) /
             static_cast<double>(batch);
    }
  }
  out.value = total / static_cast<double>(batch);
  out.grads.push_back(std::move(grad));
  finalize(out, "softmax_cross_entropy");
  return out;
}

StealLoss extraction_loss(LossKind kind, const Tensor& y_a, const Tensor& y_v,
                          const LossHyper& hyper,
                          const std::vector<int>* labels) {
  require_same_shape(y_a, y_v, "extraction_loss");
  const std::size_t batch = y_a.rows();
  const std::size_t d = y_a.cols();
  StealLoss result;
  switch (kind) {
    case LossKind::mse: {
      LossOutput o = mse_loss(y_a, y_v);
      result.value = o.value;
      result.grad_attacker = std::move(o.grads[0]);
      return result;
    }
    case LossKind::wasserstein_1d: {
      LossOutput o = wasserstein_1d(y_a, y_v);
      result.value = o.value;
      result.grad_attacker = std::move(o.grads[0]);
      return result;
    }
    case LossKind::info_nce: {
      LossOutput o = info_nce(y_a, y_v, hyper.temperature);
      result.value = o.value;
      result.grad_attacker = std::move(o.grads[0]);
      return result;
    }
    case LossKind::barlow: {
      LossOutput o = barlow(y_a, y_v, hyper.barlow_lambda);
      result.value = o.value;
      result.grad_attacker = std::move(o.grads[0]);
      return result;
    }
    case LossKind::soft_nn: {
      // Pool attacker and victim rows; positives are the two views of the
      // same source input.
      Tensor pooled({2 * batch, d});
      std::vector<int> sources(2 * batch);
      for (std::size_t i = 0; i < batch; ++i) {
        const auto a = y_a.row_span(i);
        const auto v = y_v.row_span(i);
        std::copy(a.begin(), a.end(), pooled.row_span(i).begin());
        std::copy(v.begin(), v.end(), pooled.row_span(batch + i).begin());
        sources[i] = sources[batch + i] = static_cast<int>(i);
      }
      LossOutput o = soft_nn(pooled, sources, hyper.soft_nn_temperature);
      result.value = o.value;
      result.grad_attacker = Tensor({batch, d});
      for (std::size_t i = 0; i < batch; ++i) {
        const auto g = o.grads[0].row_span(i);
        std::copy(g.begin(), g.end(), result.grad_attacker.row_span(i).begin());
      }
      return result;
    }
    case LossKind::sup_con: {
      if (labels == nullptr || labels->size() != batch) {
        throw ParameterError(
            "extraction_loss: sup_con requires one label per pooled input");
      }
      Tensor pooled({2 * batch, d});
      std::vector<int> pooled_labels(2 * batch);
      for (std::size_t i = 0; i < batch; ++i) {
        const auto a = y_a.row_span(i);
        const auto v = y_v.row_span(i);
        std::copy(a.begin(), a.end(), pooled.row_span(i).begin());
        std::copy(v.begin(), v.end(), pooled.row_span(batch + i).begin());
        pooled_labels[i] = pooled_labels[batch + i] = (*labels)[i];
      }
      LossOutput o = sup_con(pooled, pooled_labels, hyper.temperature);
      result.value = o.value;
      result.grad_attacker = Tensor({batch, d});
      for (std::size_t i = 0; i < batch; ++i) {
        const auto g = o.grads[0].row_span(i);
        std::copy(g.begin(), g.end(), result.grad_attacker.row_span(i).begin());
      }
      return result;
    }
    case LossKind::neg_cosine_sym:
      throw ParameterError(
          "extraction_loss: neg_cosine_sym pairs two views per input; use the "
          "attack loop's symmetrized branch");
  }
  throw ParameterError("extraction_loss: unhandled loss kind");
}

}  // namespace exlab
