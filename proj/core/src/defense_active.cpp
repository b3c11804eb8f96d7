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

#include "exlab/defense_active.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "exlab/errors.hpp"

namespace exlab {

void NoiseConfig::validate() const {
  if (sigma < 0.0) throw ParameterError("NoiseConfig: sigma must be >= 0");
}

std::vector<double> perturb_noise(std::span<const double> y,
                                  const NoiseConfig& cfg, Rng& rng) {
  cfg.validate();
  std::vector<double> out(y.begin(), y.end());
  if (cfg.mean == 0.0 && cfg.sigma == 0.0) return out;
  for (auto& v : out) v += rng.normal(cfg.mean, cfg.sigma);
  return out;
}

std::vector<double> perturb_if_similar(std::span<const double> y,
                                       const SimilarityVerdict& verdict,
                                       const NoiseConfig& big_noise,
                                       Rng& rng) {
  big_noise.validate();
  if (!verdict.flagged) return std::vector<double>(y.begin(), y.end());
  std::vector<double> out(y.size());
  for (auto& v : out) v = rng.normal(big_noise.mean, big_noise.sigma);
  return out;
}

namespace {

std::vector<double> flatten_grads(const ParamGrads& grads) {
  std::vector<double> flat;
  for (std::size_t k = 0; k < grads.weights.size(); ++k) {
    const auto w = grads.weights[k].data();
    flat.insert(flat.end(), w.begin(), w.end());
    const auto b = grads.biases[k].data();
    flat.insert(flat.end(), b.begin(), b.end());
  }
  return flat;
}

// Explicit Jacobian of the model output w.r.t. parameters at one input row:
// one backward pass per output coordinate with a one-hot output gradient.
std::vector<std::vector<double>> param_jacobian(const Network& f,
                                                const ForwardTrace& trace) {
  const std::size_t n = trace.output.cols();
  std::vector<std::vector<double>> jac(n);
  for (std::size_t j = 0; j < n; ++j) {
    Tensor onehot({1, n});
    onehot[j] = 1.0;
    jac[j] = flatten_grads(backward(f, trace, onehot).grads);
  }
  return jac;
}

double cosine_or_throw(std::span<const double> a, std::span<const double> b,
                       const char* where) {
  const double na = l2_norm(a), nb = l2_norm(b);
  if (na == 0.0 || nb == 0.0 || !std::isfinite(na) || !std::isfinite(nb)) {
    throw NumericError(std::string(where) +
                       ": degenerate gradient (zero or non-finite norm)");
  }
  return dot(a, b) / (na * nb);
}

std::vector<double> softmax(std::span<const double> logits) {
  const double mx = *std::max_element(logits.begin(), logits.end());
  std::vector<double> p(logits.size());
  double denom = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    p[i] = std::exp(logits[i] - mx);
    denom += p[i];
  }
  for (auto& v : p) v /= denom;
  return p;
}

std::vector<double> probe_logits_row(const LinearProbe& g,
                                     std::span<const double> y) {
  if (y.size() != g.rep_dim()) {
    throw DimensionError("legit_grad: representation width mismatch");
  }
  std::vector<double> q(g.classes());
  for (std::size_t i = 0; i < g.classes(); ++i) {
    q[i] = dot(g.weights.row_span(i), y) + g.bias[i];
  }
  return q;
}

}  // namespace

std::vector<double> attacker_grad(const Network& f, const Tensor& x_row,
                                  std::span<const double> target) {
  if (x_row.rows() != 1) {
    throw ParameterError("attacker_grad: expects a single input row");
  }
  const ForwardTrace trace = forward(f, x_row);
  const std::size_t n = trace.output.cols();
  if (target.size() != n) {
    throw DimensionError("attacker_grad: target width mismatch");
  }
  const auto jac = param_jacobian(f, trace);
  const std::size_t dim = jac.front().size();
  std::vector<double> out(dim, 0.0);
  const double scale = -2.0 / static_cast<double>(n);
  for (std::size_t j = 0; j < n; ++j) {
    const double residual = trace.output[j] - target[j];
    const double coeff = scale * residual;
    for (std::size_t i = 0; i < dim; ++i) out[i] += coeff * jac[j][i];
  }
  return out;
}

std::vector<double> legit_grad(const LinearProbe& g, std::span<const double> y,
                               std::span<const double> t) {
  if (t.size() != g.classes()) {
    throw DimensionError("legit_grad: label vector width mismatch");
  }
  const std::vector<double> p = softmax(probe_logits_row(g, y));
  const double t_total = std::accumulate(t.begin(), t.end(), 0.0);
  const std::size_t k = g.classes(), n = g.rep_dim();
  // Layout: W row-major, then b (matches flatten_grads on a probe network).
  std::vector<double> out(k * n + k);
  for (std::size_t i = 0; i < k; ++i) {
    const double coeff = t[i] - p[i] * t_total;
    for (std::size_t j = 0; j < n; ++j) out[i * n + j] = coeff * y[j];
    out[k * n + i] = coeff;
  }
  return out;
}

std::vector<double> legit_grad(const LinearProbe& g, std::span<const double> y,
                               int target_class) {
  if (target_class < 0 ||
      static_cast<std::size_t>(target_class) >= g.classes()) {
    throw ParameterError("legit_grad: target class out of range");
  }
  std::vector<double> onehot(g.classes(), 0.0);
  onehot[static_cast<std::size_t>(target_class)] = 1.0;
  return legit_grad(g, y, onehot);
}

void PoisonConfig::validate() const {
  if (!(epsilon > 0.0)) throw ParameterError("PoisonConfig: epsilon must be > 0");
  if (steps < 1) throw ParameterError("PoisonConfig: steps must be >= 1");
  if (beta < 0.0) throw ParameterError("PoisonConfig: beta must be >= 0");
}

PoisonResult poison(std::span<const double> y_v, const Tensor& x_row,
                    const PoisonConfig& cfg) {
  cfg.validate();
  const std::size_t n = y_v.size();
  if (cfg.surrogate_encoder.output_dim() != n) {
    throw DimensionError("poison: surrogate encoder output width mismatch");
  }
  if (cfg.surrogate_probe.rep_dim() != n) {
    throw DimensionError("poison: surrogate probe input width mismatch");
  }
  const double step =
      cfg.step_size > 0.0 ? cfg.step_size : cfg.epsilon / 20.0;

  // Fixed quantities: F(x), its parameter Jacobian, a, and c.
  const ForwardTrace trace = forward(cfg.surrogate_encoder, x_row);
  const auto jac = param_jacobian(cfg.surrogate_encoder, trace);
  const std::size_t dim = jac.front().size();
  const double two_over_n = 2.0 / static_cast<double>(n);

  std::vector<double> a(dim, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    const double coeff = -two_over_n * (trace.output[j] - y_v[j]);
    for (std::size_t i = 0; i < dim; ++i) a[i] += coeff * jac[j][i];
  }
  const std::vector<double> c =
      legit_grad(cfg.surrogate_probe, y_v, cfg.target_class);

  const std::size_t k = cfg.surrogate_probe.classes();
  std::vector<double> t_onehot(k, 0.0);
  t_onehot[static_cast<std::size_t>(cfg.target_class)] = 1.0;

  std::vector<double> y_tilde(y_v.begin(), y_v.end());

  auto compute_b = [&](std::span<const double> yt) {
    std::vector<double> b(dim, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
      const double coeff = -two_over_n * (trace.output[j] - yt[j]);
      for (std::size_t i = 0; i < dim; ++i) b[i] += coeff * jac[j][i];
    }
    return b;
  };

  auto project = [&](std::vector<double>& yt) {
    double norm2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double d = yt[i] - y_v[i];
      norm2 += d * d;
    }
    const double norm = std::sqrt(norm2);
    if (norm > cfg.epsilon) {
      const double shrink = cfg.epsilon / norm;
      for (std::size_t i = 0; i < n; ++i) {
        yt[i] = y_v[i] + shrink * (yt[i] - y_v[i]);
      }
    }
  };

  PoisonResult result;
  const LinearProbe& g = cfg.surrogate_probe;
  for (int it = 0; it < cfg.steps; ++it) {
    const std::vector<double> b = compute_b(y_tilde);
    const double sim_ab = cosine_or_throw(a, b, "poison");
    const double nb = l2_norm(b);
    const double na = l2_norm(a);

    // d(sim_ab)/d(b), then chained through b = a + (2/n) J^T (y~ - y_v).
    std::vector<double> dcos_db(dim);
    for (std::size_t i = 0; i < dim; ++i) {
      dcos_db[i] = a[i] / (na * nb) - sim_ab * b[i] / (nb * nb);
    }
    std::vector<double> grad(n, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
      grad[j] = two_over_n * dot(jac[j], dcos_db);
    }

    // Legitimate-user term: d = legit_grad at y~, with its exact
    // y~-derivative for the linear softmax probe.
    const std::vector<double> d = legit_grad(g, y_tilde, cfg.target_class);
    const double sim_cd = cosine_or_throw(c, d, "poison");
    const double nd = l2_norm(d);
    const double nc = l2_norm(c);
    std::vector<double> u(d.size());
    for (std::size_t i = 0; i < d.size(); ++i) {
      u[i] = c[i] / (nc * nd) - sim_cd * d[i] / (nd * nd);
    }
    const std::vector<double> p = softmax(probe_logits_row(g, y_tilde));
    // r_i = sum_l u_W[i][l] y~_l + u_b[i]; wbar_j = sum_m p_m W_mj.
    std::vector<double> r(k);
    for (std::size_t i = 0; i < k; ++i) {
      double acc = u[k * n + i];
      for (std::size_t l = 0; l < n; ++l) acc += u[i * n + l] * y_tilde[l];
      r[i] = acc;
    }
    for (std::size_t j = 0; j < n; ++j) {
      double wbar = 0.0;
      for (std::size_t m = 0; m < k; ++m) wbar += p[m] * g.weights.at(m, j);
      double dcd = 0.0;
      for (std::size_t i = 0; i < k; ++i) {
        const double s_ji = p[i] * (g.weights.at(i, j) - wbar);
        dcd += -s_ji * r[i] + u[i * n + j] * (t_onehot[i] - p[i]);
      }
      grad[j] -= cfg.beta * dcd;
    }

    for (std::size_t j = 0; j < n; ++j) y_tilde[j] -= step * grad[j];
    project(y_tilde);
    // Ball invariant, checked every step.
    double norm2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double diff = y_tilde[i] - y_v[i];
      norm2 += diff * diff;
    }
    if (std::sqrt(norm2) > cfg.epsilon * (1.0 + 1e-9)) {
      throw NumericError("poison: projection failed to hold the epsilon ball");
    }
  }

  result.y_tilde = y_tilde;
  result.sim_ab = cosine_or_throw(a, compute_b(y_tilde), "poison");
  result.sim_cd = cosine_or_throw(
      c, legit_grad(g, y_tilde, cfg.target_class), "poison");
  result.objective = result.sim_ab - cfg.beta * result.sim_cd;
  if (!std::isfinite(result.objective)) {
    throw NumericError("poison: non-finite objective");
  }
  return result;
}

}  // namespace exlab
