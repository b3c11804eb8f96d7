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

#include "exlab/stats.hpp"

#include <cmath>
#include <limits>

#include "exlab/errors.hpp"

namespace exlab {

double mean(std::span<const double> v) {
  if (v.empty()) throw ParameterError("mean: empty sample");
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double sample_variance(std::span<const double> v) {
  if (v.size() < 2) throw ParameterError("sample_variance: need n >= 2");
  const double m = mean(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return s / static_cast<double>(v.size() - 1);
}

namespace {

void require_finite_sample(std::span<const double> v, const char* name) {
  for (double x : v) {
    if (!std::isfinite(x)) {
      throw NumericError(std::string("t-test: non-finite entry in sample ") +
                         name);
    }
  }
}

// Zero-variance exact decision: p = 0 if the effect is positive, else 1.
TTestResult exact_path(double delta) {
  TTestResult r;
  r.delta_mu = delta;
  r.df = 0.0;
  if (delta > 0.0) {
    r.t = std::numeric_limits<double>::infinity();
    r.p = 0.0;
  } else if (delta < 0.0) {
    r.t = -std::numeric_limits<double>::infinity();
    r.p = 1.0;
  } else {
    r.t = 0.0;
    r.p = 1.0;
  }
  return r;
}

// Continued fraction for the incomplete beta (Lentz's method).
double betacf(double a, double b, double x) {
  constexpr int kMaxIter = 500;
  constexpr double kEps = 1e-12;
  constexpr double kTiny = 1e-300;

  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kEps) return h;
  }
  throw NumericError("incomplete_beta: continued fraction did not converge");
}

}  // namespace

double incomplete_beta(double a, double b, double x) {
  if (!(a > 0.0) || !(b > 0.0)) {
    throw ParameterError("incomplete_beta: a, b must be > 0");
  }
  if (x < 0.0 || x > 1.0) {
    throw ParameterError("incomplete_beta: x must be in [0,1]");
  }
  if (x == 0.0) return 0.0;
  if (x == 1.0) return 1.0;
  const double ln_front = std::lgamma(a + b) - std::lgamma(a) -
                          std::lgamma(b) + a * std::log(x) +
                          b * std::log1p(-x);
  const double front = std::exp(ln_front);
  // Use the symmetry transform where the continued fraction converges fast.
  if (x < (a + 1.0) / (a + b + 2.0)) {
    return front * betacf(a, b, x) / a;
  }
  return 1.0 - front * betacf(b, a, 1.0 - x) / b;
}

double t_tail(double t, double df) {
  if (!(df > 0.0)) throw ParameterError("t_tail: df must be > 0");
  if (std::isinf(t)) return t > 0.0 ? 0.0 : 1.0;
  if (t == 0.0) return 0.5;
  const double x = df / (df + t * t);
  const double half_tail = 0.5 * incomplete_beta(0.5 * df, 0.5, x);
  return t > 0.0 ? half_tail : 1.0 - half_tail;
}

TTestResult welch_t(std::span<const double> a, std::span<const double> b) {
  if (a.size() < 2 || b.size() < 2) {
    throw ParameterError("welch_t: both samples need n >= 2");
  }
  require_finite_sample(a, "a");
  require_finite_sample(b, "b");
  const double ma = mean(a), mb = mean(b);
  const double va = sample_variance(a), vb = sample_variance(b);
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  const double q = va / na + vb / nb;
  if (q == 0.0) return exact_path(ma - mb);

  TTestResult r;
  r.delta_mu = ma - mb;
  r.t = r.delta_mu / std::sqrt(q);
  r.df = q * q /
         ((va / na) * (va / na) / (na - 1.0) +
          (vb / nb) * (vb / nb) / (nb - 1.0));
  r.p = t_tail(r.t, r.df);
  return r;
}

TTestResult one_sample_t(std::span<const double> a, double mu0) {
  if (a.size() < 2) throw ParameterError("one_sample_t: need n >= 2");
  require_finite_sample(a, "a");
  const double m = mean(a);
  const double v = sample_variance(a);
  if (v == 0.0) return exact_path(m - mu0);

  TTestResult r;
  r.delta_mu = m - mu0;
  r.df = static_cast<double>(a.size() - 1);
  r.t = r.delta_mu / std::sqrt(v / static_cast<double>(a.size()));
  r.p = t_tail(r.t, r.df);
  return r;
}

}  // namespace exlab
