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

#include <span>

namespace exlab {

/// One-sided test output. p is the upper-tail probability of t under
/// Student's t with df degrees of freedom; delta_mu is the effect size
/// (difference of sample means).
struct TTestResult {
  double t = 0.0;
  double df = 0.0;
  double p = 1.0;
  double delta_mu = 0.0;
};

/// Welch's unequal-variance t-test, alternative "mean(a) > mean(b)".
/// Requires |a|, |b| >= 2 and finite entries. With zero variance in both
/// samples the exact path applies: p = 0 if mean(a) > mean(b), else p = 1
/// (t reported as +/-inf, or 0 when the means tie).
TTestResult welch_t(std::span<const double> a, std::span<const double> b);

/// One-sample t-test of mean(a) > mu0 (df = n-1). Same zero-variance exact
/// path as welch_t.
TTestResult one_sample_t(std::span<const double> a, double mu0);

/// Upper-tail probability P(T > t) for Student's t with df > 0, via the
/// regularized incomplete beta function.
double t_tail(double t, double df);

/// Regularized incomplete beta I_x(a, b), continued-fraction evaluation
/// (Lentz) converged to 1e-12.
double incomplete_beta(double a, double b, double x);

double mean(std::span<const double> v);
/// Unbiased (n-1) sample variance.
double sample_variance(std::span<const double> v);

}  // namespace exlab
