// Copyright 2026 The qjump Authors.
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

// Quadrature and root-finding plumbing shared by the analytics sources.

#pragma once

#include <cmath>
#include <functional>
#include <vector>

namespace qjump::detail {

inline double logit(double q) { return std::log(q) - std::log1p(-q); }
inline double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// log(Q (1 - Q)) at Q = logistic(x), without cancellation.
inline double log_g_logit(double x) {
  const double a = std::abs(x);
  return -a - 2.0 * std::log1p(std::exp(-a));
}

inline double g_logit(double x) { return std::exp(log_g_logit(x)); }

// Globally adaptive Gauss-Kronrod (15/31) starting from the pieces of
// `breaks` (sorted, at least two entries); the piece with the largest error
// estimate is bisected until the summed estimate is below rel_tol times the
// L1 norm. Throws NumericalError naming `what` otherwise.
double integrate(const std::function<double(double)>& f, const std::vector<double>& breaks,
                 double rel_tol, const char* what);

// Break points for [lo, hi] that resolve a feature of width 1/rate at each
// end: lo + 2^k / rate_lo and hi - 2^k / rate_hi, plus `extra` points that
// fall strictly inside. Result is sorted and starts/ends at lo/hi.
std::vector<double> make_breaks(double lo, double hi, double rate_lo, double rate_hi,
                                std::initializer_list<double> extra = {});

// Walks from x0 in unit steps along `direction` (+1 or -1) until
// exponent(x) < reference - drop, or |x| reaches 700.
double walk_to_negligible(const std::function<double(double)>& exponent, double x0,
                          double direction, double reference, double drop = 800.0);

// Sign changes of fn on a uniform scan of [lo, hi], refined with TOMS 748.
std::vector<double> find_roots(const std::function<double(double)>& fn, double lo, double hi,
                               double step);

// Three-point finite differences on a strictly increasing grid (exact for
// quadratics). Warns when the largest spacing exceeds max_spacing.
struct Derivatives {
  std::vector<double> first;
  std::vector<double> second;
};
Derivatives finite_differences(const double* grid, const double* f, std::size_t n,
                               double max_spacing, const char* what);

}  // namespace qjump::detail
