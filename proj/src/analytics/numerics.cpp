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

#include "numerics.hpp"

#include <algorithm>
#include <cstdint>
#include <limits>
#include <queue>
#include <sstream>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/roots.hpp>

#include "qjump/error.hpp"
#include "qjump/quadrature.hpp"

namespace qjump::detail {

namespace {

struct Piece {
  double a;
  double b;
  double value;
  double error;
  double l1;
  bool operator<(const Piece& o) const { return error < o.error; }
};

// Fixed 31-point Kronrod rule with embedded 15-point Gauss estimate. Always
// evaluated on [-1, 1] so that the reported error is in the right units.
Piece kronrod_piece(const std::function<double(double)>& f, double a, double b) {
  using boost::math::quadrature::gauss_kronrod;
  const double mid = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  double error = 0.0;
  double l1 = 0.0;
  const double v = gauss_kronrod<double, 31>::integrate(
      [&](double t) { return f(mid + half * t); }, -1.0, 1.0, 0, 0.0, &error, &l1);
  return {a, b, half * v, half * error, half * l1};
}

}  // namespace

double integrate(const std::function<double(double)>& f, const std::vector<double>& breaks,
                 double rel_tol, const char* what) {
  constexpr std::size_t kMaxPieces = 4000;
  std::priority_queue<Piece> heap;
  double total = 0.0;
  double error = 0.0;
  double l1 = 0.0;
  auto push = [&](const Piece& piece) {
    if (!std::isfinite(piece.value) || !std::isfinite(piece.error)) {
      std::ostringstream os;
      os << what << ": non-finite integrand on [" << piece.a << ", " << piece.b << "]";
      throw NumericalError(os.str());
    }
    total += piece.value;
    error += piece.error;
    l1 += piece.l1;
    heap.push(piece);
  };
  for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
    if (breaks[i + 1] > breaks[i]) push(kronrod_piece(f, breaks[i], breaks[i + 1]));
  }
  while (!heap.empty() && error > rel_tol * l1 && heap.size() < kMaxPieces) {
    const Piece worst = heap.top();
    const double mid = 0.5 * (worst.a + worst.b);
    if (!(mid > worst.a && mid < worst.b)) break;  // cannot split further
    heap.pop();
    total -= worst.value;
    error -= worst.error;
    l1 -= worst.l1;
    push(kronrod_piece(f, worst.a, mid));
    push(kronrod_piece(f, mid, worst.b));
  }
  // Recompute sums to shed the drift of the running updates.
  total = 0.0;
  error = 0.0;
  l1 = 0.0;
  std::vector<Piece> pieces;
  pieces.reserve(heap.size());
  while (!heap.empty()) {
    pieces.push_back(heap.top());
    heap.pop();
  }
  std::sort(pieces.begin(), pieces.end(), [](const Piece& x, const Piece& y) { return x.a < y.a; });
  for (const Piece& piece : pieces) {
    total += piece.value;
    error += piece.error;
    l1 += piece.l1;
  }
  if (error > rel_tol * l1 && error > std::numeric_limits<double>::min()) {
    std::ostringstream os;
    os.precision(6);
    os << what << ": quadrature did not converge (estimate " << total << ", error " << error
       << ", L1 " << l1 << ", requested relative tolerance " << rel_tol << ", range ["
       << breaks.front() << ", " << breaks.back() << "], " << pieces.size() << " pieces)";
    throw NumericalError(os.str());
  }
  return total;
}

std::vector<double> make_breaks(double lo, double hi, double rate_lo, double rate_hi,
                                std::initializer_list<double> extra) {
  std::vector<double> b{lo, hi};
  const double mid = 0.5 * (lo + hi);
  if (rate_lo > 1.0 && std::isfinite(rate_lo)) {
    for (double w = 1.0 / rate_lo; lo + w < mid; w *= 2.0) b.push_back(lo + w);
  }
  if (rate_hi > 1.0 && std::isfinite(rate_hi)) {
    for (double w = 1.0 / rate_hi; hi - w > mid; w *= 2.0) b.push_back(hi - w);
  }
  for (double x : extra) {
    if (std::isfinite(x) && x > lo && x < hi) b.push_back(x);
  }
  // Keep pieces at most a few units wide so that every feature of the
  // integrands (which vary on an O(1) scale in the logit variable) is seen.
  for (double x = std::ceil(lo / 4.0) * 4.0; x < hi; x += 4.0) {
    if (x > lo) b.push_back(x);
  }
  std::sort(b.begin(), b.end());
  b.erase(std::unique(b.begin(), b.end()), b.end());
  return b;
}

double walk_to_negligible(const std::function<double(double)>& exponent, double x0,
                          double direction, double reference, double drop) {
  double x = x0;
  for (int i = 0; i < 1400; ++i) {
    const double e = exponent(x);
    if (e < reference - drop) return x;
    if (std::abs(x) >= 700.0) return x;
    x += 0.5 * direction;
  }
  return x;
}

std::vector<double> find_roots(const std::function<double(double)>& fn, double lo, double hi,
                               double step) {
  std::vector<double> roots;
  double a = lo;
  double fa = fn(a);
  const auto n = static_cast<std::int64_t>(std::ceil((hi - lo) / step));
  for (std::int64_t i = 1; i <= n; ++i) {
    const double b = std::min(hi, lo + static_cast<double>(i) * step);
    const double fb = fn(b);
    if (fa == 0.0) {
      roots.push_back(a);
    } else if (fa * fb < 0.0) {
      std::uintmax_t iters = 200;
      auto tol = boost::math::tools::eps_tolerance<double>(52);
      auto r = boost::math::tools::toms748_solve(fn, a, b, fa, fb, tol, iters);
      roots.push_back(0.5 * (r.first + r.second));
    }
    a = b;
    fa = fb;
  }
  return roots;
}

Derivatives finite_differences(const double* x, const double* f, std::size_t n,
                               double max_spacing, const char* what) {
  if (n < 3) {
    std::ostringstream os;
    os << what << ": need at least 3 grid points";
    throw InvalidInput(os.str());
  }
  double widest = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(x[i]) || !std::isfinite(f[i])) {
      std::ostringstream os;
      os << what << ": non-finite grid or function value at index " << i;
      throw InvalidInput(os.str());
    }
    if (i > 0) {
      if (!(x[i] > x[i - 1])) {
        std::ostringstream os;
        os << what << ": grid must be strictly increasing (index " << i << ")";
        throw InvalidInput(os.str());
      }
      widest = std::max(widest, x[i] - x[i - 1]);
    }
  }
  if (widest > max_spacing) {
    std::ostringstream os;
    os << what << ": grid spacing " << widest << " exceeds " << max_spacing
       << "; finite differences will be inaccurate";
    warn(os.str());
  }
  Derivatives d;
  d.first.resize(n);
  d.second.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    // Stencil centred where possible, shifted inward at the ends.
    const std::size_t c = std::clamp<std::size_t>(i, 1, n - 2);
    const double x0 = x[c - 1], x1 = x[c], x2 = x[c + 1];
    const double f0 = f[c - 1], f1 = f[c], f2 = f[c + 1];
    const double t = x[i];
    // Derivatives of the Lagrange interpolant through the three points.
    const double d0 = (x0 - x1) * (x0 - x2);
    const double d1 = (x1 - x0) * (x1 - x2);
    const double d2 = (x2 - x0) * (x2 - x1);
    d.first[i] = f0 * ((t - x1) + (t - x2)) / d0 + f1 * ((t - x0) + (t - x2)) / d1 +
                 f2 * ((t - x0) + (t - x1)) / d2;
    d.second[i] = 2.0 * (f0 / d0 + f1 / d1 + f2 / d2);
  }
  return d;
}

}  // namespace qjump::detail

namespace qjump {

double integrate_adaptive(const std::function<double(double)>& f, const std::vector<double>& breaks,
                          double rel_tol) {
  if (breaks.size() < 2) throw InvalidInput("integrate_adaptive: need at least two break points");
  if (!std::is_sorted(breaks.begin(), breaks.end())) {
    throw InvalidInput("integrate_adaptive: break points must be sorted");
  }
  return detail::integrate(f, breaks, rel_tol, "integrate_adaptive");
}

}  // namespace qjump
