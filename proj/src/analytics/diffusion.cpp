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

#include <algorithm>
#include <cmath>
#include <sstream>

#include "numerics.hpp"
#include "qjump/analytics.hpp"
#include "qjump/error.hpp"

namespace qjump {

using detail::log_g_logit;
using detail::logistic;
using detail::logit;

namespace {

void require_open_unit(double q, const char* what) {
  if (!std::isfinite(q)) throw InvalidInput(std::string(what) + " must be finite");
  if (!(q > 0.0 && q < 1.0)) {
    std::ostringstream os;
    os << what << " must lie in (0, 1), got " << q;
    throw DomainError(os.str());
  }
}

// Integration range in x outside of which the stationary density is below
// exp(-800) of its peak.
struct LogitRange {
  double lo;
  double hi;
};

double log_density_logit(const DiffusionSpec& d, double x) {
  return -d.log_scale_density_logit(x) - log_g_logit(x);
}

LogitRange stationary_range(const DiffusionSpec& d) {
  const double p = d.p();
  const double s = d.sigma();
  const double x_low = logit(std::min(0.5 * p * s, 0.5 * p));
  const double x_high = -logit(std::min(0.5 * (1.0 - p) * s, 0.5 * (1.0 - p)));
  const double ref =
      std::max(log_density_logit(d, x_low), log_density_logit(d, x_high));
  auto e = [&](double x) { return log_density_logit(d, x); };
  return {detail::walk_to_negligible(e, x_low, -1.0, ref),
          detail::walk_to_negligible(e, x_high, +1.0, ref)};
}

std::vector<double> stationary_breaks(const DiffusionSpec& d, double lo, double hi) {
  const double p = d.p();
  const double s = d.sigma();
  return detail::make_breaks(lo, hi, 0.0, 0.0,
                             {logit(std::min(p * s, 0.5 * p)), logit(p),
                              -logit(std::min((1.0 - p) * s, 0.5 * (1.0 - p))),
                              logit(std::min(0.5 * p * s, 0.25 * p)),
                              -logit(std::min(0.5 * (1.0 - p) * s, 0.25 * (1.0 - p)))});
}

double integrate_stationary(const DiffusionSpec& d, const std::function<double(double)>& weight,
                            double q_lo, double q_hi, const char* what) {
  const LogitRange r = stationary_range(d);
  const double lo = q_lo <= 0.0 ? r.lo : std::max(r.lo, logit(q_lo));
  const double hi = q_hi >= 1.0 ? r.hi : std::min(r.hi, logit(q_hi));
  if (!(hi > lo)) return 0.0;
  auto integrand = [&](double x) {
    return weight(logistic(x)) * std::exp(log_density_logit(d, x));
  };
  return detail::integrate(integrand, stationary_breaks(d, lo, hi), 1e-10, what);
}

}  // namespace

DiffusionSpec::DiffusionSpec(double p, double sigma) : p_(p), sigma_(sigma) {
  if (!std::isfinite(p) || !std::isfinite(sigma)) throw InvalidInput("DiffusionSpec: non-finite parameter");
  if (!(p > 0.0 && p < 1.0)) throw DomainError("DiffusionSpec: p must lie in (0, 1)");
  if (!(sigma > 0.0)) throw DomainError("DiffusionSpec: sigma must be positive");
}

double DiffusionSpec::log_scale_density(double q) const noexcept {
  return sigma_ * (p_ / q + (1.0 - p_) / (1.0 - q) + (2.0 * p_ - 1.0) * std::log((1.0 - q) / q));
}

double DiffusionSpec::log_scale_density_logit(double x) const noexcept {
  // p/Q = p (1 + e^-x), (1-p)/(1-Q) = (1-p)(1 + e^x), log((1-Q)/Q) = -x.
  return sigma_ * (1.0 + p_ * std::exp(-x) + (1.0 - p_) * std::exp(x) - (2.0 * p_ - 1.0) * x);
}

double DiffusionSpec::log_scale_density_logit_slope(double x) const noexcept {
  return sigma_ * (-p_ * std::exp(-x) + (1.0 - p_) * std::exp(x) - (2.0 * p_ - 1.0));
}

double DiffusionSpec::log_scale_density_change(double x, double offset) const noexcept {
  return sigma_ * (p_ * std::exp(-x) * std::expm1(-offset) +
                   (1.0 - p_) * std::exp(x) * std::expm1(offset) - (2.0 * p_ - 1.0) * offset);
}

double DiffusionSpec::log_stationary_density(double q) const noexcept {
  return -log_scale_density(q) - 2.0 * (std::log(q) + std::log1p(-q));
}

ScaleFunction::ScaleFunction(DiffusionSpec spec, double factor, double offset)
    : spec_(spec), factor_(factor), offset_(offset) {
  if (!(factor > 0.0) || !std::isfinite(factor) || !std::isfinite(offset)) {
    throw DomainError("ScaleFunction: factor must be positive and finite");
  }
  log_factor_ = std::log(factor);
}

ScaleFunction ScaleFunction::affine(double factor, double offset) const {
  return ScaleFunction(spec_, factor_ * factor, offset_ * factor + offset);
}

double ScaleFunction::log_derivative(double q) const {
  require_open_unit(q, "ScaleFunction: Q");
  return log_factor_ + spec_.log_scale_density(q);
}

double ScaleFunction::derivative(double q) const {
  const double l = log_derivative(q);
  if (l > 709.0) {
    std::ostringstream os;
    os << "scale derivative overflows at Q = " << q << " (log value " << l << ")";
    throw NumericalError(os.str());
  }
  return std::exp(l);
}

double ScaleFunction::log_increment(double a, double b) const {
  require_open_unit(a, "ScaleFunction: lower limit");
  require_open_unit(b, "ScaleFunction: upper limit");
  if (!(a < b)) throw DomainError("ScaleFunction::log_increment: requires a < b");
  const double xa = logit(a);
  const double xb = logit(b);
  const double pa = spec_.log_scale_density_logit(xa);
  const double pb = spec_.log_scale_density_logit(xb);
  // phi has a single minimum (at p), so its maximum on [a, b] sits at an
  // end. Integrate in the distance from that end.
  const bool from_b = pb >= pa;
  const double anchor = from_b ? xb : xa;
  const double dir = from_b ? -1.0 : 1.0;
  const double ref = from_b ? pb : pa;
  const double span = xb - xa;
  auto integrand = [&](double d) {
    return std::exp(spec_.log_scale_density_change(anchor, dir * d) +
                    log_g_logit(anchor + dir * d));
  };
  const double rate = std::abs(spec_.log_scale_density_logit_slope(anchor)) + 1.0;
  const double xp = logit(spec_.p());
  const auto breaks = detail::make_breaks(0.0, span, rate, 0.0, {dir * (xp - anchor)});
  const double v = detail::integrate(integrand, breaks, 1e-12, "scale function increment");
  if (!(v > 0.0)) throw NumericalError("scale function increment underflowed");
  return log_factor_ + ref + std::log(v);
}

double ScaleFunction::value(double q) const {
  require_open_unit(q, "scale function: Q");
  const double p = spec_.p();
  if (q == p) return offset_;
  const double l = q > p ? log_increment(p, q) : log_increment(q, p);
  if (l > 709.0) {
    std::ostringstream os;
    os << "scale function overflows at Q = " << q << " (log magnitude " << l << ")";
    throw NumericalError(os.str());
  }
  return q > p ? offset_ + std::exp(l) : offset_ - std::exp(l);
}

double stationary_density(double q, double p, double sigma) {
  const DiffusionSpec d(p, sigma);
  if (!std::isfinite(q)) throw InvalidInput("stationary_density: Q must be finite");
  if (q == 0.0 || q == 1.0) return 0.0;
  require_open_unit(q, "stationary_density: Q");
  return std::exp(d.log_stationary_density(q));
}

double stationary_normalization(double p, double sigma) {
  const DiffusionSpec d(p, sigma);
  if (!(sigma < 1.0)) throw DomainError("stationary_normalization: requires sigma < 1");
  return integrate_stationary(d, [](double) { return 1.0; }, 0.0, 1.0,
                              "stationary normalization");
}

double stationary_mass(double lo, double hi, double p, double sigma) {
  const DiffusionSpec d(p, sigma);
  if (!std::isfinite(lo) || !std::isfinite(hi)) throw InvalidInput("stationary_mass: non-finite bounds");
  if (lo < 0.0 || hi > 1.0 || lo > hi) throw DomainError("stationary_mass: requires 0 <= lo <= hi <= 1");
  const auto one = [](double) { return 1.0; };
  const double z = integrate_stationary(d, one, 0.0, 1.0, "stationary normalization");
  return integrate_stationary(d, one, lo, hi, "stationary mass") / z;
}

double stationary_expectation(const std::function<double(double)>& f, double p, double sigma) {
  const DiffusionSpec d(p, sigma);
  const auto one = [](double) { return 1.0; };
  const double z = integrate_stationary(d, one, 0.0, 1.0, "stationary normalization");
  return integrate_stationary(d, f, 0.0, 1.0, "stationary expectation") / z;
}

double potential_v(double x, double p, double sigma) {
  const DiffusionSpec d(p, sigma);
  if (!std::isfinite(x)) throw InvalidInput("potential_v: X must be finite");
  return 0.5 * (d.log_scale_density_logit(x) + log_g_logit(x));
}

double potential_slope(double x, double p, double sigma) {
  const DiffusionSpec d(p, sigma);
  if (!std::isfinite(x)) throw InvalidInput("potential_slope: X must be finite");
  const double q = logistic(x);
  return 0.5 * (1.0 - 2.0 * q - d.a_sigma()) -
         0.5 * sigma * (p * std::exp(-x) - (1.0 - p) * std::exp(x));
}

namespace {

DoubleWell three_roots(const std::function<double(double)>& fn, double p, double sigma,
                       const char* what) {
  const double lo = logit(std::min(p * sigma, 0.5 * p)) - 12.0;
  const double hi = -logit(std::min((1.0 - p) * sigma, 0.5 * (1.0 - p))) + 12.0;
  const auto roots = detail::find_roots(fn, lo, hi, 0.01);
  if (roots.size() != 3) {
    std::ostringstream os;
    os << what << ": expected two wells and a barrier at p = " << p << ", sigma = " << sigma
       << ", found " << roots.size() << " critical points";
    throw DomainError(os.str());
  }
  return {logistic(roots[0]), logistic(roots[1]), logistic(roots[2])};
}

}  // namespace

DoubleWell well_bottoms(double p, double sigma) {
  const DiffusionSpec d(p, sigma);
  return three_roots([&](double x) { return potential_slope(x, p, sigma); }, p, sigma,
                     "well_bottoms");
}

DoubleWell density_peaks(double p, double sigma) {
  const DiffusionSpec d(p, sigma);
  // Q (1 - Q) d/dQ log density, written in x.
  auto slope = [&](double x) {
    const double q = logistic(x);
    return d.a_sigma() - 2.0 + 4.0 * q + sigma * (p * std::exp(-x) - (1.0 - p) * std::exp(x));
  };
  return three_roots(slope, p, sigma, "density_peaks");
}

double barrier_height(double p, double sigma) {
  const DoubleWell w = well_bottoms(p, sigma);
  return potential_v(logit(w.barrier), p, sigma) - potential_v(logit(w.lower), p, sigma);
}

double scale_function(double q, double p, double sigma) {
  return ScaleFunction(DiffusionSpec(p, sigma)).value(q);
}

double exit_probability(const ScaleFunction& scale, double q, double q_lo, double q_hi) {
  if (!std::isfinite(q) || !std::isfinite(q_lo) || !std::isfinite(q_hi)) {
    throw InvalidInput("exit_probability: non-finite argument");
  }
  if (!(q_lo < q_hi)) throw DomainError("exit_probability: degenerate interval");
  require_open_unit(q_lo, "exit_probability: lower level");
  require_open_unit(q_hi, "exit_probability: upper level");
  if (q < q_lo || q > q_hi) throw DomainError("exit_probability: Q outside [Q_i, Q_f]");
  if (q == q_lo) return 0.0;
  if (q == q_hi) return 1.0;
  const double below = scale.log_increment(q_lo, q);
  const double above = scale.log_increment(q, q_hi);
  return 1.0 / (1.0 + std::exp(above - below));
}

double exit_probability(double q, double q_lo, double q_hi, double p, double sigma) {
  return exit_probability(ScaleFunction(DiffusionSpec(p, sigma)), q, q_lo, q_hi);
}

}  // namespace qjump
