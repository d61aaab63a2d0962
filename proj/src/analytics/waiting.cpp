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

// K(Q) = int_0^Q exp(phi(Q) - phi(q)) / g(q)^2 dq, evaluated at Q = logistic(xq)
// as an integral over the logit distance below xq.
double inner_speed_integral(const DiffusionSpec& d, double xq) {
  auto exponent = [&](double depth) {
    return -d.log_scale_density_change(xq, -depth) - log_g_logit(xq - depth);
  };
  const double xp = logit(d.p());
  const double start = std::max(0.0, xq - xp);
  const double ref = std::max(exponent(0.0), exponent(start));
  if (ref > 700.0) {
    std::ostringstream os;
    os << "waiting-time integrand overflows at Q = " << logistic(xq);
    throw NumericalError(os.str());
  }
  const double deepest = detail::walk_to_negligible(exponent, start, +1.0, ref);
  auto integrand = [&](double depth) { return std::exp(exponent(depth)); };
  const double rate = std::abs(d.log_scale_density_logit_slope(xq)) + 1.0;
  const double x_well = logit(std::min(d.p() * d.sigma(), 0.5 * d.p()));
  const auto breaks = detail::make_breaks(0.0, deepest, rate, 0.0, {start, xq - x_well});
  return detail::integrate(integrand, breaks, 1e-10, "waiting time (inner integral)");
}

void require_gamma(double gamma) {
  if (!std::isfinite(gamma) || !(gamma > 0.0)) throw DomainError("gamma must be positive");
}

}  // namespace

double mean_waiting_time(double q_start, double q_target, double p, double sigma, double gamma) {
  const DiffusionSpec d(p, sigma);
  require_gamma(gamma);
  if (!std::isfinite(q_start) || !std::isfinite(q_target)) {
    throw InvalidInput("mean_waiting_time: non-finite level");
  }
  if (!(q_start >= 0.0 && q_start < q_target && q_target <= 1.0)) {
    throw DomainError("mean_waiting_time: requires 0 <= Q_i < Q_f <= 1");
  }
  if (q_target == 1.0) {
    throw DomainError("mean_waiting_time: Q = 1 is never reached in finite time");
  }
  const double hi = logit(q_target);
  // Below Q ~ p sigma e^-41 the outer integrand is ~ Q / (sigma p) and its
  // contribution is below 1e-17 relative.
  const double lo = q_start > 0.0
                        ? logit(q_start)
                        : std::min(hi, std::log(p * sigma)) - 41.0;
  auto integrand = [&](double x) {
    return inner_speed_integral(d, x) * std::exp(log_g_logit(x));
  };
  const auto breaks = detail::make_breaks(
      lo, hi, 0.0, 0.0,
      {logit(p), logit(std::min(p * sigma, 0.5 * p)),
       -logit(std::min((1.0 - p) * sigma, 0.5 * (1.0 - p)))});
  const double integral = detail::integrate(integrand, breaks, 1e-7, "waiting time (outer integral)");
  return 2.0 / (gamma * gamma) * integral;
}

double mean_waiting_time_down(double q_start, double q_target, double p, double sigma,
                              double gamma) {
  if (!std::isfinite(q_start) || !std::isfinite(q_target)) {
    throw InvalidInput("mean_waiting_time_down: non-finite level");
  }
  if (!(q_start <= 1.0 && q_start > q_target && q_target >= 0.0)) {
    throw DomainError("mean_waiting_time_down: requires 1 >= Q_i > Q_f >= 0");
  }
  return mean_waiting_time(1.0 - q_start, 1.0 - q_target, 1.0 - p, sigma, gamma);
}

double WaitingTimeLaw::laplace(double u) const noexcept {
  return dirac_weight + (1.0 - dirac_weight) * exp_rate / (exp_rate + u);
}

double WaitingTimeLaw::cdf(double s) const noexcept {
  if (s < 0.0) return 0.0;
  return dirac_weight + (1.0 - dirac_weight) * (-std::expm1(-exp_rate * s));
}

WaitingTimeLaw waiting_time_law(double q_start, double q_target, double p) {
  if (!std::isfinite(q_start) || !std::isfinite(q_target) || !std::isfinite(p)) {
    throw InvalidInput("waiting_time_law: non-finite argument");
  }
  if (!(p > 0.0 && p < 1.0)) throw DomainError("waiting_time_law: p must lie in (0, 1)");
  if (!(q_start >= 0.0 && q_start < q_target && q_target <= 1.0)) {
    throw DomainError("waiting_time_law: requires 0 <= Q_i < Q_f <= 1");
  }
  return {q_start / q_target, p / q_target};
}

double waiting_time_laplace_ode_residual(std::span<const double> grid,
                                         std::span<const double> phi, double u, double p,
                                         double sigma) {
  if (grid.size() != phi.size()) throw InvalidInput("ODE residual: grid and values differ in size");
  if (!(p > 0.0 && p < 1.0)) throw DomainError("ODE residual: p must lie in (0, 1)");
  if (!(sigma >= 0.0) || !std::isfinite(u)) throw DomainError("ODE residual: requires sigma >= 0");
  for (double q : grid) {
    if (!(q > 0.0 && q < 1.0)) throw DomainError("ODE residual: grid must lie inside (0, 1)");
  }
  const auto der = detail::finite_differences(grid.data(), phi.data(), grid.size(), 1e-3,
                                              "waiting-time ODE residual");
  double worst = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double q = grid[i];
    const double g = q * (1.0 - q);
    const double r = sigma * (-u + (p - q) * phi[i]) + g * g * (der.first[i] + phi[i] * phi[i]);
    worst = std::max(worst, std::abs(r));
  }
  return worst;
}

}  // namespace qjump
