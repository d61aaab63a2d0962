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

void require_interval(double q_start, double q_end, const char* what) {
  if (!std::isfinite(q_start) || !std::isfinite(q_end)) {
    throw InvalidInput(std::string(what) + ": non-finite level");
  }
  if (!(q_start > 0.0 && q_start < q_end && q_end < 1.0)) {
    std::ostringstream os;
    os << what << ": requires 0 < Q_i < Q_f < 1, got [" << q_start << ", " << q_end << "]";
    throw DomainError(os.str());
  }
}

// (e^u - 1 - u) / u^2, with its Taylor series near 0.
double appendix_integrand(double u) {
  if (std::abs(u) < 1e-3) {
    return 0.5 + u * (1.0 / 6.0 + u * (1.0 / 24.0 + u * (1.0 / 120.0 + u / 720.0)));
  }
  return (std::expm1(u) - u) / (u * u);
}

}  // namespace

double conditioned_drift(double q, double q_start, double p, double sigma) {
  const DiffusionSpec d(p, sigma);
  if (!std::isfinite(q) || !std::isfinite(q_start)) throw InvalidInput("conditioned_drift: non-finite level");
  if (!(q > q_start)) throw DomainError("conditioned_drift: requires Q > Q_i");
  if (!(q_start > 0.0 && q < 1.0)) throw DomainError("conditioned_drift: levels must lie in (0, 1)");
  const ScaleFunction scale(d);
  const double g = d.diffusion(q);
  // s'(Q) / (s(Q) - s(Q_i)) = 1 / A(Q).
  const double log_ratio = scale.log_derivative(q) - scale.log_increment(q_start, q);
  return d.drift(q) + g * g * std::exp(log_ratio);
}

double transition_integral(const ScaleFunction& scale, double q_start, double q_end) {
  require_interval(q_start, q_end, "transition_integral");
  const DiffusionSpec& d = scale.spec();
  const double xi = logit(q_start);
  const double xf = logit(q_end);
  // Integrand l / g in the logit variable, l = A C / (A + C).
  auto integrand = [&](double x) {
    if (!(x > xi && x < xf)) return 0.0;
    const double q = logistic(x);
    if (!(q > q_start && q < q_end)) return 0.0;
    const double log_s = scale.log_derivative(q);
    const double log_a = scale.log_increment(q_start, q) - log_s;
    const double log_c = scale.log_increment(q, q_end) - log_s;
    const double hi = std::max(-log_a, -log_c);
    const double log_l = -(hi + std::log(std::exp(-log_a - hi) + std::exp(-log_c - hi)));
    return std::exp(log_l - log_g_logit(x));
  };
  const auto breaks = detail::make_breaks(xi, xf, 0.0, 0.0, {logit(d.p())});
  return detail::integrate(integrand, breaks, 1e-9, "transition integral");
}

double transition_integral(double q_start, double q_end, double p, double sigma) {
  return transition_integral(ScaleFunction(DiffusionSpec(p, sigma)), q_start, q_end);
}

double mean_transition_time(double q_start, double q_end, double p, double sigma, double gamma) {
  if (!std::isfinite(gamma) || !(gamma > 0.0)) throw DomainError("mean_transition_time: gamma must be positive");
  return 2.0 / (gamma * gamma) * transition_integral(q_start, q_end, p, sigma);
}

double transition_time_i0(double q_start, double q_end) {
  require_interval(q_start, q_end, "transition_time_i0");
  const double qi = q_start;
  const double qf = q_end;
  const double log_ratio = (std::log(qf) - std::log1p(-qf)) - (std::log(qi) - std::log1p(-qi));
  return (qi + qf - 2.0 * qi * qf) / (qf - qi) * log_ratio - 2.0;
}

double appendix_constant() {
  static const double value = [] {
    return detail::integrate(appendix_integrand, {0.0, 0.25, 0.5, 1.0}, 1e-12,
                             "appendix constant");
  }();
  return value;
}

double transition_time_refined(double p, double sigma, double gamma) {
  if (!std::isfinite(p) || !std::isfinite(sigma) || !std::isfinite(gamma)) {
    throw InvalidInput("transition_time_refined: non-finite argument");
  }
  if (!(p > 0.0 && p < 1.0)) throw DomainError("transition_time_refined: p must lie in (0, 1)");
  if (!(sigma > 0.0 && sigma < 1.0)) throw DomainError("transition_time_refined: requires 0 < sigma < 1");
  if (!(gamma > 0.0)) throw DomainError("transition_time_refined: gamma must be positive");
  if (sigma > 0.1 * p * (1.0 - p)) {
    std::ostringstream os;
    os << "transition_time_refined: sigma = " << sigma << " is not small against p(1-p) = "
       << p * (1.0 - p) << "; the asymptotic form is unreliable";
    warn(os.str());
  }
  const double bracket =
      -2.0 * std::log(sigma) + 2.0 * (appendix_constant() - 1.0) - std::log(p * (1.0 - p));
  return 2.0 / (gamma * gamma) * bracket;
}

}  // namespace qjump
