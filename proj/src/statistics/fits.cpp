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
#include <numbers>
#include <sstream>

#include <nlohmann/json.hpp>

#include "qjump/error.hpp"
#include "qjump/quadrature.hpp"
#include "qjump/statistics.hpp"

namespace qjump {

namespace {

void require_finite(std::span<const double> xs, const char* what) {
  for (double x : xs) {
    if (!std::isfinite(x)) throw InvalidInput(std::string(what) + ": non-finite sample");
  }
}

}  // namespace

FitReport& FitReport::check(double target_value, double abs_tolerance) {
  target = target_value;
  tolerance = abs_tolerance;
  pass = std::abs(estimate - target) < tolerance;
  return *this;
}

FitReport& FitReport::check_relative(double target_value, double rel_tolerance) {
  return check(target_value, rel_tolerance * std::abs(target_value));
}

void to_json(nlohmann::json& j, const FitReport& r) {
  auto num = [](double x) { return std::isfinite(x) ? nlohmann::json(x) : nlohmann::json(nullptr); };
  j = nlohmann::json{{"estimate", num(r.estimate)},   {"stderr", num(r.std_error)},
                     {"n", r.n},                      {"statistic", num(r.statistic)},
                     {"target", num(r.target)},       {"tolerance", num(r.tolerance)},
                     {"pass", r.pass}};
}

FitReport mean_estimate(std::span<const double> samples) {
  if (samples.empty()) throw InvalidInput("mean_estimate: no samples");
  require_finite(samples, "mean_estimate");
  const double n = static_cast<double>(samples.size());
  double m = 0.0;
  for (double x : samples) m += x;
  m /= n;
  double ss = 0.0;
  for (double x : samples) ss += (x - m) * (x - m);
  FitReport r;
  r.estimate = m;
  r.n = samples.size();
  r.std_error = samples.size() > 1 ? std::sqrt(ss / (n - 1.0) / n) : 0.0;
  r.statistic = m;
  return r;
}

FitReport ratio_estimate(std::span<const double> numerator, std::span<const double> denominator) {
  const FitReport a = mean_estimate(numerator);
  const FitReport b = mean_estimate(denominator);
  if (b.estimate == 0.0) throw DomainError("ratio_estimate: denominator mean is zero");
  FitReport r;
  r.estimate = a.estimate / b.estimate;
  r.n = std::min(a.n, b.n);
  r.statistic = r.estimate;
  r.std_error = std::abs(r.estimate) * std::hypot(a.std_error / a.estimate, b.std_error / b.estimate);
  return r;
}

FitReport fraction_estimate(std::size_t k, std::size_t n) {
  if (n == 0) throw InvalidInput("fraction_estimate: no trials");
  if (k > n) throw InvalidInput("fraction_estimate: more successes than trials");
  FitReport r;
  r.n = n;
  r.estimate = static_cast<double>(k) / static_cast<double>(n);
  r.statistic = r.estimate;
  r.std_error = std::sqrt(r.estimate * (1.0 - r.estimate) / static_cast<double>(n));
  return r;
}

FitReport ks_exponential(std::span<const double> samples, double rate) {
  if (samples.empty()) throw InvalidInput("ks_exponential: no samples");
  if (!std::isfinite(rate) || !(rate > 0.0)) throw DomainError("ks_exponential: rate must be positive");
  require_finite(samples, "ks_exponential");
  if (samples.size() < 50) warn("ks_exponential: fewer than 50 samples, asymptotic critical value is rough");
  std::vector<double> x(samples.begin(), samples.end());
  std::sort(x.begin(), x.end());
  const double n = static_cast<double>(x.size());
  double d = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double f = x[i] > 0.0 ? -std::expm1(-rate * x[i]) : 0.0;
    d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
  }
  FitReport r;
  r.estimate = d;
  r.statistic = d;
  r.n = x.size();
  // Standard deviation of the limiting Kolmogorov distribution, scaled.
  r.std_error = 0.2603 / std::sqrt(n);
  r.check(0.0, 1.36 / std::sqrt(n));
  return r;
}

FitReport fit_decay_rate(std::span<const double> times, std::span<const double> values) {
  if (times.size() != values.size()) throw InvalidInput("fit_decay_rate: times and values differ in size");
  if (times.size() < 10) throw InvalidInput("fit_decay_rate: need at least 10 points");
  require_finite(times, "fit_decay_rate");
  require_finite(values, "fit_decay_rate");
  for (double v : values) {
    if (!(v > 0.0)) throw DomainError("fit_decay_rate: values must be positive");
  }
  const std::size_t n = times.size();
  double tm = 0.0, ym = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    tm += times[i];
    ym += std::log(values[i]);
  }
  tm /= static_cast<double>(n);
  ym /= static_cast<double>(n);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = times[i] - tm;
    sxx += dx * dx;
    sxy += dx * (std::log(values[i]) - ym);
  }
  if (!(sxx > 0.0)) throw DomainError("fit_decay_rate: times must not all coincide");
  const double slope = sxy / sxx;
  double ssr = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double res = std::log(values[i]) - (ym + slope * (times[i] - tm));
    ssr += res * res;
  }
  const double resid_var = ssr / static_cast<double>(n - 2);
  FitReport r;
  r.estimate = -slope;
  r.n = n;
  r.std_error = std::sqrt(resid_var / sxx);
  r.statistic = std::sqrt(resid_var);
  return r;
}

std::vector<double> density_bin_masses(const std::function<double(double)>& density, int bins) {
  if (bins < 10) throw InvalidInput("histogram: need at least 10 bins");
  std::vector<double> masses(static_cast<std::size_t>(bins));
  double total = 0.0;
  for (int k = 0; k < bins; ++k) {
    const double lo = static_cast<double>(k) / bins;
    const double hi = static_cast<double>(k + 1) / bins;
    std::vector<double> breaks{lo, hi};
    // The end bins may hold a boundary layer much thinner than the bin.
    if (k == 0 || k == bins - 1) {
      for (int e = 1; e <= 40; ++e) {
        const double w = (hi - lo) * std::ldexp(1.0, -e);
        breaks.push_back(k == 0 ? lo + w : hi - w);
      }
      std::sort(breaks.begin(), breaks.end());
    }
    const double m = integrate_adaptive(density, breaks, 1e-9);
    if (!std::isfinite(m) || m < 0.0) throw DomainError("histogram: density must be non-negative and integrable");
    masses[static_cast<std::size_t>(k)] = m;
    total += m;
  }
  if (!(total > 0.0)) throw DomainError("histogram: density integrates to zero");
  for (double& m : masses) m /= total;
  return masses;
}

FitReport histogram_distance(std::span<const double> samples,
                             const std::function<double(double)>& density, int bins,
                             double tolerance) {
  if (bins < 10) throw InvalidInput("histogram_distance: need at least 10 bins");
  if (samples.empty()) throw InvalidInput("histogram_distance: no samples");
  if (samples.size() < 10000) warn("histogram_distance: fewer than 1e4 samples");
  std::vector<double> counts(static_cast<std::size_t>(bins), 0.0);
  for (double q : samples) {
    if (!(q >= 0.0 && q <= 1.0)) throw DomainError("histogram_distance: samples must lie in [0, 1]");
    const int k = std::min(static_cast<int>(q * bins), bins - 1);
    counts[static_cast<std::size_t>(k)] += 1.0;
  }
  const auto masses = density_bin_masses(density, bins);
  const double n = static_cast<double>(samples.size());
  double tv = 0.0, noise = 0.0;
  for (std::size_t k = 0; k < masses.size(); ++k) {
    tv += std::abs(counts[k] / n - masses[k]);
    noise += std::sqrt(masses[k] * (1.0 - masses[k]) / n);
  }
  FitReport r;
  r.estimate = 0.5 * tv;
  r.statistic = r.estimate;
  r.n = samples.size();
  // Expected distance for independent draws from the density itself.
  r.std_error = 0.5 * std::sqrt(2.0 / std::numbers::pi) * noise;
  r.check(0.0, tolerance);
  return r;
}

}  // namespace qjump
