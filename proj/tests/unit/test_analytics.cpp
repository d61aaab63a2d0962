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


#include <cmath>
#include <vector>

#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/math/tools/minima.hpp>
#include <boost/numeric/odeint.hpp>

#include "doctest.h"
#include "qjump/analytics.hpp"
#include "qjump/error.hpp"
#include "qjump/quadrature.hpp"
#include "qjump/rng.hpp"
#include "qjump/trajectory.hpp"

using namespace qjump;

namespace {

// Rate lambda = 1 for a given sigma.
double gamma_for(double sigma) { return std::sqrt(2.0 / sigma); }

std::vector<double> linspace(double a, double b, int n) {
  std::vector<double> v(n);
  for (int i = 0; i < n; ++i) v[i] = a + (b - a) * i / (n - 1);
  return v;
}

}  // namespace

TEST_CASE("appendix constant against its series") {
  double series = 0.0, factorial = 1.0;
  for (int k = 2; k < 30; ++k) {
    factorial *= k;
    series += 1.0 / (factorial * (k - 1));
  }
  CHECK(std::abs(appendix_constant() - series) < 1e-10);
  CHECK(series == doctest::Approx(0.5 + 1.0 / 12 + 1.0 / 72 + 1.0 / 480 + 1.0 / 3600).epsilon(1e-4));
}

TEST_CASE("stationary density shape") {
  CHECK(stationary_density(0.0, 0.6, 1e-2) == 0.0);
  CHECK(stationary_density(1.0, 0.6, 1e-2) == 0.0);
  CHECK(stationary_density(1e-5, 0.6, 1e-2) < 1e-200);
  CHECK_THROWS_AS(stationary_density(1.2, 0.6, 1e-2), DomainError);
  for (double q : {0.01, 0.1, 0.3}) {
    CHECK(stationary_density(q, 0.5, 1e-2) ==
          doctest::Approx(stationary_density(1.0 - q, 0.5, 1e-2)).epsilon(1e-12));
  }
}

TEST_CASE("density peaks and well bottoms against an independent search") {
  const double p = 0.6, sigma = 1e-3;
  auto neg_log = [&](double q) { return -std::log(stationary_density(q, p, sigma)); };
  // Searched in the distance from the nearer endpoint, to keep full relative precision.
  const auto lo = boost::math::tools::brent_find_minima(neg_log, 1e-6, 0.01, 40);
  const auto hi = boost::math::tools::brent_find_minima(
      [&](double e) { return neg_log(1.0 - e); }, 1e-6, 0.01, 40);
  const DoubleWell peaks = density_peaks(p, sigma);
  CHECK(peaks.lower == doctest::Approx(lo.first).epsilon(1e-5));
  CHECK(1.0 - peaks.upper == doctest::Approx(hi.first).epsilon(1e-5));

  const DoubleWell wells = well_bottoms(p, sigma);
  CHECK(wells.lower / (p * sigma) == doctest::Approx(1.0).epsilon(0.01));
  CHECK((1.0 - wells.upper) / ((1.0 - p) * sigma) == doctest::Approx(1.0).epsilon(0.01));
  for (double q : {wells.lower, wells.barrier, wells.upper}) {
    const double x = std::log(q / (1.0 - q));
    CHECK(std::abs(potential_slope(x, p, sigma)) < 1e-8);
  }
}

TEST_CASE("normalization and masses") {
  const double p = 0.6;
  const double z = stationary_normalization(p, 1e-4);
  CHECK(z * 1e-4 * p * (1 - p) == doctest::Approx(1.0).epsilon(0.02));
  CHECK(stationary_mass(0.0, 0.5, 0.5, 1e-3) == doctest::Approx(0.5).epsilon(1e-8));
  double previous = 0.0;
  for (double s : {1e-2, 1e-3, 1e-4}) {
    const double m = stationary_mass(0.0, 0.5, p, s);
    CAPTURE(s);
    CHECK(m > previous);
    CHECK(m < 0.4);
    previous = m;
  }
  CHECK(previous == doctest::Approx(0.4).epsilon(0.01));
  CHECK(stationary_mass(0.0, 1.0, p, 1e-2) == doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("potential is the density in the logit coordinate") {
  const double p = 0.6, sigma = 1e-2;
  std::vector<double> ratios;
  for (double q : linspace(0.05, 0.95, 10)) {
    const double x = std::log(q / (1.0 - q));
    ratios.push_back(std::exp(-2.0 * potential_v(x, p, sigma)) / (q * (1.0 - q)) /
                     stationary_density(q, p, sigma));
  }
  for (double r : ratios) CHECK(r == doctest::Approx(ratios.front()).epsilon(1e-10));
  for (double x : {0.3, 2.0, 7.0}) {
    CHECK(potential_v(x, 0.5, sigma) == doctest::Approx(potential_v(-x, 0.5, sigma)).epsilon(1e-12));
  }
}

TEST_CASE("barrier grows linearly in log(1/sigma)") {
  const double b2 = barrier_height(0.6, 1e-2), b3 = barrier_height(0.6, 1e-3),
               b4 = barrier_height(0.6, 1e-4);
  CHECK(b3 > b2);
  CHECK(b4 > b3);
  CHECK((b4 - b3) / (b3 - b2) == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("scale function") {
  const double p = 0.6;
  CHECK(scale_function(p, p, 1e-2) == 0.0);
  const double sigma = 1e-4;
  const double ds = scale_function(0.9, p, sigma) - scale_function(0.1, p, sigma);
  CHECK(std::abs(ds - 0.8) < 10.0 * sigma * std::log(1.0 / sigma));
  double previous = -INFINITY;
  for (double q : linspace(0.001, 0.999, 1000)) {
    const double s = scale_function(q, p, 1e-2);
    REQUIRE(s > previous);
    previous = s;
  }
}

TEST_CASE("scale density solves s''/s' = -2 f / g^2") {
  const DiffusionSpec spec(0.6, 1e-2);
  const ScaleFunction scale(spec);
  const double h = 1e-5;
  for (double q : linspace(0.05, 0.95, 19)) {
    const double fd = (scale.log_derivative(q + h) - scale.log_derivative(q - h)) / (2 * h);
    const double g = spec.diffusion(q);
    const double rhs = -2.0 * spec.drift(q) / (g * g);
    CAPTURE(q);
    CHECK(std::abs(fd - rhs) < 1e-6 * std::max(1.0, std::abs(rhs)));
  }
}

TEST_CASE("exit probabilities") {
  CHECK(exit_probability(0.2, 0.2, 0.8, 0.6, 1e-2) == 0.0);
  CHECK(exit_probability(0.8, 0.2, 0.8, 0.6, 1e-2) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(exit_probability(0.5, 0.2, 0.8, 0.5, 1e-5) == doctest::Approx(0.5).epsilon(1e-3));
  CHECK_THROWS_AS(exit_probability(0.5, 0.4, 0.4, 0.6, 1e-2), DomainError);

  const ScaleFunction scale(DiffusionSpec(0.6, 1e-2));
  const ScaleFunction moved = scale.affine(3.7, -2.0);
  CHECK(exit_probability(moved, 0.35, 0.2, 0.8) ==
        doctest::Approx(exit_probability(scale, 0.35, 0.2, 0.8)).epsilon(1e-10));
  CHECK(transition_integral(moved, 0.1, 0.9) ==
        doctest::Approx(transition_integral(scale, 0.1, 0.9)).epsilon(1e-10));
}

TEST_CASE("exit probabilities against absorbed simulations") {
  const double sigma = 1e-2, start = 0.3, lo = 0.2, hi = 0.8;
  const QbitParams q = QbitParams::from_sigma(0.6, sigma);
  const double dt = q.tau_meas() / 200.0;
  const TimeGrid grid = make_time_grid(q, 10.0, dt);
  const int n = 4000;
  int upper = 0;
  for (int i = 0; i < n; ++i) {
    RandomStream rng(31, i);
    bool up = false;
    integrate_q(q, start, grid, rng, [&](double, double v) {
      if (v >= hi) up = true;
      return v > lo && v < hi;
    });
    upper += up;
  }
  const double freq = static_cast<double>(upper) / n;
  const double theory = exit_probability(start, lo, hi, 0.6, sigma);
  CHECK(std::abs(freq - theory) < 3.0 * std::sqrt(theory * (1 - theory) / n));
}

TEST_CASE("mean waiting times approach the thermal limits") {
  const double p = 0.6, sigma = 1e-4, g = gamma_for(sigma);
  // Q = 1 and Q = 0 are never reached; the far well bottoms stand in for them.
  const double bottom0 = p * sigma, bottom1 = 1.0 - (1.0 - p) * sigma;
  const double t1 = mean_waiting_time(0.0, bottom1, p, sigma, g);
  const double t0 = mean_waiting_time_down(1.0, bottom0, p, sigma, g);
  CHECK_THROWS_AS(mean_waiting_time(0.0, 1.0, p, sigma, g), DomainError);
  CHECK(t1 == doctest::Approx(1.0 / p).epsilon(0.02));
  CHECK(t0 == doctest::Approx(1.0 / (1 - p)).epsilon(0.02));
  CHECK(t1 / t0 == doctest::Approx((1 - p) / p).epsilon(0.02));
  // Mirror symmetry: the down-time is the up-time of Q -> 1 - Q with p -> 1 - p.
  CHECK(mean_waiting_time(0.0, 1.0 - bottom0, 1 - p, sigma, g) == doctest::Approx(t0).epsilon(1e-6));
  CHECK(mean_waiting_time(0.2, 0.7, p, sigma, g) / t1 == doctest::Approx(0.5).epsilon(0.02));
}

TEST_CASE("mean waiting time against absorbed simulations") {
  const double sigma = 1e-2, start = 0.2, target = 0.9;
  const QbitParams q = QbitParams::from_sigma(0.6, sigma);
  const TimeGrid grid = make_time_grid(q, 100.0, q.tau_meas() / 50.0);
  std::vector<double> hits;
  for (int i = 0; i < 2000; ++i) {
    RandomStream rng(41, i);
    double hit = NAN;
    integrate_q(q, start, grid, rng, [&](double t, double v) {
      if (v >= target) {
        hit = t;
        return false;
      }
      return true;
    });
    REQUIRE(std::isfinite(hit));
    hits.push_back(hit);
  }
  double s = 0.0, s2 = 0.0;
  for (double h : hits) s += h;
  const double mean = s / hits.size();
  for (double h : hits) s2 += (h - mean) * (h - mean);
  const double se = std::sqrt(s2 / (hits.size() - 1) / hits.size());
  const double theory = mean_waiting_time(start, target, 0.6, sigma, q.gamma());
  CHECK(std::abs(mean - theory) < 3.0 * se);
}

TEST_CASE("waiting time law") {
  const WaitingTimeLaw pure = waiting_time_law(0.0, 0.99, 0.6);
  CHECK(pure.dirac_weight == 0.0);
  CHECK(pure.exp_rate == doctest::Approx(0.6 / 0.99));
  const WaitingTimeLaw full = waiting_time_law(0.9 - 1e-12, 0.9, 0.6);
  CHECK(full.dirac_weight == doctest::Approx(1.0).epsilon(1e-10));

  const WaitingTimeLaw law = waiting_time_law(0.3, 0.9, 0.6);
  CHECK(law.dirac_weight == doctest::Approx(1.0 / 3.0));
  for (double u : {0.5, 1.0, 3.0}) {
    CHECK(std::abs(law.laplace(u) - (u * 0.3 + 0.6) / (u * 0.9 + 0.6)) < 1e-12);
  }
  CHECK(law.cdf(0.0) == doctest::Approx(1.0 / 3.0));
  const double sigma = 1e-4;
  CHECK(mean_waiting_time(0.3, 0.9, 0.6, sigma, gamma_for(sigma)) ==
        doctest::Approx(law.mean()).epsilon(0.02));
}

TEST_CASE("Laplace ODE residual") {
  const double p = 0.6, u = 1.5;
  const std::vector<double> grid = linspace(0.05, 0.95, 2001);  // spacing 4.5e-4
  std::vector<double> phi, zero(grid.size(), 0.0);
  for (double q : grid) phi.push_back(u / (p + u * q));
  CHECK(waiting_time_laplace_ode_residual(grid, phi, u, p, 0.0) < 1e-5);
  CHECK(waiting_time_laplace_ode_residual(grid, zero, 0.0, p, 1e-3) == 0.0);

  WarningCapture warnings;
  const std::vector<double> coarse = linspace(0.1, 0.9, 11);
  std::vector<double> cphi;
  for (double q : coarse) cphi.push_back(u / (p + u * q));
  (void)waiting_time_laplace_ode_residual(coarse, cphi, u, p, 0.0);
  CHECK(!warnings.empty());
}

namespace {

// Integrates the Laplace-transform ODE from near Q = 0, where the sigma term
// pins phi to u / p, and samples it on `grid`.
std::vector<double> shoot(double p, double u, double sigma, const std::vector<double>& grid) {
  using State = std::vector<double>;
  auto rhs = [&](const State& y, State& dy, double q) {
    const double g2 = q * q * (1 - q) * (1 - q);
    dy[0] = -y[0] * y[0] + sigma * (u - (p - q) * y[0]) / g2;
  };
  namespace ode = boost::numeric::odeint;
  auto stepper = ode::make_controlled(1e-12, 1e-12, ode::runge_kutta_dopri5<State>());
  State y{u / p};
  double q = 1e-5;
  std::vector<double> out;
  for (double next : grid) {
    ode::integrate_adaptive(stepper, rhs, y, q, next, 1e-8);
    q = next;
    out.push_back(y[0]);
  }
  return out;
}

}  // namespace

TEST_CASE("Laplace ODE shooting at small sigma stays near the limit solution") {
  const double p = 0.6, u = 1.5;
  const std::vector<double> grid = linspace(0.1, 0.9, 1001);
  std::vector<double> worst;
  for (double sigma : {1e-3, 1e-4}) {
    const std::vector<double> phi = shoot(p, u, sigma, grid);
    double w = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
      w = std::max(w, std::abs(phi[i] - u / (p + u * grid[i])));
    }
    worst.push_back(w);
    CAPTURE(sigma);
    CHECK(w < 50.0 * sigma);
    CHECK(waiting_time_laplace_ode_residual(grid, phi, u, p, sigma) < 1e-4);
  }
  // First order in sigma.
  CHECK(worst[0] / worst[1] > 6.0);
  CHECK(worst[0] / worst[1] < 12.0);
}

TEST_CASE("conditioned drift") {
  const double p = 0.6, sigma = 1e-2, qi = 0.1;
  const DiffusionSpec spec(p, sigma);
  for (double eps : {1e-5, 1e-6}) {
    const double q = qi + eps;
    const double g = spec.diffusion(q);
    CHECK((q - qi) * (conditioned_drift(q, qi, p, sigma) - spec.drift(q)) / (g * g) ==
          doctest::Approx(1.0).epsilon(1e-3));
  }
  const double far = conditioned_drift(0.5, 0.01, p, 1e-6);
  CHECK(far == doctest::Approx(0.0625 / 0.49).epsilon(1e-3));
  CHECK_THROWS_AS(conditioned_drift(0.1, 0.1, p, sigma), DomainError);
}

TEST_CASE("I0 closed form") {
  const double q = 0.25;
  const double special = (1 - 2 * q + 2 * q * q) / (1 - 2 * q) * 2 * std::log((1 - q) / q) - 2;
  CHECK(transition_time_i0(q, 1 - q) == doctest::Approx(special).epsilon(1e-14));

  const double a = 0.1, b = 0.9;
  boost::math::quadrature::tanh_sinh<double> ts;
  const double oracle = ts.integrate(
      [&](double x) { return (x - a) * (b - x) / ((b - a) * std::pow(x * (1 - x), 2)); }, a, b);
  CHECK(std::abs(transition_time_i0(a, b) - oracle) < 1e-10);

  const double p = 0.6, sigma = 1e-7;
  const double asym = -2 * std::log(sigma) - 2 - std::log(p * (1 - p));
  CHECK(std::abs(transition_time_i0(p * sigma, 1 - (1 - p) * sigma) - asym) < 1e-5);
  CHECK_THROWS_AS(transition_time_i0(0.0, 0.5), DomainError);
  CHECK_THROWS_AS(transition_time_i0(0.5, 1.0), DomainError);
}

TEST_CASE("transition integral limits and symmetry") {
  CHECK(transition_integral(0.2, 0.8, 0.6, 1e-6) ==
        doctest::Approx(transition_time_i0(0.2, 0.8)).epsilon(1e-4));
  CHECK(transition_integral(0.3, 0.7, 0.6, 1e-2) ==
        doctest::Approx(transition_integral(0.3, 0.7, 0.4, 1e-2)).epsilon(1e-9));
  CHECK(transition_integral(0.2, 0.6, 0.7, 1e-2) ==
        doctest::Approx(transition_integral(0.4, 0.8, 0.3, 1e-2)).epsilon(1e-9));
  const double g = gamma_for(1e-2);
  CHECK(mean_transition_time(0.2, 0.8, 0.6, 1e-2, g) ==
        doctest::Approx(2.0 / (g * g) * transition_integral(0.2, 0.8, 0.6, 1e-2)).epsilon(1e-14));
}

TEST_CASE("transition integral at the well bottoms") {
  const double p = 0.6;
  std::vector<double> gaps;
  for (double sigma : {1e-2, 1e-3, 1e-4}) {
    const double qi = p * sigma, qf = 1 - (1 - p) * sigma;
    const double g = gamma_for(sigma);
    const double quad = mean_transition_time(qi, qf, p, sigma, g);
    gaps.push_back(std::abs(quad - transition_time_refined(p, sigma, g)) * g * g / 2);
    if (sigma == 1e-4) {
      CHECK(std::abs(transition_integral(qi, qf, p, sigma) - transition_time_i0(qi, qf) -
                     2 * appendix_constant()) < 0.02);
    }
  }
  CHECK(gaps[1] < gaps[0]);
  CHECK(gaps[2] < gaps[1]);
  for (std::size_t i = 0; i < gaps.size(); ++i) {
    const double sigma = std::pow(10.0, -2.0 - static_cast<double>(i));
    CHECK(gaps[i] < 3.0 * std::cbrt(sigma) * std::log(1.0 / sigma));
  }
}

TEST_CASE("refined transition time") {
  const double g = 3.0;
  CHECK(transition_time_refined(0.6, 1e-3, g) == transition_time_refined(0.4, 1e-3, g));
  double previous = INFINITY;
  for (double sigma : {1e-4, 1e-8, 1e-12}) {
    const double lead = 4.0 / (g * g) * std::log(2.0 / sigma);
    const double off = std::abs(transition_time_refined(0.6, sigma, g) / lead - 1.0);
    CHECK(off < previous);
    previous = off;
  }
  CHECK(previous < 0.02);
  CHECK_THROWS_AS(transition_time_refined(0.6, 1.0, g), DomainError);
  WarningCapture warnings;
  (void)transition_time_refined(0.6, 0.1, g);
  CHECK(!warnings.empty());
}

TEST_CASE("generator") {
  const double p = 0.6, lambda = 1.0, gamma = 2.0;
  CHECK(generator_action(0.5, 2 * 0.5, 2.0, p, lambda, gamma) == doctest::Approx(0.35));
  const std::vector<double> grid = linspace(0.1, 0.9, 1001);
  std::vector<double> one(grid.size(), 1.0), lin, sq;
  for (double q : grid) {
    lin.push_back(p - q);
    sq.push_back(q * q);
  }
  const std::vector<double> a1 = generator_apply(grid, one, p, lambda, gamma);
  const std::vector<double> al = generator_apply(grid, lin, p, lambda, gamma);
  const std::vector<double> as = generator_apply(grid, sq, p, lambda, gamma);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double q = grid[i];
    REQUIRE(std::abs(a1[i]) < 1e-10);
    REQUIRE(al[i] == doctest::Approx(-lambda * (p - q)).epsilon(1e-9));
    REQUIRE(as[i] == doctest::Approx(lambda * (p - q) * 2 * q + gamma * gamma * std::pow(q * (1 - q), 2))
                         .epsilon(1e-8));
  }
  WarningCapture warnings;
  (void)generator_apply(linspace(0.1, 0.9, 11), std::vector<double>(11, 1.0), p, lambda, gamma);
  CHECK(!warnings.empty());
}

TEST_CASE("stationary law annihilates the generator") {
  const double p = 0.6, sigma = 1e-2;
  const double gamma = gamma_for(sigma), lambda = 1.0;
  for (int k = 1; k <= 3; ++k) {
    const auto af = [&](double q) {
      const double d1 = k * std::pow(q, k - 1);
      const double d2 = k * (k - 1) * (k >= 2 ? std::pow(q, k - 2) : 0.0);
      return generator_action(q, d1, d2, p, lambda, gamma);
    };
    const auto scale = [&](double q) {
      const double d1 = k * std::pow(q, k - 1);
      return std::abs(lambda * (p - q) * d1);
    };
    CAPTURE(k);
    CHECK(std::abs(stationary_expectation(af, p, sigma)) <
          1e-6 * stationary_expectation(scale, p, sigma));
  }
}

TEST_CASE("adaptive quadrature front end") {
  CHECK(integrate_adaptive([](double x) { return std::exp(x); }, {0.0, 0.5, 1.0}) ==
        doctest::Approx(std::exp(1.0) - 1.0).epsilon(1e-12));
  CHECK_THROWS_AS(integrate_adaptive([](double x) { return x; }, {1.0}), InvalidInput);
  CHECK_THROWS_AS(integrate_adaptive([](double x) { return x; }, {1.0, 0.0}), InvalidInput);
}
