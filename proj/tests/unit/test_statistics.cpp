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
#include <vector>

#include <nlohmann/json.hpp>

#include "doctest.h"
#include "qjump/analytics.hpp"
#include "qjump/error.hpp"
#include "qjump/rng.hpp"
#include "qjump/statistics.hpp"
#include "qjump/trajectory.hpp"

using namespace qjump;

namespace {

Trajectory make_trajectory(const std::vector<double>& t, const std::vector<double>& q) {
  Trajectory tr;
  tr.times = t;
  tr.values = q;
  tr.dt = t.size() > 1 ? t[1] - t[0] : 0.0;
  return tr;
}

// Alternates between 0 and 1 every half period, sampled at dt.
Trajectory square_wave(double period, double dt, int cycles) {
  std::vector<double> t, q;
  const auto per_half = static_cast<long>(std::llround(0.5 * period / dt));
  for (long k = 0; k <= 2 * per_half * cycles; ++k) {
    t.push_back(k * dt);
    q.push_back((k / per_half) % 2 == 0 ? 0.0 : 1.0);
  }
  return make_trajectory(t, q);
}

std::vector<double> exponential_samples(double rate, int n, std::uint64_t seed) {
  RandomStream rng(seed, 0);
  std::vector<double> v;
  for (int i = 0; i < n; ++i) v.push_back(-std::log(rng.uniform()) / rate);
  return v;
}

}  // namespace

TEST_CASE("ramp gives one switch and no complete dwell") {
  std::vector<double> t, q;
  for (int k = 0; k <= 1000; ++k) {
    t.push_back(k * 1e-3);
    q.push_back(k * 1e-3);
  }
  const JumpRecord r = detect_dwells(make_trajectory(t, q));
  CHECK(r.switches == 1);
  CHECK(r.dwells.empty());
}

TEST_CASE("square wave gives unit dwells") {
  const JumpRecord r = detect_dwells(square_wave(2.0, 0.01, 10));
  REQUIRE(r.dwells.size() >= 18);
  for (std::size_t i = 0; i < r.dwells.size(); ++i) {
    CHECK(r.dwells[i].duration == doctest::Approx(1.0).epsilon(1e-12));
    if (i > 0) CHECK(r.dwells[i].state != r.dwells[i - 1].state);
  }
  CHECK(r.dwell_durations(WellState::near_one).size() + r.dwell_durations(WellState::near_zero).size() ==
        r.dwells.size());
}

TEST_CASE("spikes below the far threshold do not end a dwell") {
  DwellDetector d(0.2, 0.8);
  const double path[] = {0.0, 0.9, 0.5, 0.95, 0.3, 0.9, 0.1, 0.05, 0.7, 0.0, 0.85};
  for (int k = 0; k < 11; ++k) d.observe(k, path[k]);
  REQUIRE(d.dwells().size() == 2);
  CHECK(d.switches() == 3);
  CHECK(d.dwells()[0].state == WellState::near_one);
  CHECK(d.dwells()[1].state == WellState::near_zero);
  CHECK(d.state() == WellState::near_one);
}

TEST_CASE("transit on a unit-slope ramp lasts b - a") {
  std::vector<double> t, q;
  for (int k = 0; k <= 1000; ++k) {
    t.push_back(k * 1e-3);
    q.push_back(k * 1e-3);
  }
  const std::vector<Transit> tr = transit_times(make_trajectory(t, q), 0.3, 0.7);
  REQUIRE(tr.size() == 1);
  CHECK(tr[0].direction == Direction::up);
  CHECK(tr[0].duration == doctest::Approx(0.4).epsilon(1e-12));
}

TEST_CASE("transits start at the last crossing of the near level") {
  TransitDetector d(0.2, 0.8);
  const double path[] = {0.0, 0.5, 0.1, 0.5, 0.9, 0.5, 0.9, 0.1};
  for (int k = 0; k < 8; ++k) d.observe(k, path[k]);
  REQUIRE(d.transits().size() == 2);
  // Up: last crossing of 0.2 at t = 2.25, hit of 0.8 at t = 3.75.
  CHECK(d.transits()[0].direction == Direction::up);
  CHECK(d.transits()[0].duration == doctest::Approx(1.5));
  // Down: the return to 0.9 re-arms nothing; last down-crossing of 0.8 at
  // t = 6.125, hit of 0.2 at t = 6.875.
  CHECK(d.transits()[1].direction == Direction::down);
  CHECK(d.transits()[1].duration == doctest::Approx(0.75));
}

TEST_CASE("deterministic first passage") {
  const QbitParams q(0.6, 1.0, 0.0);
  const double dt = 1e-4;
  const Trajectory tr = simulate_q(q, 0.0, 5.0, dt, {1, 0});
  const std::vector<double> d = first_passage_times(tr, 0.01, 0.5);
  REQUIRE(d.size() == 1);
  CHECK(std::abs(d[0] - std::log((0.6 - 0.01) / (0.6 - 0.5))) < 10 * dt);
  CHECK(first_passage_times(tr, 0.5, 0.01).empty());
}

TEST_CASE("first passage keeps running through dips below the start") {
  FirstPassageDetector d(0.3, 0.9);
  const double path[] = {0.1, 0.5, 0.2, 0.5, 1.0, 0.2, 0.6};
  for (int k = 0; k < 7; ++k) d.observe(k, path[k]);
  REQUIRE(d.durations().size() == 1);
  // Start crossed at 0.5, target hit at 3.8.
  CHECK(d.durations()[0] == doctest::Approx(3.3));
}

TEST_CASE("detector properties on a simulated path") {
  const QbitParams q = QbitParams::from_sigma(0.6, 1e-2);
  const Trajectory tr = simulate_q(q, 0.5, 300.0, q.tau_meas() / 50, {17, 0}, 2);
  const Trajectory again = simulate_q(q, 0.5, 300.0, q.tau_meas() / 50, {17, 0}, 2);

  std::size_t previous = SIZE_MAX;
  for (double a : {0.2, 0.1, 0.05, 0.02}) {
    const JumpRecord r = detect_dwells(tr, a, 1.0 - a);
    CHECK(r.dwells.size() <= previous);
    previous = r.dwells.size();
  }
  CHECK(previous > 20);

  DetectorConfig config;
  config.passage_start = 0.05;
  config.passage_target = 0.95;
  const JumpRecord r1 = analyze(tr, config), r2 = analyze(again, config);
  REQUIRE(r1.dwells.size() == r2.dwells.size());
  for (std::size_t i = 0; i < r1.dwells.size(); ++i) {
    CHECK(r1.dwells[i].duration == r2.dwells[i].duration);
  }
  CHECK(r1.passages == r2.passages);

  const std::vector<Transit> transits = transit_times(tr, 0.05, 0.95);
  const std::vector<double> passages = first_passage_times(tr, 0.05, 0.95);
  std::vector<double> ups;
  for (const Transit& t : transits) {
    if (t.direction == Direction::up) ups.push_back(t.duration);
  }
  REQUIRE(ups.size() == passages.size());
  for (std::size_t i = 0; i < ups.size(); ++i) CHECK(ups[i] <= passages[i] + 1e-12);

  JumpRecord merged = r1;
  merged.merge(r2);
  CHECK(merged.dwells.size() == 2 * r1.dwells.size());
  CHECK(merged.switches == 2 * r1.switches);
  JumpRecord other;
  other.config.low = 0.1;
  CHECK_THROWS_AS(merged.merge(other), InvalidInput);
}

TEST_CASE("time average of Q matches the stationary mean") {
  const QbitParams q = QbitParams::from_sigma(0.6, 1e-2);
  const TimeGrid grid = make_time_grid(q, 2000.0, q.tau_meas() / 50);
  RandomStream rng(23, 0);
  TimeAverage avg([](double x) { return x; }, 20.0);
  integrate_q(q, 0.6, grid, rng, [&](double t, double v) { avg.observe(t, v); });
  CHECK(avg.blocks() >= 99);  // the last block may miss by rounding
  CHECK(avg.blocks() <= 100);
  CHECK(avg.duration() == doctest::Approx(2000.0));
  CHECK(std::abs(avg.mean() - 0.6) < 3.0 * avg.std_error());

  TimeAverage flat([](double) { return 2.0; }, 1.0);
  for (int k = 0; k <= 10; ++k) flat.observe(0.5 * k, 0.3);
  CHECK(flat.mean() == 2.0);
  CHECK(flat.std_error() == 0.0);
  TimeAverage short_run([](double x) { return x; }, 100.0);
  short_run.observe(0.0, 0.1);
  short_run.observe(1.0, 0.2);
  CHECK(std::isinf(short_run.std_error()));
}

TEST_CASE("simple estimators") {
  const std::vector<double> a{1.0, 2.0, 3.0, 4.0};
  const FitReport m = mean_estimate(a);
  CHECK(m.estimate == 2.5);
  CHECK(m.std_error == doctest::Approx(std::sqrt(5.0 / 3.0 / 4.0)));
  CHECK(m.n == 4);
  const std::vector<double> b{2.0, 2.0, 2.0, 2.0};
  const FitReport r = ratio_estimate(a, b);
  CHECK(r.estimate == 1.25);
  CHECK(r.std_error == doctest::Approx(m.std_error / 2.0));
  const FitReport f = fraction_estimate(25, 100);
  CHECK(f.estimate == 0.25);
  CHECK(f.std_error == doctest::Approx(std::sqrt(0.25 * 0.75 / 100)));

  FitReport c = f;
  CHECK(c.check(0.3, 0.06).pass);
  CHECK(!c.check(0.3, 0.04).pass);
  CHECK(c.check_relative(0.26, 0.05).pass);
  CHECK(c.tolerance == doctest::Approx(0.013));

  nlohmann::json j = FitReport{};
  for (const char* key : {"estimate", "stderr", "n", "statistic", "target", "tolerance", "pass"}) {
    CHECK(j.contains(key));
  }
  CHECK(j["estimate"].is_null());
  nlohmann::json k = c;
  CHECK(k["estimate"].get<double>() == 0.25);
}

TEST_CASE("KS test against the exponential law") {
  const double rate = 0.6 / 0.99;
  const FitReport good = ks_exponential(exponential_samples(rate, 1000, 5), rate);
  CHECK(good.pass);
  CHECK(good.tolerance == doctest::Approx(1.36 / std::sqrt(1000.0)));
  CHECK(good.std_error > 0.0);
  const FitReport bad = ks_exponential(exponential_samples(2.0 * rate, 1000, 5), rate);
  CHECK(!bad.pass);

  std::vector<double> constant(60, 1.0);
  const double cdf = 1.0 - std::exp(-1.0);
  CHECK(ks_exponential(constant, 1.0).statistic == doctest::Approx(std::max(cdf, 1.0 - cdf)));
  CHECK_THROWS_AS(ks_exponential(std::vector<double>{}, 1.0), InvalidInput);
  WarningCapture warnings;
  (void)ks_exponential(std::vector<double>(10, 1.0), 1.0);
  CHECK(!warnings.empty());
}

TEST_CASE("decay rate fit") {
  std::vector<double> t, v;
  for (int k = 0; k <= 10; ++k) {
    t.push_back(0.1 * k);
    v.push_back(std::exp(-3.0 * 0.1 * k));
  }
  const FitReport r = fit_decay_rate(t, v);
  CHECK(std::abs(r.estimate - 3.0) < 1e-10);
  CHECK(r.statistic < 1e-12);
  CHECK_THROWS_AS(fit_decay_rate(std::vector<double>(t.begin(), t.begin() + 5),
                                 std::vector<double>(v.begin(), v.begin() + 5)),
                  InvalidInput);
  v[3] = 0.0;
  CHECK_THROWS_AS(fit_decay_rate(t, v), DomainError);
}

TEST_CASE("histogram distance against rejection samples of the density") {
  const double p = 0.6, sigma = 1e-2;
  const auto density = [&](double q) { return stationary_density(q, p, sigma); };
  const DoubleWell wells = well_bottoms(p, sigma);
  auto logit = [](double q) { return std::log(q / (1.0 - q)); };
  const double v_min = std::min(potential_v(logit(wells.lower), p, sigma),
                                potential_v(logit(wells.upper), p, sigma));
  RandomStream rng(99, 0);
  std::vector<double> samples;
  samples.reserve(1000000);
  while (samples.size() < 1000000) {
    const double x = -20.0 + 40.0 * rng.uniform();
    if (rng.uniform() < std::exp(-2.0 * (potential_v(x, p, sigma) - v_min))) {
      samples.push_back(1.0 / (1.0 + std::exp(-x)));
    }
  }
  const FitReport r = histogram_distance(samples, density, 50);
  CHECK(r.estimate < 0.01);
  CHECK(r.pass);

  std::vector<double> uniform;
  for (int i = 0; i < 100000; ++i) uniform.push_back(rng.uniform());
  const FitReport u = histogram_distance(uniform, density, 50);
  CHECK(u.estimate > 0.5);
  CHECK(!u.pass);

  CHECK_THROWS_AS(histogram_distance(uniform, density, 5), InvalidInput);
  WarningCapture warnings;
  (void)histogram_distance(std::vector<double>(100, 0.5), density, 10);
  CHECK(!warnings.empty());
}

TEST_CASE("bin masses") {
  const std::vector<double> flat = density_bin_masses([](double) { return 1.0; }, 20);
  for (double m : flat) CHECK(m == doctest::Approx(0.05).epsilon(1e-12));
  const std::vector<double> masses =
      density_bin_masses([](double q) { return stationary_density(q, 0.6, 1e-2); }, 10);
  CHECK(masses[0] + masses[1] + masses[2] + masses[3] + masses[4] ==
        doctest::Approx(stationary_mass(0.0, 0.5, 0.6, 1e-2)).epsilon(1e-8));
}
