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

#pragma once

#include <cmath>
#include <cstdint>
#include <iosfwd>
#include <type_traits>
#include <utility>
#include <vector>

#include "qjump/params.hpp"
#include "qjump/rng.hpp"

namespace qjump {

enum class Coordinate { probability, logit };

struct StepCounters {
  std::uint64_t steps = 0;
  std::uint64_t clamps = 0;

  void merge(const StepCounters& other) noexcept {
    steps += other.steps;
    clamps += other.clamps;
  }
  double clamp_fraction() const noexcept {
    return steps == 0 ? 0.0 : static_cast<double>(clamps) / static_cast<double>(steps);
  }
};

// Recorded path. values[k] is Q (or X = log(Q/(1-Q)) for the logit
// coordinate) at times[k] = k * dt * record_stride.
struct Trajectory {
  Coordinate coordinate = Coordinate::probability;
  double dt = 0.0;
  std::uint64_t record_stride = 1;
  SeedInfo seed_info;
  std::vector<double> times;
  std::vector<double> values;
  StepCounters counters;

  std::size_t size() const noexcept { return values.size(); }
  bool empty() const noexcept { return values.empty(); }
};

// Converts a logit-coordinate trajectory to probabilities (copy if already Q).
Trajectory to_probability(const Trajectory& traj);

void write_csv(std::ostream& out, const Trajectory& traj);

struct TimeGrid {
  double dt = 0.0;
  std::uint64_t steps = 0;
};

// Validates dt against the fastest rate and returns the number of steps
// covering the horizon. Refuses dt >= tau_meas (and lambda dt >= 1), warns
// above tau_meas / 50.
TimeGrid make_time_grid(const QbitParams& params, double horizon, double dt);

// One Euler-Maruyama step of dQ = lambda (p - Q) dt + gamma Q (1 - Q) dB,
// clamped to [0, 1].
double step_q(double q, const QbitParams& params, double dt, double dB);

namespace detail {

template <class Observer, class... Args>
inline bool notify(Observer& observe, Args&&... args) {
  if constexpr (std::is_same_v<std::invoke_result_t<Observer&, Args...>, bool>) {
    return observe(std::forward<Args>(args)...);
  } else {
    observe(std::forward<Args>(args)...);
    return true;
  }
}

inline double clamp_unit(double q, StepCounters& counters) noexcept {
  if (q < 0.0) {
    ++counters.clamps;
    return 0.0;
  }
  if (q > 1.0) {
    ++counters.clamps;
    return 1.0;
  }
  return q;
}

}  // namespace detail

// Streams every step of the scalar equation to observe(t, q). An observer
// returning bool can stop the run early by returning false.
template <class Observer>
StepCounters integrate_q(const QbitParams& params, double q0, const TimeGrid& grid,
                         RandomStream& rng, Observer&& observe) {
  const double p = params.p();
  const double lambda = params.lambda();
  const double gamma = params.gamma();
  const double dt = grid.dt;
  const double sqrt_dt = std::sqrt(dt);
  StepCounters counters;
  double q = q0;
  if (!detail::notify(observe, 0.0, q)) return counters;
  for (std::uint64_t k = 1; k <= grid.steps; ++k) {
    const double dB = sqrt_dt * rng.normal();
    q = detail::clamp_unit(q + lambda * (p - q) * dt + gamma * q * (1.0 - q) * dB, counters);
    ++counters.steps;
    if (!detail::notify(observe, static_cast<double>(k) * dt, q)) break;
  }
  return counters;
}

// Logit form: dX = [lambda (p e^-X - (1-p) e^X + 2p - 1) - gamma^2 (1 - 2Q) / 2] dt + gamma dB.
template <class Observer>
StepCounters integrate_x(const QbitParams& params, double x0, const TimeGrid& grid,
                         RandomStream& rng, Observer&& observe) {
  const double p = params.p();
  const double lambda = params.lambda();
  const double gamma = params.gamma();
  const double half_g2 = 0.5 * gamma * gamma;
  const double dt = grid.dt;
  const double sqrt_dt = std::sqrt(dt);
  StepCounters counters;
  double x = x0;
  if (!detail::notify(observe, 0.0, x)) return counters;
  for (std::uint64_t k = 1; k <= grid.steps; ++k) {
    const double dB = sqrt_dt * rng.normal();
    const double q = 1.0 / (1.0 + std::exp(-x));
    const double drift = lambda * (p * std::exp(-x) - (1.0 - p) * std::exp(x) + 2.0 * p - 1.0) -
                         half_g2 * (1.0 - 2.0 * q);
    x = x + drift * dt + gamma * dB;
    ++counters.steps;
    if (!detail::notify(observe, static_cast<double>(k) * dt, x)) break;
  }
  return counters;
}

Trajectory simulate_q(const QbitParams& params, double q0, double horizon, double dt,
                      SeedInfo seed, std::uint64_t stride = 1);

Trajectory simulate_x(const QbitParams& params, double x0, double horizon, double dt,
                      SeedInfo seed, std::uint64_t stride = 1);

// Two copies of the scalar equation driven by the same noise.
template <class Observer>
StepCounters integrate_paired(const QbitParams& params, double q0, double q0_prime,
                              const TimeGrid& grid, RandomStream& rng, Observer&& observe) {
  const double p = params.p();
  const double lambda = params.lambda();
  const double gamma = params.gamma();
  const double dt = grid.dt;
  const double sqrt_dt = std::sqrt(dt);
  StepCounters counters;
  double q = q0;
  double r = q0_prime;
  if (!detail::notify(observe, 0.0, q, r)) return counters;
  for (std::uint64_t k = 1; k <= grid.steps; ++k) {
    const double dB = sqrt_dt * rng.normal();
    q = detail::clamp_unit(q + lambda * (p - q) * dt + gamma * q * (1.0 - q) * dB, counters);
    r = detail::clamp_unit(r + lambda * (p - r) * dt + gamma * r * (1.0 - r) * dB, counters);
    counters.steps += 1;
    if (!detail::notify(observe, static_cast<double>(k) * dt, q, r)) break;
  }
  return counters;
}

struct PairedTrajectory {
  double dt = 0.0;
  std::uint64_t record_stride = 1;
  SeedInfo seed_info;
  std::vector<double> times;
  std::vector<double> gaps;  // Q'_t - Q_t
  StepCounters counters;
  // Steps (not only recorded ones) at which the initial order was lost.
  std::uint64_t order_violations = 0;
};

PairedTrajectory simulate_paired(const QbitParams& params, double q0, double q0_prime,
                                 double horizon, double dt, SeedInfo seed,
                                 std::uint64_t stride = 1);

// Two-outcome probe for the repeated-interaction chain. strength is the
// probability that the probe reports the true level.
double povm_strength(double gamma, double delta);

struct PovmOutcomes {
  double plus_probability;
  double after_plus;
  double after_minus;
};

PovmOutcomes povm_outcomes(double q, double strength) noexcept;

// Each cycle: exact thermal relaxation over delta, then one probe update.
template <class Observer>
StepCounters integrate_discrete(const QbitParams& params, double q0, std::uint64_t n_cycles,
                                double delta, RandomStream& rng, Observer&& observe) {
  const double p = params.p();
  const double decay = std::exp(-params.lambda() * delta);
  const double strength = povm_strength(params.gamma(), delta);
  StepCounters counters;
  double q = q0;
  if (!detail::notify(observe, 0.0, q)) return counters;
  for (std::uint64_t k = 1; k <= n_cycles; ++k) {
    q = p + (q - p) * decay;
    const PovmOutcomes o = povm_outcomes(q, strength);
    q = rng.uniform() < o.plus_probability ? o.after_plus : o.after_minus;
    ++counters.steps;
    if (!detail::notify(observe, static_cast<double>(k) * delta, q)) break;
  }
  return counters;
}

Trajectory simulate_discrete(const QbitParams& params, double q0, std::uint64_t n_cycles,
                             double delta, SeedInfo seed, std::uint64_t stride = 1);

// Validation shared by the discrete-chain entry points.
void check_discrete_cycle(const QbitParams& params, double delta);

}  // namespace qjump
