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

#include "qjump/trajectory.hpp"

#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <sstream>

#include "qjump/error.hpp"

namespace qjump {
namespace {

void require_finite(double v, const char* what) {
  if (!std::isfinite(v)) {
    std::ostringstream os;
    os << what << " must be finite";
    throw InvalidInput(os.str());
  }
}

void require_probability(double q, const char* what) {
  require_finite(q, what);
  if (q < 0.0 || q > 1.0) {
    std::ostringstream os;
    os << what << " must lie in [0, 1], got " << q;
    throw DomainError(os.str());
  }
}

void require_stride(std::uint64_t stride) {
  if (stride == 0) throw InvalidInput("record stride must be positive");
}

// Collects every stride-th sample.
class Recorder {
 public:
  Recorder(Trajectory& traj, std::uint64_t expected) : traj_(traj) {
    const std::uint64_t n = expected / traj.record_stride + 1;
    traj_.times.reserve(n);
    traj_.values.reserve(n);
  }
  void operator()(double t, double v) {
    if (count_++ % traj_.record_stride == 0) {
      traj_.times.push_back(t);
      traj_.values.push_back(v);
    }
  }

 private:
  Trajectory& traj_;
  std::uint64_t count_ = 0;
};

}  // namespace

TimeGrid make_time_grid(const QbitParams& params, double horizon, double dt) {
  require_finite(dt, "dt");
  require_finite(horizon, "horizon");
  if (!(dt > 0.0)) throw InvalidInput("dt must be positive");
  if (horizon < dt) throw InvalidInput("horizon must be at least one step");
  if (params.gamma() > 0.0) {
    const double tau_meas = params.tau_meas();
    if (dt >= tau_meas) {
      std::ostringstream os;
      os << "dt = " << dt << " is not below tau_meas = " << tau_meas
         << "; the Euler scheme is unstable there";
      throw StepTooLarge(os.str());
    }
    if (dt > tau_meas / 50.0) {
      std::ostringstream os;
      os << "dt = " << dt << " exceeds tau_meas / 50 = " << tau_meas / 50.0;
      warn(os.str());
    }
  }
  if (params.lambda() * dt >= 1.0) {
    std::ostringstream os;
    os << "dt = " << dt << " is not below tau_therm = " << params.tau_therm();
    throw StepTooLarge(os.str());
  }
  const double ratio = horizon / dt;
  auto steps = static_cast<std::uint64_t>(std::floor(ratio + 1e-9 * ratio));
  return {dt, steps};
}

double step_q(double q, const QbitParams& params, double dt, double dB) {
  if (!std::isfinite(dt) || !std::isfinite(dB)) throw InvalidInput("step_q: non-finite dt or dB");
  if (!(dt > 0.0)) throw InvalidInput("step_q: dt must be positive");
  require_probability(q, "step_q: Q");
  StepCounters unused;
  return detail::clamp_unit(
      q + params.lambda() * (params.p() - q) * dt + params.gamma() * q * (1.0 - q) * dB, unused);
}

Trajectory simulate_q(const QbitParams& params, double q0, double horizon, double dt,
                      SeedInfo seed, std::uint64_t stride) {
  require_probability(q0, "initial Q");
  require_stride(stride);
  const TimeGrid grid = make_time_grid(params, horizon, dt);
  Trajectory traj;
  traj.coordinate = Coordinate::probability;
  traj.dt = dt;
  traj.record_stride = stride;
  traj.seed_info = seed;
  RandomStream rng(seed);
  Recorder record(traj, grid.steps);
  traj.counters = integrate_q(params, q0, grid, rng, record);
  return traj;
}

Trajectory simulate_x(const QbitParams& params, double x0, double horizon, double dt,
                      SeedInfo seed, std::uint64_t stride) {
  require_finite(x0, "initial X");
  require_stride(stride);
  const TimeGrid grid = make_time_grid(params, horizon, dt);
  Trajectory traj;
  traj.coordinate = Coordinate::logit;
  traj.dt = dt;
  traj.record_stride = stride;
  traj.seed_info = seed;
  RandomStream rng(seed);
  Recorder record(traj, grid.steps);
  bool blew_up = false;
  traj.counters = integrate_x(params, x0, grid, rng, [&](double t, double x) {
    if (!std::isfinite(x)) {
      blew_up = true;
      return false;
    }
    record(t, x);
    return true;
  });
  if (blew_up) throw StepTooLarge("simulate_x: logit coordinate diverged; reduce dt");
  return traj;
}

Trajectory to_probability(const Trajectory& traj) {
  if (traj.coordinate == Coordinate::probability) return traj;
  Trajectory out = traj;
  out.coordinate = Coordinate::probability;
  for (double& v : out.values) v = 1.0 / (1.0 + std::exp(-v));
  return out;
}

void write_csv(std::ostream& out, const Trajectory& traj) {
  const char* column = traj.coordinate == Coordinate::probability ? "Q" : "X";
  out << "# qjump trajectory v1 dt=" << traj.dt << " stride=" << traj.record_stride
      << " seed=" << traj.seed_info.seed << " index=" << traj.seed_info.index << '\n';
  out << "t," << column << '\n';
  char buf[64];
  for (std::size_t i = 0; i < traj.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.12g,%.12g\n", traj.times[i], traj.values[i]);
    out << buf;
  }
}

PairedTrajectory simulate_paired(const QbitParams& params, double q0, double q0_prime,
                                 double horizon, double dt, SeedInfo seed, std::uint64_t stride) {
  require_probability(q0, "initial Q");
  require_probability(q0_prime, "initial Q'");
  if (q0 > q0_prime) throw DomainError("simulate_paired: requires Q0 <= Q0'");
  require_stride(stride);
  const TimeGrid grid = make_time_grid(params, horizon, dt);
  PairedTrajectory out;
  out.dt = dt;
  out.record_stride = stride;
  out.seed_info = seed;
  const bool ordered = q0 < q0_prime;
  RandomStream rng(seed);
  std::uint64_t count = 0;
  out.times.reserve(grid.steps / stride + 1);
  out.gaps.reserve(grid.steps / stride + 1);
  out.counters = integrate_paired(params, q0, q0_prime, grid, rng, [&](double t, double q, double r) {
    if (ordered && !(q < r)) ++out.order_violations;
    if (count++ % stride == 0) {
      out.times.push_back(t);
      out.gaps.push_back(r - q);
    }
  });
  return out;
}

double povm_strength(double gamma, double delta) {
  if (!std::isfinite(gamma) || !std::isfinite(delta)) throw InvalidInput("povm_strength: non-finite input");
  if (!(delta > 0.0)) throw InvalidInput("povm_strength: delta must be positive");
  const double x = gamma * std::sqrt(delta);
  if (x >= 2.0) {
    std::ostringstream os;
    os << "probe strength gamma*sqrt(delta) = " << x << " leaves (0, 2)";
    throw DomainError(os.str());
  }
  return 0.5 * (1.0 + 0.5 * x);
}

PovmOutcomes povm_outcomes(double q, double strength) noexcept {
  const double hit = strength * q;
  const double miss = (1.0 - strength) * (1.0 - q);
  const double plus = hit + miss;
  const double hit_minus = (1.0 - strength) * q;
  const double miss_minus = strength * (1.0 - q);
  PovmOutcomes out;
  out.plus_probability = plus;
  out.after_plus = plus > 0.0 ? hit / plus : q;
  const double minus = hit_minus + miss_minus;
  out.after_minus = minus > 0.0 ? hit_minus / minus : q;
  return out;
}

void check_discrete_cycle(const QbitParams& params, double delta) {
  (void)povm_strength(params.gamma(), delta);
  if (params.gamma() > 0.0 && delta > params.tau_meas() / 50.0) {
    std::ostringstream os;
    os << "cycle length " << delta << " exceeds tau_meas / 50 = " << params.tau_meas() / 50.0;
    warn(os.str());
  }
}

Trajectory simulate_discrete(const QbitParams& params, double q0, std::uint64_t n_cycles,
                             double delta, SeedInfo seed, std::uint64_t stride) {
  require_probability(q0, "initial Q");
  require_stride(stride);
  check_discrete_cycle(params, delta);
  Trajectory traj;
  traj.coordinate = Coordinate::probability;
  traj.dt = delta;
  traj.record_stride = stride;
  traj.seed_info = seed;
  RandomStream rng(seed);
  Recorder record(traj, n_cycles);
  traj.counters = integrate_discrete(params, q0, n_cycles, delta, rng, record);
  return traj;
}

}  // namespace qjump
