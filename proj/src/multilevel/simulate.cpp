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
#include <array>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <sstream>

#include "qjump/error.hpp"
#include "qjump/multilevel.hpp"

namespace qjump {

namespace {

// Row-major copies of the thermal matrix and noise factor for the inner loop.
// Levels > 0 fixes the size at compile time so small models unroll; the
// arithmetic is the same in every instantiation.
template <std::size_t Levels = 0>
class Stepper {
  template <std::size_t Size>
  using Store = std::conditional_t<(Levels > 0), std::array<double, Size>, std::vector<double>>;

 public:
  explicit Stepper(const MultiLevelModel& model)
      : n_(Levels > 0 ? Levels : static_cast<std::size_t>(model.levels())) {
    if constexpr (Levels == 0) {
      a_.assign(n_ * n_, 0.0);
      f_.assign(n_ * n_, 0.0);
      dq_.assign(n_, 0.0);
      w_.assign(n_, 0.0);
    } else {
      a_.fill(0.0);
      f_.fill(0.0);
      dq_.fill(0.0);
      w_.fill(0.0);
    }
    const Eigen::MatrixXd a = thermal_matrix(model);
    for (std::size_t r = 0; r < n(); ++r) {
      for (std::size_t c = 0; c < n(); ++c) a_[r * n() + c] = a(r, c);
    }
  }

  // Keeps only the nonzero columns of f, so rank-deficient noise needs fewer
  // normals per step.
  void set_factor(const Eigen::MatrixXd& f) {
    std::vector<Eigen::Index> keep;
    for (Eigen::Index c = 0; c < f.cols(); ++c) {
      if (f.col(c).cwiseAbs().maxCoeff() > 0.0) keep.push_back(c);
    }
    rank_ = keep.size();
    for (std::size_t r = 0; r < n(); ++r) {
      for (std::size_t k = 0; k < rank_; ++k) {
        f_[r * rank_ + k] = f(static_cast<Eigen::Index>(r), keep[k]);
      }
    }
  }

  std::size_t rank() const noexcept { return rank_; }

  // w = F z scale, with z of length rank().
  void correlate(const double* z, double scale) {
    for (std::size_t r = 0; r < n(); ++r) {
      double s = 0.0;
      for (std::size_t k = 0; k < rank_; ++k) s += f_[r * rank_ + k] * z[k];
      w_[r] = s * scale;
    }
  }

  double* noise() noexcept { return w_.data(); }

  // Applies one step with the increments in noise(); returns true if clipped.
  bool step(double* q, double dt) {
    double mean_w = 0.0;
    for (std::size_t c = 0; c < n(); ++c) mean_w += q[c] * w_[c];
    for (std::size_t r = 0; r < n(); ++r) {
      double therm = 0.0;
      for (std::size_t c = 0; c < n(); ++c) therm += a_[r * n() + c] * q[c];
      dq_[r] = therm * dt + q[r] * (w_[r] - mean_w);
    }
    bool clipped = false;
    double sum = 0.0;
    for (std::size_t r = 0; r < n(); ++r) {
      double v = q[r] + dq_[r];
      if (v < 0.0) {
        v = 0.0;
        clipped = true;
      }
      q[r] = v;
      sum += v;
    }
    // A NaN or infinity in any component propagates into the sum.
    if (!std::isfinite(sum)) throw StepTooLarge("multilevel step produced a non-finite population");
    if (!(sum > 0.0)) throw StepTooLarge("multilevel step left no population");
    for (std::size_t r = 0; r < n(); ++r) q[r] /= sum;
    return clipped;
  }

 private:
  std::size_t n() const noexcept {
    if constexpr (Levels > 0) return Levels;
    else return n_;
  }

  std::size_t n_;
  std::size_t rank_ = 0;
  Store<Levels * Levels> a_, f_;
  Store<Levels> dq_, w_;
};

void require_state(const Eigen::VectorXd& q, Eigen::Index n) {
  if (q.size() != n) throw InvalidInput("multilevel state has the wrong number of levels");
  if (!q.allFinite()) throw InvalidInput("multilevel state is not finite");
  if ((q.array() < 0.0).any() || (q.array() > 1.0).any()) {
    throw DomainError("multilevel state entries must lie in [0, 1]");
  }
  if (std::abs(q.sum() - 1.0) > 1e-9) throw DomainError("multilevel state must sum to 1");
}

void check_step(const MultiLevelModel& model, double dt) {
  if (!std::isfinite(dt) || !(dt > 0.0)) throw InvalidInput("dt must be positive");
  const double limit = multilevel_step_limit(model);
  if (dt >= limit) {
    std::ostringstream os;
    os << "dt = " << dt << " is not below the fastest model time scale " << limit;
    throw StepTooLarge(os.str());
  }
  if (dt > limit / 50.0) {
    std::ostringstream os;
    os << "dt = " << dt << " exceeds the fastest model time scale / 50 = " << limit / 50.0;
    warn(os.str());
  }
}

template <std::size_t Levels>
void run_loop(const MultiLevelModel& model, const Eigen::VectorXd& q0, std::uint64_t steps,
              const MultiLevelOptions& options, DominanceDetector& detector,
              MultiLevelTrajectory& traj) {
  Stepper<Levels> stepper(model);
  stepper.set_factor(noise_factor(gamma_bar(model)));
  RandomStream rng(traj.seed_info);
  std::vector<double> q(q0.data(), q0.data() + q0.size());
  const double dt = traj.dt;
  std::vector<double> z(stepper.rank());
  const double sqrt_dt = std::sqrt(dt);

  auto record = [&](std::uint64_t k) {
    const double t = static_cast<double>(k) * dt;
    detector.observe(t, q.data());
    if (options.observer) options.observer(t, q.data());
    if (options.record_states && k % options.record_stride == 0) {
      traj.times.push_back(t);
      traj.states.insert(traj.states.end(), q.begin(), q.end());
    }
  };
  record(0);
  for (std::uint64_t k = 1; k <= steps; ++k) {
    for (auto& v : z) v = rng.normal();
    stepper.correlate(z.data(), sqrt_dt);
    if (stepper.step(q.data(), dt)) ++traj.counters.clips;
    ++traj.counters.steps;
    record(k);
  }
}

}  // namespace

Eigen::VectorXd step_multilevel(const Eigen::VectorXd& q, const MultiLevelModel& model, double dt,
                                const Eigen::VectorXd& noise, SimplexCounters* counters) {
  require_valid(model);
  require_state(q, model.levels());
  if (noise.size() != model.levels() || !noise.allFinite()) {
    throw InvalidInput("step_multilevel: noise must be a finite n-vector");
  }
  if (!std::isfinite(dt) || !(dt > 0.0)) throw InvalidInput("dt must be positive");
  Stepper<> stepper(model);
  std::copy(noise.data(), noise.data() + noise.size(), stepper.noise());
  Eigen::VectorXd out = q;
  const bool clipped = stepper.step(out.data(), dt);
  if (counters != nullptr) {
    ++counters->steps;
    if (clipped) ++counters->clips;
  }
  return out;
}

DominanceDetector::DominanceDetector(int levels, double enter, double exit)
    : levels_(levels), enter_(enter), exit_(exit), label_time_(static_cast<std::size_t>(levels), 0.0) {
  if (levels < 2) throw InvalidInput("dominance detector: need at least two levels");
  if (!(0.5 < enter && enter < 1.0 && 0.0 < exit && exit < enter)) {
    throw DomainError("dominance detector: requires 0 < exit < enter, 1/2 < enter < 1");
  }
}

void DominanceDetector::observe(double t, const double* q) {
  if (have_prev_) {
    const double dt = t - t_prev_;
    total_time_ += dt;
    if (label_ >= 0) {
      label_time_[static_cast<std::size_t>(label_)] += dt;
      if (occupied_) classified_time_ += dt;
    }
  }
  // With the label above 1 - enter no other level can exceed enter.
  const bool settled = label_ >= 0 && q[label_] > 1.0 - enter_;
  for (int a = 0; a < levels_ && !settled; ++a) {
    if (q[a] > enter_ && a != label_) {
      if (label_ >= 0) dwells_.push_back({label_, t - since_});
      label_ = a;
      since_ = t;
      events_.push_back({t, a});
      break;
    }
  }
  if (label_ >= 0) {
    if (q[label_] > enter_) occupied_ = true;
    else if (q[label_] < exit_) occupied_ = false;
  }
  have_prev_ = true;
  t_prev_ = t;
}

std::optional<LevelDwell> DominanceDetector::open_dwell() const {
  if (label_ < 0) return std::nullopt;
  return LevelDwell{label_, t_prev_ - since_};
}

std::vector<double> MultiLevelTrajectory::dwell_durations(int level) const {
  std::vector<double> out;
  for (const auto& d : dwells) {
    if (d.level == level) out.push_back(d.duration);
  }
  return out;
}

MultiLevelTrajectory simulate_multilevel(const MultiLevelModel& model, const Eigen::VectorXd& q0,
                                         double horizon, double dt, SeedInfo seed,
                                         const MultiLevelOptions& options) {
  require_valid(model);
  require_state(q0, model.levels());
  if (!std::isfinite(horizon) || !(horizon >= dt)) throw InvalidInput("horizon must be at least one step");
  if (options.record_stride == 0) throw InvalidInput("record stride must be positive");
  check_step(model, dt);
  const double ratio = horizon / dt;
  const auto steps = static_cast<std::uint64_t>(std::floor(ratio + 1e-9 * ratio));

  const int n = model.levels();
  MultiLevelTrajectory traj;
  traj.levels = n;
  traj.dt = dt;
  traj.record_stride = options.record_stride;
  traj.seed_info = seed;

  DominanceDetector detector(n, options.enter, options.exit);
  switch (n) {
    case 2: run_loop<2>(model, q0, steps, options, detector, traj); break;
    case 3: run_loop<3>(model, q0, steps, options, detector, traj); break;
    default: run_loop<0>(model, q0, steps, options, detector, traj); break;
  }
  traj.events = detector.events();
  traj.dwells = detector.dwells();
  traj.open_dwell = detector.open_dwell();
  traj.label_time = detector.label_time();
  traj.classified_time = detector.classified_time();
  traj.total_time = detector.total_time();
  return traj;
}

void write_csv(std::ostream& os, const MultiLevelTrajectory& traj) {
  char buf[64];
  os << "# qjump multilevel v1 dt=" << traj.dt << " stride=" << traj.record_stride
     << " seed=" << traj.seed_info.seed << " index=" << traj.seed_info.index << "\n";
  os << "t";
  for (int a = 0; a < traj.levels; ++a) os << ",Q" << a;
  os << "\n";
  const auto n = static_cast<std::size_t>(traj.levels);
  for (std::size_t i = 0; i < traj.times.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.12g", traj.times[i]);
    os << buf;
    for (std::size_t a = 0; a < n; ++a) {
      std::snprintf(buf, sizeof buf, ",%.12g", traj.states[i * n + a]);
      os << buf;
    }
    os << "\n";
  }
}

}  // namespace qjump
