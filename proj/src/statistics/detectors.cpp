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
#include <sstream>

#include "qjump/error.hpp"
#include "qjump/statistics.hpp"

namespace qjump {

namespace {

// Time at which the segment (t0, q0) -> (t1, q1) meets `level`.
double crossing(double t0, double q0, double t1, double q1, double level) noexcept {
  if (q1 == q0) return t1;
  return t0 + (level - q0) / (q1 - q0) * (t1 - t0);
}

void require_levels(double lo, double hi, const char* what) {
  if (!std::isfinite(lo) || !std::isfinite(hi)) {
    throw InvalidInput(std::string(what) + ": non-finite level");
  }
  if (!(0.0 < lo && lo < hi && hi < 1.0)) {
    std::ostringstream os;
    os << what << ": requires 0 < a < b < 1, got a = " << lo << ", b = " << hi;
    throw DomainError(os.str());
  }
}

}  // namespace

const char* to_string(WellState s) noexcept {
  return s == WellState::near_zero ? "near_zero" : "near_one";
}

const char* to_string(Direction d) noexcept { return d == Direction::up ? "up" : "down"; }

std::vector<double> JumpRecord::dwell_durations(WellState s) const {
  std::vector<double> out;
  for (const auto& d : dwells) {
    if (d.state == s) out.push_back(d.duration);
  }
  return out;
}

std::vector<double> JumpRecord::transit_durations(Direction dir) const {
  std::vector<double> out;
  for (const auto& t : transits) {
    if (t.direction == dir) out.push_back(t.duration);
  }
  return out;
}

void JumpRecord::merge(const JumpRecord& other) {
  auto same = [](double x, double y) { return x == y || (std::isnan(x) && std::isnan(y)); };
  if (!same(config.low, other.config.low) || !same(config.high, other.config.high) ||
      !same(config.passage_start, other.config.passage_start) ||
      !same(config.passage_target, other.config.passage_target)) {
    throw InvalidInput("JumpRecord::merge: detector configurations differ");
  }
  dwells.insert(dwells.end(), other.dwells.begin(), other.dwells.end());
  transits.insert(transits.end(), other.transits.begin(), other.transits.end());
  passages.insert(passages.end(), other.passages.begin(), other.passages.end());
  switches += other.switches;
}

DwellDetector::DwellDetector(double low, double high) : low_(low), high_(high) {
  require_levels(low, high, "dwell detector");
}

void DwellDetector::observe(double t, double q) {
  if (have_prev_ && state_) {
    const bool up = *state_ == WellState::near_zero && q > high_;
    const bool down = *state_ == WellState::near_one && q < low_;
    if (up || down) {
      const double tc = crossing(t_prev_, q_prev_, t, q, up ? high_ : low_);
      if (std::isfinite(since_) && tc > since_) dwells_.push_back({*state_, tc - since_});
      state_ = up ? WellState::near_one : WellState::near_zero;
      since_ = tc;
      ++switches_;
    }
  } else if (!state_) {
    if (q < low_) state_ = WellState::near_zero;
    else if (q > high_) state_ = WellState::near_one;
  }
  have_prev_ = true;
  t_prev_ = t;
  q_prev_ = q;
}

FirstPassageDetector::FirstPassageDetector(double start, double target)
    : start_(start), target_(target), upward_(target > start) {
  if (!std::isfinite(start) || !std::isfinite(target)) {
    throw InvalidInput("first passage: non-finite level");
  }
  if (!(start > 0.0 && start < 1.0 && target > 0.0 && target < 1.0) || start == target) {
    throw DomainError("first passage: levels must differ and lie in (0, 1)");
  }
}

void FirstPassageDetector::observe(double t, double q) {
  const double x = oriented(q);
  const double s = oriented(start_);
  const double g = oriented(target_);
  if (have_prev_) {
    if (phase_ == Phase::armed && x >= s) {
      began_ = crossing(t_prev_, q_prev_, t, q, start_);
      phase_ = Phase::running;
    }
    if (phase_ == Phase::running && x >= g) {
      durations_.push_back(crossing(t_prev_, q_prev_, t, q, target_) - began_);
      phase_ = Phase::idle;
    }
  }
  if (phase_ == Phase::idle && x < s) phase_ = Phase::armed;
  have_prev_ = true;
  t_prev_ = t;
  q_prev_ = q;
}

TransitDetector::TransitDetector(double a, double b) : a_(a), b_(b) {
  if (!std::isfinite(a) || !std::isfinite(b)) throw InvalidInput("transit detector: non-finite level");
  if (!(a < b)) throw DomainError("transit detector: requires a < b");
}

void TransitDetector::observe(double t, double q) {
  if (have_prev_) {
    if (q_prev_ < a_ && q >= a_) last_up_a_ = crossing(t_prev_, q_prev_, t, q, a_);
    if (q_prev_ > b_ && q <= b_) last_down_b_ = crossing(t_prev_, q_prev_, t, q, b_);
    if (q_prev_ <= b_ && q > b_ && side_ == Side::below) {
      transits_.push_back({Direction::up, crossing(t_prev_, q_prev_, t, q, b_) - last_up_a_});
    }
    if (q_prev_ >= a_ && q < a_ && side_ == Side::above) {
      transits_.push_back({Direction::down, crossing(t_prev_, q_prev_, t, q, a_) - last_down_b_});
    }
  }
  if (q < a_) side_ = Side::below;
  else if (q > b_) side_ = Side::above;
  have_prev_ = true;
  t_prev_ = t;
  q_prev_ = q;
}

TimeAverage::TimeAverage(std::function<double(double)> f, double block_duration)
    : f_(std::move(f)), block_duration_(block_duration) {
  if (!(block_duration > 0.0) || !std::isfinite(block_duration)) {
    throw DomainError("time average: block duration must be positive");
  }
}

void TimeAverage::observe(double t, double q) {
  if (have_prev_) {
    const double dt = t - t_prev_;
    const double v = f_(q_prev_) * dt;
    total_time_ += dt;
    total_ += v;
    block_time_ += dt;
    block_sum_ += v;
    if (block_time_ >= block_duration_) {
      block_means_.push_back(block_sum_ / block_time_);
      block_time_ = 0.0;
      block_sum_ = 0.0;
    }
  }
  have_prev_ = true;
  t_prev_ = t;
  q_prev_ = q;
}

double TimeAverage::mean() const noexcept {
  return total_time_ > 0.0 ? total_ / total_time_ : std::numeric_limits<double>::quiet_NaN();
}

double TimeAverage::std_error() const noexcept {
  const std::size_t n = block_means_.size();
  if (n < 2) return std::numeric_limits<double>::infinity();
  double m = 0.0;
  for (double b : block_means_) m += b;
  m /= static_cast<double>(n);
  double ss = 0.0;
  for (double b : block_means_) ss += (b - m) * (b - m);
  return std::sqrt(ss / static_cast<double>(n - 1) / static_cast<double>(n));
}

JumpRecord detect_dwells(const Trajectory& traj, double a, double b) {
  DetectorConfig config;
  config.low = a;
  config.high = b;
  DwellDetector det(a, b);
  const Trajectory q = to_probability(traj);
  for (std::size_t i = 0; i < q.size(); ++i) det.observe(q.times[i], q.values[i]);
  JumpRecord rec;
  rec.config = config;
  rec.dwells = det.dwells();
  rec.switches = det.switches();
  return rec;
}

std::vector<double> first_passage_times(const Trajectory& traj, double start, double target) {
  FirstPassageDetector det(start, target);
  const Trajectory q = to_probability(traj);
  for (std::size_t i = 0; i < q.size(); ++i) det.observe(q.times[i], q.values[i]);
  return det.durations();
}

std::vector<Transit> transit_times(const Trajectory& traj, double a, double b) {
  TransitDetector det(a, b);
  const Trajectory q = to_probability(traj);
  for (std::size_t i = 0; i < q.size(); ++i) det.observe(q.times[i], q.values[i]);
  return det.transits();
}

JumpRecord analyze(const Trajectory& traj, const DetectorConfig& config) {
  const Trajectory q = to_probability(traj);
  DwellDetector dwell(config.low, config.high);
  TransitDetector transit(config.low, config.high);
  const bool passages = !std::isnan(config.passage_start) || !std::isnan(config.passage_target);
  std::optional<FirstPassageDetector> passage;
  if (passages) passage.emplace(config.passage_start, config.passage_target);
  for (std::size_t i = 0; i < q.size(); ++i) {
    dwell.observe(q.times[i], q.values[i]);
    transit.observe(q.times[i], q.values[i]);
    if (passage) passage->observe(q.times[i], q.values[i]);
  }
  JumpRecord rec;
  rec.config = config;
  rec.dwells = dwell.dwells();
  rec.switches = dwell.switches();
  rec.transits = transit.transits();
  if (passage) rec.passages = passage->durations();
  return rec;
}

}  // namespace qjump
