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

// Jump detection on sampled trajectories and the statistical checks applied
// to the resulting samples. Detectors are streaming: feed (t, Q) pairs in time
// order through observe(), or use the batch helpers on a whole Trajectory.
// Threshold crossings are located by linear interpolation between samples.

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "qjump/trajectory.hpp"

namespace qjump {

enum class WellState { near_zero, near_one };
enum class Direction { up, down };

const char* to_string(WellState s) noexcept;
const char* to_string(Direction d) noexcept;

struct Dwell {
  WellState state;
  double duration;
};

struct Transit {
  Direction direction;
  double duration;
};

struct DetectorConfig {
  double low = 0.2;
  double high = 0.8;
  double passage_start = std::numeric_limits<double>::quiet_NaN();
  double passage_target = std::numeric_limits<double>::quiet_NaN();
};

struct JumpRecord {
  DetectorConfig config;
  std::vector<Dwell> dwells;
  std::vector<Transit> transits;
  std::vector<double> passages;
  std::size_t switches = 0;

  std::vector<double> dwell_durations(WellState s) const;
  std::vector<double> transit_durations(Direction d) const;

  // Concatenates another trajectory's samples; configs must agree.
  void merge(const JumpRecord& other);
};

// Hysteresis two-state detector. The state is unknown until Q first drops
// below `low` or rises above `high`; the dwell in progress at that point and
// at the end of the data are not recorded.
class DwellDetector {
 public:
  DwellDetector(double low, double high);

  void observe(double t, double q);

  const std::vector<Dwell>& dwells() const noexcept { return dwells_; }
  std::size_t switches() const noexcept { return switches_; }
  std::optional<WellState> state() const noexcept { return state_; }

 private:
  double low_, high_;
  std::optional<WellState> state_;
  double since_ = std::numeric_limits<double>::quiet_NaN();
  bool have_prev_ = false;
  double t_prev_ = 0.0, q_prev_ = 0.0;
  std::size_t switches_ = 0;
  std::vector<Dwell> dwells_;
};

// Passage start -> target: armed while Q is on the far side of `start`, timed
// from the crossing of `start` to the first hit of `target`. Re-arms once Q
// returns to the far side.
class FirstPassageDetector {
 public:
  FirstPassageDetector(double start, double target);

  void observe(double t, double q);

  const std::vector<double>& durations() const noexcept { return durations_; }

 private:
  enum class Phase { idle, armed, running };
  // Signed so that "beyond" always means larger.
  double oriented(double q) const noexcept { return upward_ ? q : -q; }

  double start_, target_;
  bool upward_;
  Phase phase_ = Phase::idle;
  double began_ = 0.0;
  bool have_prev_ = false;
  double t_prev_ = 0.0, q_prev_ = 0.0;
  std::vector<double> durations_;
};

// Transits between a and b: an up-transit runs from the last up-crossing of a
// to the following first hit of b, counted only if Q was below a since the
// previous hit of b. Down-transits mirror this.
class TransitDetector {
 public:
  TransitDetector(double a, double b);

  void observe(double t, double q);

  const std::vector<Transit>& transits() const noexcept { return transits_; }

 private:
  enum class Side { unknown, below, above };

  double a_, b_;
  Side side_ = Side::unknown;
  double last_up_a_ = std::numeric_limits<double>::quiet_NaN();
  double last_down_b_ = std::numeric_limits<double>::quiet_NaN();
  bool have_prev_ = false;
  double t_prev_ = 0.0, q_prev_ = 0.0;
  std::vector<Transit> transits_;
};

// Time average of f(Q) with the left-point rule, plus batch means over blocks
// of fixed duration for a standard error that respects autocorrelation.
class TimeAverage {
 public:
  TimeAverage(std::function<double(double)> f, double block_duration);

  void observe(double t, double q);

  double mean() const noexcept;
  double std_error() const noexcept;
  std::size_t blocks() const noexcept { return block_means_.size(); }
  const std::vector<double>& block_means() const noexcept { return block_means_; }
  double duration() const noexcept { return total_time_; }

 private:
  std::function<double(double)> f_;
  double block_duration_;
  double total_time_ = 0.0, total_ = 0.0;
  double block_time_ = 0.0, block_sum_ = 0.0;
  std::vector<double> block_means_;
  bool have_prev_ = false;
  double t_prev_ = 0.0, q_prev_ = 0.0;
};

JumpRecord detect_dwells(const Trajectory& traj, double a = 0.2, double b = 0.8);
std::vector<double> first_passage_times(const Trajectory& traj, double start, double target);
std::vector<Transit> transit_times(const Trajectory& traj, double a, double b);
JumpRecord analyze(const Trajectory& traj, const DetectorConfig& config);

struct FitReport {
  double estimate = std::numeric_limits<double>::quiet_NaN();
  double std_error = 0.0;
  std::size_t n = 0;
  double statistic = std::numeric_limits<double>::quiet_NaN();
  double target = std::numeric_limits<double>::quiet_NaN();
  double tolerance = std::numeric_limits<double>::quiet_NaN();
  bool pass = false;

  // Sets the target and absolute tolerance; pass = |estimate - target| < tolerance.
  FitReport& check(double target_value, double abs_tolerance);
  FitReport& check_relative(double target_value, double rel_tolerance);
};

void to_json(nlohmann::json& j, const FitReport& r);

// Sample mean with standard error sd / sqrt(n).
FitReport mean_estimate(std::span<const double> samples);

// Ratio of two independent sample means with a delta-method standard error.
FitReport ratio_estimate(std::span<const double> numerator, std::span<const double> denominator);

// Fraction k / n with the binomial standard error.
FitReport fraction_estimate(std::size_t k, std::size_t n);

// One-sample Kolmogorov-Smirnov test against Exp(rate). The statistic is D,
// the target 0 and the tolerance the 5% asymptotic critical value 1.36/sqrt(n).
FitReport ks_exponential(std::span<const double> samples, double rate);

// Least-squares fit of log(values) against times; estimate = -slope.
// statistic is the residual standard deviation of the log values.
FitReport fit_decay_rate(std::span<const double> times, std::span<const double> values);

// Total-variation distance between the histogram of `samples` on `bins` equal
// bins of [0, 1] and the bin masses of `density` (normalized over [0, 1]).
FitReport histogram_distance(std::span<const double> samples,
                             const std::function<double(double)>& density, int bins,
                             double tolerance = 0.02);

// Bin masses of `density` on equal bins of [0, 1], normalized to sum to one.
std::vector<double> density_bin_masses(const std::function<double(double)>& density, int bins);

}  // namespace qjump
