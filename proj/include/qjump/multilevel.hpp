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

// N-level populations Q on the probability simplex, driven by a thermal
// Markov generator and a correlated-noise energy measurement:
//
//   dQ_a = sum_c (L_ac - l_a delta_ac) Q_c dt + Q_a (dW_a - sum_c Q_c dW_c)
//
// with l_c = sum_a L_ac and dW_a dW_b = Gbar_ab dt, Gbar = G^T diag(p0) G.
// L_ac is the rate of transfer from level c to level a.

#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "qjump/rng.hpp"

namespace qjump {

struct MultiLevelModel {
  Eigen::MatrixXd rates;      // n x n, L(a, c): transfer c -> a; diagonal ignored
  Eigen::VectorXd boltzmann;  // n
  Eigen::MatrixXd couplings;  // m x n, G(i | a)
  Eigen::VectorXd probe;      // m, p0(i)

  int levels() const noexcept { return static_cast<int>(rates.rows()); }
  int outputs() const noexcept { return static_cast<int>(couplings.rows()); }

  // Two-level embedding of the qubit with ground population p: level 0 is Q,
  // level 1 is 1 - Q.
  static MultiLevelModel two_level(double p, double lambda, double gamma);
};

struct Violation {
  std::string what;
  double magnitude;
};

// All invariant violations larger than `tolerance` (shape, signs, sums,
// Gibbs stationarity, coupling centering, Gbar semidefiniteness).
std::vector<Violation> validate_model(const MultiLevelModel& model, double tolerance = 1e-9);

// Throws ModelError listing the violations, if any.
void require_valid(const MultiLevelModel& model, double tolerance = 1e-9);

Eigen::MatrixXd gamma_bar(const MultiLevelModel& model);

// F with F F^T = gbar from a pivoted LDL^T factorization; rank deficiency is
// allowed. Throws ModelError on a pivot below -1e-10 (relative to the largest).
Eigen::MatrixXd noise_factor(const Eigen::MatrixXd& gbar);

// Thermal generator L - diag(l), so that dQ_therm = A Q dt.
Eigen::MatrixXd thermal_matrix(const MultiLevelModel& model);

struct SimplexCounters {
  std::uint64_t steps = 0;
  std::uint64_t clips = 0;  // steps with at least one negative component clipped
};

// One Euler-Maruyama step; `noise` has covariance Gbar dt. Negative entries are
// clipped to zero and the sum renormalized to one.
Eigen::VectorXd step_multilevel(const Eigen::VectorXd& q, const MultiLevelModel& model, double dt,
                                const Eigen::VectorXd& noise, SimplexCounters* counters = nullptr);

// T_c = 1 / sum_{a != c} L_ac; infinite (with a warning) for absorbing levels.
Eigen::VectorXd predicted_dwell_times(const MultiLevelModel& model);

// 1/tau_ac = (Gbar_aa - 2 Gbar_ac + Gbar_cc) / 2.
Eigen::MatrixXd predicted_collapse_rates(const MultiLevelModel& model);

// Largest stable step: min(1 / max l, 1 / max Gbar_aa).
double multilevel_step_limit(const MultiLevelModel& model);

struct DominanceEvent {
  double time;
  int level;
};

struct LevelDwell {
  int level;
  double duration;
};

// Level a becomes dominant when Q_a rises above `enter`; it stays the label
// until another level does. While Q_label < `exit` the time counts as
// unclassified. Dwells run from one entry to the next entry of another level.
class DominanceDetector {
 public:
  DominanceDetector(int levels, double enter, double exit);

  void observe(double t, const double* q);

  const std::vector<DominanceEvent>& events() const noexcept { return events_; }
  const std::vector<LevelDwell>& dwells() const noexcept { return dwells_; }
  std::optional<LevelDwell> open_dwell() const;
  // Time spent with each level as the current label (left-point rule).
  const std::vector<double>& label_time() const noexcept { return label_time_; }
  double classified_time() const noexcept { return classified_time_; }
  double total_time() const noexcept { return total_time_; }

 private:
  int levels_;
  double enter_, exit_;
  int label_ = -1;
  bool occupied_ = false;
  double since_ = 0.0;
  double t_prev_ = 0.0;
  bool have_prev_ = false;
  std::vector<DominanceEvent> events_;
  std::vector<LevelDwell> dwells_;
  std::vector<double> label_time_;
  double classified_time_ = 0.0, total_time_ = 0.0;
};

inline constexpr double kDominanceEnter = 0.99;
inline constexpr double kDominanceExit = 0.6;

struct MultiLevelTrajectory {
  int levels = 0;
  double dt = 0.0;
  std::uint64_t record_stride = 1;
  SeedInfo seed_info;
  std::vector<double> times;
  std::vector<double> states;  // row-major, `levels` entries per sample
  std::vector<DominanceEvent> events;
  std::vector<LevelDwell> dwells;
  std::optional<LevelDwell> open_dwell;
  std::vector<double> label_time;
  double classified_time = 0.0;
  double total_time = 0.0;
  SimplexCounters counters;

  std::vector<double> dwell_durations(int level) const;
};

struct MultiLevelOptions {
  std::uint64_t record_stride = 1;
  double enter = kDominanceEnter;
  double exit = kDominanceExit;
  bool record_states = true;
  // Called with (t, Q) after every step, including t = 0.
  std::function<void(double, const double*)> observer;
};

MultiLevelTrajectory simulate_multilevel(const MultiLevelModel& model, const Eigen::VectorXd& q0,
                                         double horizon, double dt, SeedInfo seed,
                                         const MultiLevelOptions& options = {});

// CSV with header t,Q0,...,Q{n-1}.
void write_csv(std::ostream& os, const MultiLevelTrajectory& traj);

// Model documents: keys n, L (row-major, flat or nested), boltzmann, Gamma
// (m x n, flat or nested), p0. Errors carry the line of the offending node.
MultiLevelModel parse_model(const std::string& text, const std::string& origin = "<model>");
MultiLevelModel load_model(const std::string& path);

}  // namespace qjump
