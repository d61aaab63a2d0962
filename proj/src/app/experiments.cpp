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


// One compute routine per experiment kind. Every trajectory gets its own
// random stream (seed, index), per-trajectory results are stored by index
// and merged in index order, so outputs do not depend on the worker count.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>

#include "qjump/analytics.hpp"
#include "qjump/app.hpp"
#include "qjump/multilevel.hpp"
#include "qjump/params.hpp"
#include "qjump/trajectory.hpp"

namespace qjump::app {

namespace {

using nlohmann::json;

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

class Csv {
 public:
  Csv(std::string header) { out_ << header << "\n"; }

  template <class... Ts>
  void row(const Ts&... cells) {
    bool first = true;
    ((out_ << (first ? "" : ",") << cell(cells), first = false), ...);
    out_ << "\n";
  }

  std::string str() const { return out_.str(); }

 private:
  static std::string cell(double v) { return num(v); }
  static std::string cell(const char* s) { return s; }
  static std::string cell(const std::string& s) { return s; }
  template <class I, class = std::enable_if_t<std::is_integral_v<I>>>
  static std::string cell(I v) { return std::to_string(v); }

  std::ostringstream out_;
};

constexpr const char* kHistogramHeader = "bin_lo,bin_hi,empirical_mass,theory_mass";
constexpr const char* kOccupationHeader = "trajectory,fraction_above_half";
constexpr const char* kDwellsHeader = "trajectory,state,duration";
constexpr const char* kPassagesHeader = "trajectory,duration";
constexpr const char* kEcdfHeader = "duration,empirical_cdf,theory_cdf";
constexpr const char* kTransitsHeader = "trajectory,direction,duration";
constexpr const char* kRelaxHeader = "t,mean_p_minus_q,stderr";
constexpr const char* kMemoryHeader = "t,mean_log_gap,mean_gap,gap_stderr";
constexpr const char* kLevelDwellsHeader = "trajectory,level,duration";
constexpr const char* kEventsHeader = "trajectory,time,level";
constexpr const char* kLevelOccupationHeader = "level,label_fraction,boltzmann,mean_dwell,predicted_dwell";

// Data files of each kind, header only; written when there is nothing to run.
std::vector<std::pair<std::string, std::string>> empty_files(Kind kind) {
  auto f = [](const char* name, const char* header) {
    return std::pair<std::string, std::string>(name, std::string(header) + "\n");
  };
  switch (kind) {
    case Kind::stationary:
      return {f("histogram.csv", kHistogramHeader), f("occupation.csv", kOccupationHeader)};
    case Kind::waiting:
      return {f("dwells.csv", kDwellsHeader), f("passages.csv", kPassagesHeader),
              f("interior_passages.csv", kPassagesHeader), f("passage_ecdf.csv", kEcdfHeader)};
    case Kind::transit: return {f("transits.csv", kTransitsHeader)};
    case Kind::relax: return {f("relax.csv", kRelaxHeader)};
    case Kind::memory: return {f("memory.csv", kMemoryHeader)};
    case Kind::multilevel:
      return {f("dwells.csv", kLevelDwellsHeader), f("events.csv", kEventsHeader),
              f("occupation.csv", kLevelOccupationHeader)};
    default: return {};
  }
}

[[noreturn]] void config_fail(const ExperimentConfig& c, const std::string& message) {
  throw ConfigError(c.origin + ": " + message);
}

bool simulates(const ExperimentConfig& c) {
  return c.kind != Kind::sweep && c.n_trajectories > 0;
}

QbitParams qbit_params(const ExperimentConfig& c) {
  if (c.sigma && c.gamma) config_fail(c, "give either sigma or gamma, not both");
  if (c.gamma) return QbitParams(c.p, c.lambda, *c.gamma, c.omega);
  if (c.sigma) return QbitParams::from_sigma(c.p, *c.sigma, c.lambda, c.omega);
  config_fail(c, std::string("kind ") + to_string(c.kind) + " needs sigma or gamma");
}

double step_of(const ExperimentConfig& c, const QbitParams& q) {
  if (c.dt) return *c.dt;
  if (q.gamma() > 0.0) return q.tau_meas() / 50.0;
  return q.lambda() > 0.0 ? q.tau_therm() / 1000.0 : 1e-3;
}

// Well bottoms used as default transit and dwell levels.
std::pair<double, double> well_levels(const QbitParams& q) {
  const double s = q.sigma();
  return {q.p() * s, 1.0 - (1.0 - q.p()) * s};
}

void add_check(Artifacts& a, std::string name, double theory, std::string formula, FitReport fit) {
  a.checks.push_back({std::move(name), theory, std::move(formula), fit});
}

// Pooled time average from equal-length blocks of several trajectories.
FitReport pooled_blocks(const std::vector<double>& block_means) {
  return mean_estimate(block_means);
}

double mean_of(const std::vector<double>& v) {
  return v.empty() ? std::numeric_limits<double>::quiet_NaN()
                   : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

// Refits `batches` contiguous index groups separately; the spread of those
// estimates gives a standard error that respects the correlation between
// checkpoints of the same paths, which the residual-based error ignores.
// With `geometric` the curves hold logs and each batch fits exp(mean log).
double batch_fit_error(const std::vector<std::vector<double>>& curves, const std::vector<double>& times,
                       std::size_t batches, bool geometric = false) {
  if (curves.size() < 2 * batches) return std::numeric_limits<double>::quiet_NaN();
  std::vector<double> estimates;
  const std::size_t per = curves.size() / batches;
  for (std::size_t b = 0; b < batches; ++b) {
    std::vector<double> mean(times.size(), 0.0);
    for (std::size_t k = b * per; k < (b + 1) * per; ++k) {
      for (std::size_t j = 0; j < times.size(); ++j) mean[j] += curves[k][j] / static_cast<double>(per);
    }
    if (geometric) {
      for (double& v : mean) v = std::exp(v);
    }
    bool positive = std::all_of(mean.begin(), mean.end(), [](double v) { return v > 0.0; });
    if (!positive) return std::numeric_limits<double>::quiet_NaN();
    estimates.push_back(fit_decay_rate(times, mean).estimate);
  }
  return mean_estimate(estimates).std_error;
}

void counters_summary(Artifacts& a, std::uint64_t steps, std::uint64_t clamps) {
  a.summary["steps"] = steps;
  a.summary["clamps"] = clamps;
  a.summary["clamp_fraction"] = steps > 0 ? static_cast<double>(clamps) / static_cast<double>(steps) : 0.0;
}

// ---- trajectory -------------------------------------------------------------

Artifacts run_trajectory(const ExperimentConfig& c, std::ostream& log) {
  const QbitParams q = qbit_params(c);
  const double dt = step_of(c, q);
  const double q0 = c.q0.value_or(q.p());
  std::vector<Trajectory> trajs(c.n_trajectories);
  parallel_for(c.n_trajectories, c.workers, [&](std::uint64_t i) {
    trajs[i] = simulate_q(q, q0, c.horizon, dt, {c.seed, i}, c.record_stride);
  });
  Artifacts a;
  std::uint64_t steps = 0, clamps = 0;
  for (std::uint64_t i = 0; i < trajs.size(); ++i) {
    std::ostringstream os;
    write_csv(os, trajs[i]);
    a.files.emplace_back("trajectory_" + std::to_string(i) + ".csv", os.str());
    steps += trajs[i].counters.steps;
    clamps += trajs[i].counters.clamps;
  }
  counters_summary(a, steps, clamps);
  log << "trajectory: " << trajs.size() << " paths, " << steps << " steps\n";
  if (c.checks && steps > 0) {
    FitReport f;
    f.estimate = static_cast<double>(clamps) / static_cast<double>(steps);
    f.statistic = f.estimate;
    f.n = steps;
    f.check(0.0, 1e-3);
    add_check(a, "clamp_fraction", 0.0, "boundary clamps vanish as dt -> 0", f);
  }
  return a;
}

// ---- stationary -------------------------------------------------------------

Artifacts run_stationary(const ExperimentConfig& c, std::ostream& log) {
  const QbitParams q = qbit_params(c);
  const double dt = step_of(c, q);
  const TimeGrid grid = make_time_grid(q, c.horizon, dt);
  const double q0 = c.q0.value_or(q.p());
  const double block = std::min(20.0 * q.tau_therm(), c.horizon / 10.0);
  struct Result {
    std::vector<double> samples;
    std::vector<double> blocks;
    double fraction = 0.0;
    StepCounters counters;
  };
  std::vector<Result> results(c.n_trajectories);
  parallel_for(c.n_trajectories, c.workers, [&](std::uint64_t i) {
    Result& r = results[i];
    TimeAverage above([](double x) { return x > 0.5 ? 1.0 : 0.0; }, block);
    std::uint64_t k = 0;
    RandomStream rng(c.seed, i);
    r.counters = integrate_q(q, q0, grid, rng, [&](double t, double x) {
      above.observe(t, x);
      if (k++ % c.record_stride == 0) r.samples.push_back(x);
    });
    r.blocks = above.block_means();
    r.fraction = above.mean();
  });
  Artifacts a;
  std::vector<double> samples, blocks;
  Csv occ(kOccupationHeader);
  std::uint64_t steps = 0, clamps = 0;
  for (std::uint64_t i = 0; i < results.size(); ++i) {
    samples.insert(samples.end(), results[i].samples.begin(), results[i].samples.end());
    blocks.insert(blocks.end(), results[i].blocks.begin(), results[i].blocks.end());
    occ.row(i, results[i].fraction);
    steps += results[i].counters.steps;
    clamps += results[i].counters.clamps;
  }
  counters_summary(a, steps, clamps);
  const double sigma = q.sigma();
  auto density = [&](double x) { return stationary_density(x, q.p(), sigma); };
  const auto masses = density_bin_masses(density, c.bins);
  std::vector<double> counts(masses.size(), 0.0);
  for (double x : samples) counts[std::min<std::size_t>(static_cast<std::size_t>(x * c.bins), masses.size() - 1)] += 1.0;
  Csv hist(kHistogramHeader);
  for (std::size_t k = 0; k < masses.size(); ++k) {
    hist.row(static_cast<double>(k) / c.bins, static_cast<double>(k + 1) / c.bins,
             counts[k] / static_cast<double>(samples.size()), masses[k]);
  }
  a.files.emplace_back("histogram.csv", hist.str());
  a.files.emplace_back("occupation.csv", occ.str());
  a.summary["samples"] = samples.size();
  a.summary["stationary_mass_above_half"] = stationary_mass(0.5, 1.0, q.p(), sigma);
  log << "stationary: " << samples.size() << " histogram samples\n";
  if (c.checks) {
    add_check(a, "histogram_tv_distance", 0.0,
              "stationary density exp(-phi(Q)) / (Q(1-Q))^2, normalized",
              histogram_distance(samples, density, c.bins, 0.02));
    if (blocks.size() >= 2) {
      FitReport f = pooled_blocks(blocks);
      f.check(q.p(), 0.01);
      add_check(a, "occupation_above_half", q.p(), "stationary weight of Q near 1 equals p", f);
    }
  }
  return a;
}

// ---- waiting ----------------------------------------------------------------

Artifacts run_waiting(const ExperimentConfig& c, std::ostream& log) {
  const QbitParams q = qbit_params(c);
  const double dt = step_of(c, q);
  const TimeGrid grid = make_time_grid(q, c.horizon, dt);
  const auto [bottom_lo, bottom_hi] = well_levels(q);
  const double low = c.low.value_or(bottom_lo);
  const double high = c.high.value_or(bottom_hi);
  const double start = c.start.value_or(bottom_lo);
  const double target = c.target.value_or(0.99);
  const double inner_start = c.interior_start.value_or(0.3);
  const double inner_target = c.interior_target.value_or(0.9);
  const double q0 = c.q0.value_or(q.p());
  struct Result {
    std::vector<Dwell> dwells;
    std::vector<double> passages, interior;
    StepCounters counters;
  };
  std::vector<Result> results(c.n_trajectories);
  parallel_for(c.n_trajectories, c.workers, [&](std::uint64_t i) {
    DwellDetector dwell(low, high);
    FirstPassageDetector passage(start, target);
    FirstPassageDetector interior(inner_start, inner_target);
    RandomStream rng(c.seed, i);
    results[i].counters = integrate_q(q, q0, grid, rng, [&](double t, double x) {
      dwell.observe(t, x);
      passage.observe(t, x);
      interior.observe(t, x);
    });
    results[i].dwells = dwell.dwells();
    results[i].passages = passage.durations();
    results[i].interior = interior.durations();
  });
  Artifacts a;
  Csv dwells(kDwellsHeader);
  Csv passages(kPassagesHeader);
  Csv interior(kPassagesHeader);
  std::vector<double> near_zero, near_one, all_passages, all_interior;
  std::uint64_t steps = 0, clamps = 0;
  for (std::uint64_t i = 0; i < results.size(); ++i) {
    for (const auto& d : results[i].dwells) {
      dwells.row(i, to_string(d.state), d.duration);
      (d.state == WellState::near_zero ? near_zero : near_one).push_back(d.duration);
    }
    for (double d : results[i].passages) {
      passages.row(i, d);
      all_passages.push_back(d);
    }
    for (double d : results[i].interior) {
      interior.row(i, d);
      all_interior.push_back(d);
    }
    steps += results[i].counters.steps;
    clamps += results[i].counters.clamps;
  }
  counters_summary(a, steps, clamps);
  const double rate = q.lambda() * q.p() / target;
  std::vector<double> sorted = all_passages;
  std::sort(sorted.begin(), sorted.end());
  Csv ecdf(kEcdfHeader);
  const std::size_t every = std::max<std::size_t>(1, sorted.size() / 1000);
  for (std::size_t k = 0; k < sorted.size(); k += every) {
    ecdf.row(sorted[k], static_cast<double>(k + 1) / static_cast<double>(sorted.size()),
             -std::expm1(-rate * sorted[k]));
  }
  a.files.emplace_back("dwells.csv", dwells.str());
  a.files.emplace_back("passages.csv", passages.str());
  a.files.emplace_back("interior_passages.csv", interior.str());
  a.files.emplace_back("passage_ecdf.csv", ecdf.str());
  const double t0 = q.tau_therm() / (1.0 - q.p());
  const double t1 = q.tau_therm() / q.p();
  a.summary["levels"] = {{"low", low}, {"high", high}, {"start", start}, {"target", target},
                         {"interior_start", inner_start}, {"interior_target", inner_target}};
  a.summary["dwells_near_zero"] = near_zero.size();
  a.summary["dwells_near_one"] = near_one.size();
  a.summary["passages"] = all_passages.size();
  a.summary["interior_passages"] = all_interior.size();
  if (q.lambda() > 0.0 && q.gamma() > 0.0 && low < high) {
    a.summary["finite_sigma_T1"] = mean_waiting_time(low, high, q.p(), q.sigma(), q.gamma());
    a.summary["finite_sigma_T0"] = mean_waiting_time_down(high, low, q.p(), q.sigma(), q.gamma());
  }
  log << "waiting: " << near_zero.size() + near_one.size() << " dwells, " << all_passages.size()
      << " passages\n";
  if (!c.checks) return a;
  if (near_one.size() >= 2) {
    add_check(a, "mean_dwell_near_one", t0, "T0 = tau_therm / (1 - p)",
              mean_estimate(near_one).check_relative(t0, 0.05));
  }
  if (near_zero.size() >= 2) {
    add_check(a, "mean_dwell_near_zero", t1, "T1 = tau_therm / p",
              mean_estimate(near_zero).check_relative(t1, 0.05));
  }
  if (near_zero.size() >= 2 && near_one.size() >= 2) {
    const double ratio = (1.0 - q.p()) / q.p();
    add_check(a, "dwell_ratio", ratio, "T1 / T0 = (1 - p) / p",
              ratio_estimate(near_zero, near_one).check_relative(ratio, 0.07));
  }
  if (!all_passages.empty()) {
    add_check(a, "passage_time_ks", rate, "first passage law Exp(lambda p / Q_f)",
              ks_exponential(all_passages, rate));
  }
  if (!all_interior.empty() && q.gamma() > 0.0) {
    // Fresh paths started exactly at the interior level: a passage detected on
    // a sampled path starts one overshoot beyond it, which biases the weight
    // up by O(sqrt(dt)). Streams continue after the trajectory indices.
    const double cutoff = 5.0 * q.tau_meas() * std::log(1.0 / q.sigma());
    const TimeGrid short_grid = make_time_grid(q, cutoff, dt);
    const std::uint64_t fresh = std::max<std::uint64_t>(2000, all_interior.size());
    const bool upward = inner_target > inner_start;
    std::vector<char> hit(fresh, 0);
    parallel_for(fresh, c.workers, [&](std::uint64_t k) {
      RandomStream rng(c.seed, c.n_trajectories + k);
      integrate_q(q, inner_start, short_grid, rng, [&](double, double x) {
        if (upward ? x < inner_target : x > inner_target) return true;
        hit[k] = 1;
        return false;
      });
    });
    const auto fast = static_cast<std::size_t>(std::count(hit.begin(), hit.end(), 1));
    const double weight = inner_start / inner_target;
    FitReport f = fraction_estimate(fast, fresh);
    f.statistic = cutoff;
    f.check(weight, 3.0 * std::sqrt(weight * (1.0 - weight) / static_cast<double>(fresh)));
    add_check(a, "dirac_weight", weight, "weight of the instantaneous part Q_i / Q_f", f);
  }
  return a;
}

// ---- transit ----------------------------------------------------------------

Artifacts run_transit(const ExperimentConfig& c, std::ostream& log) {
  const QbitParams q = qbit_params(c);
  const double dt = step_of(c, q);
  const TimeGrid grid = make_time_grid(q, c.horizon, dt);
  const auto [bottom_lo, bottom_hi] = well_levels(q);
  const double lo = c.low.value_or(bottom_lo);
  const double hi = c.high.value_or(bottom_hi);
  const double q0 = c.q0.value_or(q.p());
  struct Result {
    std::vector<Transit> transits;
    StepCounters counters;
  };
  std::vector<Result> results(c.n_trajectories);
  parallel_for(c.n_trajectories, c.workers, [&](std::uint64_t i) {
    TransitDetector det(lo, hi);
    RandomStream rng(c.seed, i);
    results[i].counters = integrate_q(q, q0, grid, rng, [&](double t, double x) { det.observe(t, x); });
    results[i].transits = det.transits();
  });
  Artifacts a;
  Csv csv(kTransitsHeader);
  std::vector<double> up, down, all;
  std::uint64_t steps = 0, clamps = 0;
  for (std::uint64_t i = 0; i < results.size(); ++i) {
    for (const auto& t : results[i].transits) {
      csv.row(i, to_string(t.direction), t.duration);
      (t.direction == Direction::up ? up : down).push_back(t.duration);
      all.push_back(t.duration);
    }
    steps += results[i].counters.steps;
    clamps += results[i].counters.clamps;
  }
  counters_summary(a, steps, clamps);
  a.files.emplace_back("transits.csv", csv.str());
  const double theory = mean_transition_time(lo, hi, q.p(), q.sigma(), q.gamma());
  a.summary["levels"] = {{"low", lo}, {"high", hi}};
  a.summary["transits_up"] = up.size();
  a.summary["transits_down"] = down.size();
  a.summary["quadrature_mean_transit"] = theory;
  a.summary["asymptotic_mean_transit"] = transition_time_refined(q.p(), q.sigma(), q.gamma());
  log << "transit: " << all.size() << " transits\n";
  if (!c.checks) return a;
  if (all.size() >= 2) {
    add_check(a, "mean_transit", theory, "2 tau_meas int l(Q) / (Q(1-Q)) dQ (quadrature)",
              mean_estimate(all).check_relative(theory, 0.10));
  }
  if (up.size() >= 2 && down.size() >= 2) {
    const FitReport mu = mean_estimate(up);
    const FitReport md = mean_estimate(down);
    FitReport f;
    f.estimate = mu.estimate - md.estimate;
    f.std_error = std::hypot(mu.std_error, md.std_error);
    f.n = up.size() + down.size();
    f.statistic = f.std_error > 0.0 ? f.estimate / f.std_error : 0.0;
    f.check(0.0, 3.0 * f.std_error);
    add_check(a, "transit_direction_symmetry", 0.0, "mean transit is independent of direction", f);
  }
  return a;
}

// ---- relax ------------------------------------------------------------------

Artifacts run_relax(const ExperimentConfig& c, std::ostream& log) {
  const QbitParams q = qbit_params(c);
  const double dt = step_of(c, q);
  const TimeGrid grid = make_time_grid(q, c.horizon, dt);
  const double q0 = c.q0.value_or(0.0);
  const std::uint64_t points = grid.steps / c.record_stride + 1;
  // Per-trajectory Q at checkpoints, then ensemble moments in index order.
  std::vector<std::vector<double>> paths(c.n_trajectories);
  parallel_for(c.n_trajectories, c.workers, [&](std::uint64_t i) {
    auto& path = paths[i];
    path.reserve(points);
    std::uint64_t k = 0;
    RandomStream rng(c.seed, i);
    integrate_q(q, q0, grid, rng, [&](double, double x) {
      if (k++ % c.record_stride == 0) path.push_back(x);
    });
  });
  Artifacts a;
  Csv csv(kRelaxHeader);
  std::vector<double> times, means;
  std::vector<std::size_t> kept;
  const double n = static_cast<double>(paths.size());
  const double sign = q.p() >= q0 ? 1.0 : -1.0;
  for (std::uint64_t j = 0; j < points; ++j) {
    double s = 0.0, ss = 0.0;
    for (const auto& path : paths) {
      const double g = q.p() - path[j];
      s += g;
      ss += g * g;
    }
    const double m = s / n;
    const double se = paths.size() > 1 ? std::sqrt(std::max(0.0, ss / n - m * m) / (n - 1.0)) : 0.0;
    const double t = static_cast<double>(j * c.record_stride) * dt;
    csv.row(t, m, se);
    if (sign * m > 0.0) {
      times.push_back(t);
      means.push_back(sign * m);
      kept.push_back(j);
    }
  }
  a.files.emplace_back("relax.csv", csv.str());
  a.summary["trajectories"] = paths.size();
  a.summary["checkpoints"] = points;
  log << "relax: " << paths.size() << " paths, " << points << " checkpoints\n";
  if (c.checks && times.size() >= 10) {
    FitReport f = fit_decay_rate(times, means);
    std::vector<std::vector<double>> curves(paths.size());
    for (std::size_t i = 0; i < paths.size(); ++i) {
      for (std::size_t j : kept) curves[i].push_back(sign * (q.p() - paths[i][j]));
    }
    const double batch_se = batch_fit_error(curves, times, 20);
    if (std::isfinite(batch_se)) f.std_error = batch_se;
    add_check(a, "relaxation_rate", q.lambda(), "E[p - Q_t] = (p - Q_0) exp(-lambda t)",
              f.check_relative(q.lambda(), 0.02));
  }
  return a;
}

// ---- memory -----------------------------------------------------------------

Artifacts run_memory(const ExperimentConfig& c, std::ostream& log) {
  const QbitParams q = qbit_params(c);
  const double dt = step_of(c, q);
  const double q0 = c.q0.value_or(q.p() * q.sigma());
  const double q0p = c.q0_prime.value_or(2.0 * q0);
  std::vector<PairedTrajectory> runs(c.n_trajectories);
  parallel_for(c.n_trajectories, c.workers, [&](std::uint64_t i) {
    runs[i] = simulate_paired(q, q0, q0p, c.horizon, dt, {c.seed, i}, c.record_stride);
  });
  Artifacts a;
  const std::size_t points = runs.front().times.size();
  Csv csv(kMemoryHeader);
  std::vector<double> times, expmeans;
  std::uint64_t violations = 0, nonpositive = 0;
  for (const auto& r : runs) violations += r.order_violations;
  double worst_rise = -std::numeric_limits<double>::infinity();
  const double n = static_cast<double>(runs.size());
  for (std::size_t j = 0; j < points; ++j) {
    double logs = 0.0, gaps = 0.0, gaps2 = 0.0;
    std::size_t positive = 0;
    for (const auto& r : runs) {
      const double g = r.gaps[j];
      gaps += g;
      gaps2 += g * g;
      if (g > 0.0) {
        logs += std::log(g);
        ++positive;
      } else {
        ++nonpositive;
      }
    }
    const double mean_log = positive > 0 ? logs / static_cast<double>(positive) : std::nan("");
    const double mean_gap = gaps / n;
    const double se = n > 1 ? std::sqrt(std::max(0.0, gaps2 / n - mean_gap * mean_gap) / (n - 1.0)) : 0.0;
    csv.row(runs.front().times[j], mean_log, mean_gap, se);
    if (positive == runs.size()) {
      times.push_back(runs.front().times[j]);
      expmeans.push_back(std::exp(mean_log));
    }
    if (j > 0) {
      // Increment of the ensemble-mean gap in units of its paired standard error.
      double d = 0.0, d2 = 0.0;
      for (const auto& r : runs) {
        const double inc = r.gaps[j] - r.gaps[j - 1];
        d += inc;
        d2 += inc * inc;
      }
      const double md = d / n;
      const double sd = n > 1 ? std::sqrt(std::max(0.0, d2 / n - md * md) / (n - 1.0)) : 0.0;
      worst_rise = std::max(worst_rise, sd > 0.0 ? md / sd : (md > 0.0 ? INFINITY : 0.0));
    }
  }
  a.files.emplace_back("memory.csv", csv.str());
  a.summary["order_violations"] = violations;
  a.summary["nonpositive_recorded_gaps"] = nonpositive;
  log << "memory: " << runs.size() << " pairs\n";
  if (!c.checks) return a;
  const double rate = 0.5 * q.gamma() * q.gamma();
  if (times.size() >= 10) {
    // Fitting exp(mean log gap) makes the decay rate the slope of the mean log gap.
    FitReport f = fit_decay_rate(times, expmeans);
    std::vector<std::vector<double>> curves(runs.size());
    for (std::size_t i = 0; i < runs.size(); ++i) {
      for (std::size_t j = 0; j < points; ++j) {
        if (std::binary_search(times.begin(), times.end(), runs[i].times[j])) {
          curves[i].push_back(std::log(runs[i].gaps[j]));
        }
      }
    }
    const double batch_se = batch_fit_error(curves, times, 20, true);
    if (std::isfinite(batch_se)) f.std_error = batch_se;
    add_check(a, "log_gap_decay_rate", rate, "d E[log gap] / dt = -gamma^2 / 2",
              f.check_relative(rate, 0.10));
  }
  FitReport order;
  order.estimate = static_cast<double>(violations + nonpositive);
  order.statistic = order.estimate;
  order.n = runs.size();
  order.check(0.0, 0.5);
  add_check(a, "gap_positivity", 0.0, "paired paths never cross", order);
  if (points >= 2) {
    FitReport sup;
    sup.estimate = worst_rise;
    sup.statistic = worst_rise;
    sup.n = runs.size();
    sup.pass = worst_rise <= 3.0;
    sup.target = 0.0;
    sup.tolerance = 3.0;
    add_check(a, "gap_supermartingale", 0.0,
              "largest rise of the mean gap between checkpoints, in standard errors", sup);
  }
  return a;
}

// ---- multilevel -------------------------------------------------------------

MultiLevelModel model_of(const ExperimentConfig& c) {
  if (c.model.empty()) config_fail(c, "kind multilevel needs a model");
  if (c.model == "two_level") {
    const QbitParams q = qbit_params(c);
    return MultiLevelModel::two_level(q.p(), q.lambda(), q.gamma());
  }
  return load_model(c.model);
}

Artifacts run_multilevel(const ExperimentConfig& c, std::ostream& log) {
  const MultiLevelModel model = model_of(c);
  const double dt = c.dt.value_or(multilevel_step_limit(model) / 50.0);
  const int n = model.levels();
  Eigen::VectorXd q0 = Eigen::VectorXd::Zero(n);
  Eigen::Index top = 0;
  model.boltzmann.maxCoeff(&top);
  q0(top) = 1.0;
  MultiLevelOptions options;
  options.record_stride = c.record_stride;
  std::vector<MultiLevelTrajectory> runs(c.n_trajectories);
  parallel_for(c.n_trajectories, c.workers, [&](std::uint64_t i) {
    runs[i] = simulate_multilevel(model, q0, c.horizon, dt, {c.seed, i}, options);
  });
  Artifacts a;
  Csv dwells(kLevelDwellsHeader);
  Csv events(kEventsHeader);
  std::vector<std::vector<double>> by_level(static_cast<std::size_t>(n));
  std::vector<double> label_time(static_cast<std::size_t>(n), 0.0);
  double total = 0.0, classified = 0.0;
  std::uint64_t steps = 0, clips = 0;
  for (std::uint64_t i = 0; i < runs.size(); ++i) {
    const auto& r = runs[i];
    for (const auto& d : r.dwells) {
      dwells.row(i, d.level, d.duration);
      by_level[static_cast<std::size_t>(d.level)].push_back(d.duration);
    }
    for (const auto& e : r.events) events.row(i, e.time, e.level);
    for (int k = 0; k < n; ++k) label_time[static_cast<std::size_t>(k)] += r.label_time[static_cast<std::size_t>(k)];
    total += r.total_time;
    classified += r.classified_time;
    steps += r.counters.steps;
    clips += r.counters.clips;
    std::ostringstream os;
    write_csv(os, r);
    a.files.emplace_back("trajectory_" + std::to_string(i) + ".csv", os.str());
  }
  const Eigen::VectorXd dwell_theory = predicted_dwell_times(model);
  const Eigen::MatrixXd collapse = predicted_collapse_rates(model);
  Csv occ(kLevelOccupationHeader);
  for (int k = 0; k < n; ++k) {
    const auto ku = static_cast<std::size_t>(k);
    occ.row(k, total > 0.0 ? label_time[ku] / total : 0.0, model.boltzmann(k), mean_of(by_level[ku]),
            dwell_theory(k));
  }
  a.files.emplace_back("dwells.csv", dwells.str());
  a.files.emplace_back("events.csv", events.str());
  a.files.emplace_back("occupation.csv", occ.str());
  a.summary["steps"] = steps;
  a.summary["clips"] = clips;
  a.summary["classified_fraction"] = total > 0.0 ? classified / total : 0.0;
  a.summary["collapse_rates"] = json::array();
  for (int r = 0; r < n; ++r) {
    json row = json::array();
    for (int k = 0; k < n; ++k) row.push_back(collapse(r, k));
    a.summary["collapse_rates"].push_back(row);
  }
  log << "multilevel: " << runs.size() << " paths, " << steps << " steps\n";
  if (!c.checks) return a;
  for (int k = 0; k < n; ++k) {
    const auto ku = static_cast<std::size_t>(k);
    const std::string suffix = "_level_" + std::to_string(k);
    if (by_level[ku].size() >= 2 && std::isfinite(dwell_theory(k))) {
      add_check(a, "mean_dwell" + suffix, dwell_theory(k), "T_c = 1 / sum_{a != c} L_ac",
                mean_estimate(by_level[ku]).check_relative(dwell_theory(k), 0.10));
    }
    if (total > 0.0) {
      FitReport f;
      f.estimate = label_time[ku] / total;
      f.statistic = f.estimate;
      f.n = runs.size();
      f.check(model.boltzmann(k), 0.03);
      add_check(a, "occupation" + suffix, model.boltzmann(k), "Boltzmann weight p_c", f);
    }
  }
  if (steps > 0) {
    FitReport f;
    f.estimate = static_cast<double>(clips) / static_cast<double>(steps);
    f.statistic = f.estimate;
    f.n = steps;
    f.check(0.0, 1e-3);
    add_check(a, "clip_fraction", 0.0, "negative clips are rare", f);
  }
  return a;
}

// ---- sweep ------------------------------------------------------------------

double sweep_gamma(const ExperimentConfig& c) {
  if (c.gamma) return *c.gamma;
  if (c.sigma) return std::sqrt(2.0 * c.lambda / *c.sigma);
  config_fail(c, "kind sweep needs gamma (or sigma and lambda to derive it)");
}

Artifacts run_sweep(const ExperimentConfig& c, std::ostream& log) {
  const double gamma = sweep_gamma(c);
  const double tau_meas = 1.0 / (gamma * gamma);
  Artifacts a;
  Csv csv("sigma,lambda,tau_meas,transition_integral,i0,mean_transit,asymptotic_transit,reference_4_over_gamma2_log");
  std::vector<double> logs, taus;
  double last_gap = std::numeric_limits<double>::quiet_NaN();
  double smallest = std::numeric_limits<double>::infinity();
  for (double sigma : c.sigmas) {
    const double lo = c.p * sigma;
    const double hi = 1.0 - (1.0 - c.p) * sigma;
    const double integral = transition_integral(lo, hi, c.p, sigma);
    const double i0 = transition_time_i0(lo, hi);
    const double mean = 2.0 * tau_meas * integral;
    csv.row(sigma, 0.5 * sigma * gamma * gamma, tau_meas, integral, i0, mean,
            transition_time_refined(c.p, sigma, gamma), -4.0 * tau_meas * std::log(sigma));
    logs.push_back(std::log(1.0 / sigma));
    taus.push_back(mean);
    if (sigma < smallest) {
      smallest = sigma;
      last_gap = integral - i0;
    }
  }
  a.files.emplace_back("sweep.csv", csv.str());
  a.summary["gamma"] = gamma;
  a.summary["appendix_constant"] = appendix_constant();
  log << "sweep: " << c.sigmas.size() << " sigma values\n";
  if (!c.checks || c.sigmas.size() < 2) return a;
  const double lm = mean_of(logs);
  const double tm = mean_of(taus);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t k = 0; k < logs.size(); ++k) {
    sxx += (logs[k] - lm) * (logs[k] - lm);
    sxy += (logs[k] - lm) * (taus[k] - tm);
  }
  FitReport slope;
  slope.estimate = sxy / sxx;
  slope.statistic = slope.estimate / (4.0 * tau_meas);
  slope.n = logs.size();
  slope.check_relative(4.0 * tau_meas, 0.05);
  add_check(a, "transit_log_slope", 4.0 * tau_meas, "tau ~ -(4 / gamma^2) log sigma", slope);
  FitReport gap;
  gap.estimate = last_gap;
  gap.statistic = smallest;
  gap.n = 1;
  const double two_j = 2.0 * appendix_constant();
  gap.check(two_j, 0.02);
  add_check(a, "transition_integral_offset", two_j, "I - I0 -> 2 J at the smallest sigma", gap);
  return a;
}

}  // namespace

void validate(const ExperimentConfig& c) {
  if (!(c.p > 0.0 && c.p < 1.0)) config_fail(c, "p must lie in (0, 1)");
  if (c.record_stride == 0) config_fail(c, "record_stride must be positive");
  switch (c.kind) {
    case Kind::sweep: {
      if (c.sigmas.empty()) config_fail(c, "kind sweep needs a sigmas list");
      const double gamma = sweep_gamma(c);
      if (!(gamma > 0.0) || !std::isfinite(gamma)) config_fail(c, "gamma must be positive");
      return;
    }
    case Kind::multilevel: {
      const MultiLevelModel model = model_of(c);
      if (c.n_trajectories == 0) return;
      const double dt = c.dt.value_or(multilevel_step_limit(model) / 50.0);
      if (!(c.horizon >= dt)) config_fail(c, "horizon must cover at least one step");
      if (dt >= multilevel_step_limit(model)) {
        config_fail(c, "dt is not below the fastest model time scale");
      }
      return;
    }
    default:
      break;
  }
  const QbitParams q = qbit_params(c);
  if (c.q0 && !(*c.q0 >= 0.0 && *c.q0 <= 1.0)) config_fail(c, "q0 must lie in [0, 1]");
  if (c.q0_prime && !(*c.q0_prime >= 0.0 && *c.q0_prime <= 1.0)) config_fail(c, "q0_prime must lie in [0, 1]");
  if (!simulates(c)) return;
  const double dt = step_of(c, q);
  make_time_grid(q, c.horizon, dt);
  const bool needs_sigma = c.kind == Kind::waiting || c.kind == Kind::transit ||
                           c.kind == Kind::stationary || c.kind == Kind::memory;
  if (needs_sigma && !(q.gamma() > 0.0)) config_fail(c, "this kind needs gamma > 0");
  if (c.kind == Kind::waiting || c.kind == Kind::transit) {
    const auto [lo, hi] = well_levels(q);
    const double low = c.low.value_or(lo), high = c.high.value_or(hi);
    if (!(low > 0.0 && low < high && high < 1.0)) config_fail(c, "thresholds need 0 < low < high < 1");
    if (c.kind == Kind::waiting) {
      if (c.start.value_or(lo) == c.target.value_or(0.99)) config_fail(c, "start and target must differ");
      if (c.interior_start.value_or(0.3) == c.interior_target.value_or(0.9)) {
        config_fail(c, "interior_start and interior_target must differ");
      }
    }
  }
  if (c.kind == Kind::memory) {
    const double q0 = c.q0.value_or(q.p() * q.sigma());
    if (c.q0_prime.value_or(2.0 * q0) == q0) config_fail(c, "q0 and q0_prime must differ");
  }
  if (c.kind == Kind::stationary && c.horizon < 10.0 * dt) config_fail(c, "horizon too short");
}

Artifacts compute(const ExperimentConfig& c, std::ostream& log) {
  if (!simulates(c) && c.kind != Kind::sweep) {
    Artifacts a;
    a.files = empty_files(c.kind);
    a.note = "nothing to run";
    log << "nothing to run: n_trajectories is 0\n";
    return a;
  }
  switch (c.kind) {
    case Kind::trajectory: return run_trajectory(c, log);
    case Kind::stationary: return run_stationary(c, log);
    case Kind::waiting: return run_waiting(c, log);
    case Kind::transit: return run_transit(c, log);
    case Kind::relax: return run_relax(c, log);
    case Kind::memory: return run_memory(c, log);
    case Kind::multilevel: return run_multilevel(c, log);
    case Kind::sweep: return run_sweep(c, log);
  }
  return {};
}

}  // namespace qjump::app
