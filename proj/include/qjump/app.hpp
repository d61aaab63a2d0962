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

// Batch front end behind the qjump command line tool: experiment configs,
// runs that emit CSV data plus report.json and manifest.json, and replays.

#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "qjump/error.hpp"
#include "qjump/statistics.hpp"

namespace qjump::app {

enum ExitCode : int {
  kOk = 0,
  kAcceptanceFailure = 1,
  kConfigError = 2,
  kNumericalFailure = 3,
  kReplayMismatch = 4,
};

inline constexpr int kReportSchemaVersion = 1;

// Config problems; the message carries origin:line:column when known.
class ConfigError : public Error {
 public:
  using Error::Error;
};

enum class Kind { trajectory, stationary, waiting, transit, relax, memory, multilevel, sweep };

const char* to_string(Kind kind) noexcept;
std::optional<Kind> parse_kind(std::string_view name) noexcept;

struct ExperimentConfig {
  Kind kind = Kind::trajectory;
  double p = 0.6;
  double lambda = 1.0;
  double omega = 0.0;
  std::optional<double> sigma;
  std::optional<double> gamma;
  std::optional<double> dt;
  double horizon = 0.0;
  std::uint64_t n_trajectories = 1;
  std::uint64_t seed = 0;
  std::uint64_t record_stride = 1;
  std::optional<double> q0;
  std::optional<double> q0_prime;
  // Thresholds; unset ones take per-kind defaults.
  std::optional<double> low, high, start, target;
  std::optional<double> interior_start, interior_target;
  std::vector<double> sigmas;
  std::string model;  // path resolved against the config directory, or "two_level"
  std::string output = "qjump-out";
  unsigned workers = 0;  // 0: hardware concurrency
  int bins = 50;
  bool checks = true;

  std::string text;    // the document as read
  std::string origin;  // file name used in messages
  std::string base_dir;
};

ExperimentConfig parse_config(const std::string& text, const std::string& origin = "<config>",
                              const std::string& base_dir = ".");
ExperimentConfig load_config(const std::string& path);

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> workers;
  std::optional<std::string> output;
};

void apply(ExperimentConfig& config, const Overrides& overrides);

struct Check {
  std::string name;
  double theory;
  std::string formula;
  FitReport fit;
};

struct Artifacts {
  std::vector<std::pair<std::string, std::string>> files;  // CSV name, contents
  std::vector<Check> checks;
  nlohmann::json summary = nlohmann::json::object();
  std::string note;
};

// Validates the config against every module precondition without running
// anything expensive. Throws ConfigError (or another qjump::Error).
void validate(const ExperimentConfig& config);

// Runs the experiment in memory. `log` receives progress lines.
Artifacts compute(const ExperimentConfig& config, std::ostream& log);

// validate + compute + write CSVs, report.json and manifest.json into
// config.output. Returns the exit code; diagnostics go to `log`.
int run(const ExperimentConfig& config, std::ostream& log);

// Reruns a manifest and compares the CSV outputs byte for byte.
int replay(const std::string& manifest_path, const Overrides& overrides, std::ostream& log);

std::string sha256_hex(std::string_view data);
std::string sha256_file(const std::string& path);

// Runs body(i) for i in [0, count) on up to `workers` threads (0: all cores).
// Exceptions are rethrown for the lowest failing index.
void parallel_for(std::uint64_t count, unsigned workers,
                  const std::function<void(std::uint64_t)>& body);

}  // namespace qjump::app
