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
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "qjump/app.hpp"

namespace qjump::app {

namespace {

class Reader {
 public:
  explicit Reader(std::string origin) : origin_(std::move(origin)) {}

  [[noreturn]] void fail(const YAML::Mark& mark, const std::string& message) const {
    std::ostringstream os;
    os << origin_;
    if (!mark.is_null()) os << ":" << mark.line + 1 << ":" << mark.column + 1;
    os << ": " << message;
    throw ConfigError(os.str());
  }

  double number(const YAML::Node& node, const std::string& key) const {
    if (!node.IsScalar()) fail(node.Mark(), key + " must be a number");
    double v = 0.0;
    try {
      v = node.as<double>();
    } catch (const YAML::Exception&) {
      fail(node.Mark(), key + " must be a number, got '" + node.Scalar() + "'");
    }
    if (!std::isfinite(v)) fail(node.Mark(), key + " must be finite");
    return v;
  }

  std::uint64_t integer(const YAML::Node& node, const std::string& key) const {
    const double v = number(node, key);
    if (v < 0.0 || v != std::floor(v) || v > 9.0e15) {
      fail(node.Mark(), key + " must be a non-negative integer");
    }
    return static_cast<std::uint64_t>(v);
  }

  std::string text(const YAML::Node& node, const std::string& key) const {
    if (!node.IsScalar()) fail(node.Mark(), key + " must be a string");
    return node.Scalar();
  }

  bool boolean(const YAML::Node& node, const std::string& key) const {
    if (!node.IsScalar()) fail(node.Mark(), key + " must be true or false");
    try {
      return node.as<bool>();
    } catch (const YAML::Exception&) {
      fail(node.Mark(), key + " must be true or false");
    }
  }

 private:
  std::string origin_;
};

const std::set<std::string> kTopKeys = {
    "kind",  "p",       "lambda",  "omega",  "sigma", "gamma",  "dt",     "horizon",
    "n_trajectories", "seed", "record_stride", "q0", "q0_prime", "thresholds", "sigmas",
    "model", "output",  "workers", "bins",   "checks"};

const std::set<std::string> kThresholdKeys = {"low",   "high",           "start",
                                              "target", "interior_start", "interior_target"};

}  // namespace

const char* to_string(Kind kind) noexcept {
  switch (kind) {
    case Kind::trajectory: return "trajectory";
    case Kind::stationary: return "stationary";
    case Kind::waiting: return "waiting";
    case Kind::transit: return "transit";
    case Kind::relax: return "relax";
    case Kind::memory: return "memory";
    case Kind::multilevel: return "multilevel";
    case Kind::sweep: return "sweep";
  }
  return "unknown";
}

std::optional<Kind> parse_kind(std::string_view name) noexcept {
  for (Kind k : {Kind::trajectory, Kind::stationary, Kind::waiting, Kind::transit, Kind::relax,
                 Kind::memory, Kind::multilevel, Kind::sweep}) {
    if (name == to_string(k)) return k;
  }
  return std::nullopt;
}

ExperimentConfig parse_config(const std::string& text, const std::string& origin,
                              const std::string& base_dir) {
  Reader r(origin);
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    r.fail(e.mark, e.msg);
  }
  if (!root.IsMap()) r.fail(root.Mark(), "config must be a mapping of keys to values");

  ExperimentConfig c;
  c.text = text;
  c.origin = origin;
  c.base_dir = base_dir;
  for (const auto& kv : root) {
    const std::string key = kv.first.Scalar();
    if (kTopKeys.count(key) == 0) r.fail(kv.first.Mark(), "unknown key '" + key + "'");
  }
  const YAML::Node kind = root["kind"];
  if (!kind) r.fail(root.Mark(), "missing key 'kind'");
  const auto parsed = parse_kind(r.text(kind, "kind"));
  if (!parsed) r.fail(kind.Mark(), "unknown kind '" + kind.Scalar() + "'");
  c.kind = *parsed;

  auto opt_number = [&](const char* key, std::optional<double>& out) {
    if (const YAML::Node n = root[key]) out = r.number(n, key);
  };
  if (const YAML::Node n = root["p"]) c.p = r.number(n, "p");
  if (const YAML::Node n = root["lambda"]) c.lambda = r.number(n, "lambda");
  if (const YAML::Node n = root["omega"]) c.omega = r.number(n, "omega");
  opt_number("sigma", c.sigma);
  opt_number("gamma", c.gamma);
  opt_number("dt", c.dt);
  opt_number("q0", c.q0);
  opt_number("q0_prime", c.q0_prime);
  if (const YAML::Node n = root["horizon"]) c.horizon = r.number(n, "horizon");
  if (const YAML::Node n = root["n_trajectories"]) c.n_trajectories = r.integer(n, "n_trajectories");
  if (const YAML::Node n = root["seed"]) c.seed = r.integer(n, "seed");
  if (const YAML::Node n = root["record_stride"]) c.record_stride = r.integer(n, "record_stride");
  if (const YAML::Node n = root["workers"]) {
    const auto w = r.integer(n, "workers");
    if (w > 4096) r.fail(n.Mark(), "workers must be at most 4096");
    c.workers = static_cast<unsigned>(w);
  }
  if (const YAML::Node n = root["bins"]) {
    const auto b = r.integer(n, "bins");
    if (b < 10 || b > 100000) r.fail(n.Mark(), "bins must lie in [10, 100000]");
    c.bins = static_cast<int>(b);
  }
  if (const YAML::Node n = root["checks"]) c.checks = r.boolean(n, "checks");
  if (const YAML::Node n = root["output"]) c.output = r.text(n, "output");
  if (const YAML::Node n = root["model"]) {
    c.model = r.text(n, "model");
    if (c.model != "two_level") {
      std::filesystem::path path(c.model);
      if (path.is_relative()) path = std::filesystem::path(base_dir) / path;
      if (!std::filesystem::exists(path)) r.fail(n.Mark(), "model file not found: " + path.string());
      c.model = std::filesystem::absolute(path).lexically_normal().string();
    }
  }
  if (const YAML::Node n = root["sigmas"]) {
    if (!n.IsSequence()) r.fail(n.Mark(), "sigmas must be a list");
    for (const auto& v : n) {
      const double s = r.number(v, "sigmas entry");
      if (!(s > 0.0)) r.fail(v.Mark(), "sigmas entries must be positive");
      c.sigmas.push_back(s);
    }
  }
  if (const YAML::Node t = root["thresholds"]) {
    if (!t.IsMap()) r.fail(t.Mark(), "thresholds must be a mapping");
    for (const auto& kv : t) {
      const std::string key = kv.first.Scalar();
      if (kThresholdKeys.count(key) == 0) r.fail(kv.first.Mark(), "unknown threshold '" + key + "'");
      const double v = r.number(kv.second, key);
      if (!(v > 0.0 && v < 1.0)) r.fail(kv.second.Mark(), "threshold " + key + " must lie in (0, 1)");
      if (key == "low") c.low = v;
      else if (key == "high") c.high = v;
      else if (key == "start") c.start = v;
      else if (key == "target") c.target = v;
      else if (key == "interior_start") c.interior_start = v;
      else c.interior_target = v;
    }
  }
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path + ": cannot open config file");
  std::stringstream ss;
  ss << in.rdbuf();
  const auto dir = std::filesystem::absolute(path).parent_path().string();
  return parse_config(ss.str(), path, dir);
}

void apply(ExperimentConfig& config, const Overrides& overrides) {
  if (overrides.seed) config.seed = *overrides.seed;
  if (overrides.workers) config.workers = *overrides.workers;
  if (overrides.output) config.output = *overrides.output;
}

}  // namespace qjump::app
