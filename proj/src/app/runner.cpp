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
#include <atomic>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <sstream>
#include <thread>

#include <openssl/evp.h>

#include "qjump/app.hpp"
#include "qjump/version.hpp"

namespace qjump::app {

namespace fs = std::filesystem;
using nlohmann::json;

std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw Error("SHA-256 computation failed");
  }
  std::ostringstream os;
  for (unsigned int i = 0; i < len; ++i) {
    os << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(digest[i]);
  }
  return os.str();
}

std::string sha256_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return sha256_hex(ss.str());
}

void parallel_for(std::uint64_t count, unsigned workers,
                  const std::function<void(std::uint64_t)>& body) {
  if (count == 0) return;
  unsigned threads = workers > 0 ? workers : std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::uint64_t>(threads, count));
  std::vector<std::exception_ptr> errors(count);
  std::atomic<std::uint64_t> next{0};
  auto worker = [&] {
    for (std::uint64_t i = next++; i < count; i = next++) {
      try {
        body(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

namespace {

std::size_t count_rows(const std::string& csv) {
  std::size_t rows = 0;
  std::istringstream in(csv);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line[0] != '#') ++rows;
  }
  return rows > 0 ? rows - 1 : 0;  // minus the header
}

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json params_echo(const ExperimentConfig& c) {
  json j = {{"kind", to_string(c.kind)},         {"p", c.p},
            {"lambda", c.lambda},                {"omega", c.omega},
            {"horizon", c.horizon},              {"n_trajectories", c.n_trajectories},
            {"seed", c.seed},                    {"record_stride", c.record_stride},
            {"bins", c.bins},                    {"checks", c.checks}};
  auto opt = [&](const char* key, const std::optional<double>& v) {
    j[key] = v ? json(*v) : json(nullptr);
  };
  opt("sigma", c.sigma);
  opt("gamma", c.gamma);
  opt("dt", c.dt);
  opt("q0", c.q0);
  opt("q0_prime", c.q0_prime);
  j["thresholds"] = json::object();
  auto thr = [&](const char* key, const std::optional<double>& v) {
    if (v) j["thresholds"][key] = *v;
  };
  thr("low", c.low);
  thr("high", c.high);
  thr("start", c.start);
  thr("target", c.target);
  thr("interior_start", c.interior_start);
  thr("interior_target", c.interior_target);
  j["sigmas"] = c.sigmas;
  j["model"] = c.model.empty() ? json(nullptr) : json(c.model);
  return j;
}

json report_json(const ExperimentConfig& c, const Artifacts& a, bool& all_pass) {
  json checks = json::array();
  all_pass = true;
  for (const auto& chk : a.checks) {
    json fit = chk.fit;
    checks.push_back({{"name", chk.name},
                      {"theory", finite_or_null(chk.theory)},
                      {"empirical", finite_or_null(chk.fit.estimate)},
                      {"stderr", finite_or_null(chk.fit.std_error)},
                      {"provenance", {{"formula", chk.formula}}},
                      {"fit", fit},
                      {"pass", chk.fit.pass}});
    all_pass = all_pass && chk.fit.pass;
  }
  json report = {{"schema_version", kReportSchemaVersion},
                 {"qjump_version", kVersion},
                 {"kind", to_string(c.kind)},
                 {"config", params_echo(c)},
                 {"summary", a.summary},
                 {"checks", checks},
                 {"all_pass", all_pass}};
  if (!a.note.empty()) report["note"] = a.note;
  return report;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
  if (!out) throw Error("write failed for " + path.string());
}

// Runs validate + compute with the exit-code mapping shared by run and replay.
int guarded_compute(const ExperimentConfig& config, std::ostream& log, Artifacts& out) {
  try {
    validate(config);
  } catch (const Error& e) {
    log << "qjump: config error: " << e.what() << "\n";
    return kConfigError;
  }
  try {
    out = compute(config, log);
  } catch (const Error& e) {
    log << "qjump: numerical failure: " << e.what() << "\n";
    return kNumericalFailure;
  }
  return kOk;
}

// First line (1-based, counting the header) where the two texts differ.
std::size_t first_divergent_row(const std::string& a, const std::string& b) {
  std::istringstream ia(a), ib(b);
  std::string la, lb;
  std::size_t row = 0;
  while (true) {
    ++row;
    const bool ga = static_cast<bool>(std::getline(ia, la));
    const bool gb = static_cast<bool>(std::getline(ib, lb));
    if (!ga && !gb) return 0;
    if (ga != gb || la != lb) return row;
  }
}

}  // namespace

int run(const ExperimentConfig& config, std::ostream& log) {
  Artifacts a;
  if (const int code = guarded_compute(config, log, a); code != kOk) return code;

  const fs::path dir(config.output);
  json outputs = json::array();
  try {
    fs::create_directories(dir);
    for (const auto& [name, text] : a.files) {
      write_text(dir / name, text);
      outputs.push_back({{"file", name}, {"sha256", sha256_hex(text)}, {"bytes", text.size()},
                         {"rows", count_rows(text)}});
    }
    bool all_pass = true;
    const json report = report_json(config, a, all_pass);
    write_text(dir / "report.json", report.dump(2) + "\n");

    json manifest = {{"schema_version", kReportSchemaVersion},
                     {"qjump_version", kVersion},
                     {"config",
                      {{"origin", config.origin},
                       {"base_dir", config.base_dir},
                       {"text", config.text},
                       {"sha256", sha256_hex(config.text)},
                       {"echo", params_echo(config)}}},
                     {"seed", config.seed},
                     {"workers", config.workers},
                     {"output", config.output},
                     {"outputs", outputs}};
    if (!config.model.empty() && config.model != "two_level") {
      manifest["model"] = {{"path", config.model}, {"sha256", sha256_file(config.model)}};
    } else {
      manifest["model"] = nullptr;
    }
    write_text(dir / "manifest.json", manifest.dump(2) + "\n");
    if (!a.note.empty()) log << "qjump: " << a.note << "\n";
    for (const auto& chk : a.checks) {
      log << (chk.fit.pass ? "PASS " : "FAIL ") << chk.name << ": empirical " << chk.fit.estimate
          << " (stderr " << chk.fit.std_error << "), theory " << chk.theory << ", tolerance "
          << chk.fit.tolerance << "\n";
    }
    return all_pass ? kOk : kAcceptanceFailure;
  } catch (const Error& e) {
    log << "qjump: " << e.what() << "\n";
    return kConfigError;
  } catch (const fs::filesystem_error& e) {
    log << "qjump: " << e.what() << "\n";
    return kConfigError;
  }
}

int replay(const std::string& manifest_path, const Overrides& overrides, std::ostream& log) {
  json manifest;
  try {
    std::ifstream in(manifest_path);
    if (!in) throw Error("cannot open " + manifest_path);
    manifest = json::parse(in);
  } catch (const std::exception& e) {
    log << "qjump: bad manifest: " << e.what() << "\n";
    return kConfigError;
  }
  ExperimentConfig config;
  std::vector<std::pair<std::string, std::string>> expected;
  try {
    const std::string version = manifest.at("qjump_version").get<std::string>();
    if (version != kVersion) {
      log << "qjump: manifest was written by version " << version << ", this is " << kVersion
          << "; refusing to replay\n";
      return kConfigError;
    }
    const json& cfg = manifest.at("config");
    config = parse_config(cfg.at("text").get<std::string>(), cfg.at("origin").get<std::string>(),
                          cfg.at("base_dir").get<std::string>());
    config.seed = manifest.at("seed").get<std::uint64_t>();
    config.workers = manifest.at("workers").get<unsigned>();
    apply(config, Overrides{std::nullopt, overrides.workers, overrides.output});
    const json& model = manifest.at("model");
    if (!model.is_null()) {
      const std::string path = model.at("path").get<std::string>();
      if (path != config.model) {
        log << "qjump: manifest model " << path << " differs from the config's " << config.model << "\n";
        return kConfigError;
      }
      const std::string hash = sha256_file(path);
      if (hash != model.at("sha256").get<std::string>()) {
        log << "qjump: model file " << path << " has changed since the run (sha256 " << hash
            << "); refusing to replay\n";
        return kConfigError;
      }
    }
    for (const auto& o : manifest.at("outputs")) {
      expected.emplace_back(o.at("file").get<std::string>(), o.at("sha256").get<std::string>());
    }
  } catch (const Error& e) {
    log << "qjump: config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const std::exception& e) {
    log << "qjump: bad manifest: " << e.what() << "\n";
    return kConfigError;
  }

  Artifacts a;
  if (const int code = guarded_compute(config, log, a); code != kOk) return code;
  if (overrides.output) {
    fs::create_directories(*overrides.output);
    for (const auto& [name, text] : a.files) write_text(fs::path(*overrides.output) / name, text);
  }

  const fs::path original_dir = fs::absolute(manifest_path).parent_path();
  for (const auto& [name, hash] : expected) {
    const auto it = std::find_if(a.files.begin(), a.files.end(),
                                 [&](const auto& f) { return f.first == name; });
    if (it == a.files.end()) {
      log << "qjump: replay mismatch: " << name << " was not produced\n";
      return kReplayMismatch;
    }
    if (sha256_hex(it->second) == hash) continue;
    log << "qjump: replay mismatch: " << name;
    const fs::path original = original_dir / name;
    std::ifstream in(original, std::ios::binary);
    if (in) {
      std::stringstream ss;
      ss << in.rdbuf();
      const std::size_t row = first_divergent_row(ss.str(), it->second);
      if (row > 0) log << " first differs at line " << row;
    }
    log << "\n";
    return kReplayMismatch;
  }
  if (a.files.size() != expected.size()) {
    log << "qjump: replay mismatch: produced " << a.files.size() << " files, manifest lists "
        << expected.size() << "\n";
    return kReplayMismatch;
  }
  log << "qjump: replay identical (" << expected.size() << " files)\n";
  return kOk;
}

}  // namespace qjump::app
