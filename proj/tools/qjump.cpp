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


// qjump run <config> | qjump replay <manifest>

#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "qjump/app.hpp"
#include "qjump/version.hpp"

int main(int argc, char** argv) {
  CLI::App cli{"Quantum-jump trajectory experiments"};
  cli.set_version_flag("--version", std::string(qjump::kVersion));
  cli.require_subcommand(1);

  std::string config_path, manifest_path;
  std::optional<unsigned> workers;
  std::optional<std::string> out;
  std::optional<std::uint64_t> seed;

  CLI::App* run = cli.add_subcommand("run", "Run an experiment config");
  run->add_option("config", config_path, "Experiment config (YAML)")->required();
  run->add_option("--workers", workers, "Worker threads (0: all cores)");
  run->add_option("--out", out, "Output directory");
  run->add_option("--seed", seed, "Seed, overrides the config");

  CLI::App* replay = cli.add_subcommand("replay", "Rerun a manifest and compare outputs");
  replay->add_option("manifest", manifest_path, "manifest.json of an earlier run")->required();
  replay->add_option("--workers", workers, "Worker threads (0: all cores)");
  replay->add_option("--out", out, "Also write the regenerated files here");

  try {
    cli.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = cli.exit(e);
    return code == 0 ? 0 : qjump::app::kConfigError;
  }

  qjump::app::Overrides overrides{seed, workers, out};
  if (*run) {
    qjump::app::ExperimentConfig config;
    try {
      config = qjump::app::load_config(config_path);
    } catch (const qjump::Error& e) {
      std::cerr << "qjump: config error: " << e.what() << "\n";
      return qjump::app::kConfigError;
    }
    qjump::app::apply(config, overrides);
    return qjump::app::run(config, std::cerr);
  }
  return qjump::app::replay(manifest_path, overrides, std::cerr);
}
