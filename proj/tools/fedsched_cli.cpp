// Copyright 2026 The fedsched Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Command-line front end: run, sweep and estimate-m.
//
// Log verbosity comes from FEDSCHED_LOG_LEVEL (trace, debug, info, warn,
// error, off); default is info.

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "fedsched/config.hpp"
#include "fedsched/error.hpp"
#include "fedsched/experiment.hpp"
#include "fedsched/scheduler.hpp"

namespace {

void configure_logging() {
  spdlog::set_pattern("[%H:%M:%S.%e] [%^%l%$] %v");
  if (const char* level = std::getenv("FEDSCHED_LOG_LEVEL")) {
    spdlog::set_level(spdlog::level::from_str(level));
  } else {
    spdlog::set_level(spdlog::level::info);
  }
}

}  // namespace

int main(int argc, char** argv) {
  configure_logging();

  CLI::App app{"Federated learning device-scheduling simulator"};
  app.set_version_flag("--version", std::string(fedsched::version_string()));
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  auto* run = app.add_subcommand("run", "Run one simulation and write metrics.csv + manifest.json");
  run->add_option("--config", config_path, "JSON run configuration")->required()->check(CLI::ExistingFile);
  run->add_option("--out", out_dir, "Output directory")->required();
  run->add_option("--seed", seed, "Override the configured seed");

  std::string param;
  std::vector<std::string> values;
  auto* sweep = app.add_subcommand("sweep", "Run once per value of a configuration key");
  sweep->add_option("--config", config_path, "JSON run configuration")->required()->check(CLI::ExistingFile);
  sweep->add_option("--param", param, "Dotted configuration key, e.g. V or channel.p_max")->required();
  sweep->add_option("--values", values, "Comma-separated values")->required()->delimiter(',');
  sweep->add_option("--out", out_dir, "Output directory (one subdirectory per value)")->required();

  std::size_t rounds = 2000;
  auto* estimate = app.add_subcommand("estimate-m", "Monte-Carlo estimate of the mean number of devices per round");
  estimate->add_option("--config", config_path, "JSON run configuration")->required()->check(CLI::ExistingFile);
  estimate->add_option("--rounds", rounds, "Scheduler rounds to simulate")->check(CLI::PositiveNumber);
  estimate->add_option("--seed", seed, "Override the configured seed");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      const auto m = fedsched::run_experiment(config_path, out_dir, seed);
      std::cout << m.run_id << ' ' << m.metrics_path.string() << '\n';
    } else if (*sweep) {
      for (const auto& m : fedsched::run_sweep(config_path, param, values, out_dir)) {
        std::cout << m.run_id << ' ' << m.metrics_path.string() << '\n';
      }
    } else if (*estimate) {
      const fedsched::RunConfig config = fedsched::parse_config(config_path);
      const double m = fedsched::estimate_mean_selected(config.lyapunov, config.channel,
                                                        config.fed.num_clients, rounds,
                                                        seed.value_or(config.fed.seed));
      std::cout.precision(12);
      std::cout << m << '\n';
    }
  } catch (const fedsched::Error& e) {
    spdlog::error("{}", e.what());
    return 1;
  } catch (const std::exception& e) {
    spdlog::error("unexpected failure: {}", e.what());
    return 2;
  }
  return 0;
}
