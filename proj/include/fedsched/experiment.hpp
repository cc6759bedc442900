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

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "fedsched/simulator.hpp"

namespace fedsched {

struct ExperimentManifest {
  std::string run_id;
  std::string config_snapshot;  // exact bytes the run was configured from
  std::uint64_t seed = 0;
  std::string started_at;       // ISO-8601 UTC
  std::string finished_at;
  std::filesystem::path metrics_path;
  std::filesystem::path config_path;
  std::filesystem::path manifest_path;
  std::string version;
  double uniform_m = 0.0;
};

inline constexpr const char* kMetricsColumns =
    "t,train_loss,test_accuracy,round_comm_time_s,cumulative_comm_time_s,selected_count,sum_inv_q,"
    "forced_selection_flag";

/// Header plus one row per round; reals carry 17 significant digits.
std::string format_metrics_csv(const std::vector<RoundRecord>& records);
void export_csv(const std::vector<RoundRecord>& records, const std::filesystem::path& path);

/// Parses a file written by export_csv. Only the CSV columns are restored.
std::vector<RoundRecord> read_metrics_csv(const std::filesystem::path& path);

/// Executes one run and writes metrics.csv, config.json (byte copy of the
/// input) and manifest.json into `out_dir`. The directory is probed for
/// writability before anything is simulated.
ExperimentManifest run_experiment(const std::filesystem::path& config_path,
                                  const std::filesystem::path& out_dir,
                                  std::optional<std::uint64_t> seed_override = std::nullopt);

/// Same, from in-memory config text.
ExperimentManifest run_experiment_text(const std::string& config_text,
                                       const std::filesystem::path& out_dir,
                                       std::optional<std::uint64_t> seed_override = std::nullopt);

/// One run per value of `param` (dotted key), each in `out_dir/<param>=<value>`.
/// Values are parsed as JSON scalars, falling back to plain strings.
std::vector<ExperimentManifest> run_sweep(const std::filesystem::path& config_path,
                                          const std::string& param,
                                          const std::vector<std::string>& values,
                                          const std::filesystem::path& out_dir);

/// Throws Error naming `dir` if it cannot be created or written.
void ensure_writable_directory(const std::filesystem::path& dir);

const char* version_string();

}  // namespace fedsched
