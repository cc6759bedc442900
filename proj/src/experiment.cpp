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

#include "fedsched/experiment.hpp"

#include <array>
#include <charconv>
#include <chrono>
#include <ctime>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "fedsched/config.hpp"
#include "fedsched/error.hpp"

#ifndef FEDSCHED_VERSION
#define FEDSCHED_VERSION "0.0.0"
#endif

namespace fedsched {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void append_real(std::string& out, double v) {
  std::array<char, 64> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v, std::chars_format::general, 17);
  out.append(buf.data(), res.ptr);
}

std::string utc_now() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::array<char, 32> buf{};
  std::strftime(buf.data(), buf.size(), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf.data();
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_file(const fs::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out << bytes;
  out.close();
  if (!out) throw Error("write failed: " + path.string());
}

// FNV-1a over the config bytes and seed.
std::string make_run_id(const std::string& snapshot, std::uint64_t seed) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](unsigned char c) {
    h ^= c;
    h *= 0x100000001b3ULL;
  };
  for (unsigned char c : snapshot) mix(c);
  for (int i = 0; i < 8; ++i) mix(static_cast<unsigned char>(seed >> (8 * i)));
  std::array<char, 17> buf{};
  std::to_chars(buf.data(), buf.data() + 16, h, 16);
  std::string hex(buf.data());
  return "run-" + std::string(16 - hex.size(), '0') + hex;
}

template <typename T>
T parse_field(std::string_view text, std::size_t line, const char* column) {
  T value{};
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw ParseError(line, std::string("bad value in column ") + column + ": '" + std::string(text) + "'");
  }
  return value;
}

ExperimentManifest execute(const std::string& snapshot, RunConfig config, const fs::path& out_dir) {
  ensure_writable_directory(out_dir);

  ExperimentManifest m;
  m.config_snapshot = snapshot;
  m.seed = config.fed.seed;
  m.run_id = make_run_id(snapshot, m.seed);
  m.version = version_string();
  m.metrics_path = out_dir / "metrics.csv";
  m.config_path = out_dir / "config.json";
  m.manifest_path = out_dir / "manifest.json";
  m.started_at = utc_now();

  spdlog::info("{}: {} rounds, {} clients, policy {}, seed {}", m.run_id, config.fed.rounds,
               config.fed.num_clients, to_string(config.policy), m.seed);
  RunResult result = run(config);
  m.uniform_m = result.uniform_m;
  m.finished_at = utc_now();

  write_file(m.config_path, snapshot);
  export_csv(result.records, m.metrics_path);

  json manifest = {
      {"run_id", m.run_id},
      {"seed", m.seed},
      {"started_at", m.started_at},
      {"finished_at", m.finished_at},
      {"version", m.version},
      {"policy", to_string(config.policy)},
      {"config_snapshot", m.config_path.filename().string()},
      {"outputs", {{"metrics", m.metrics_path.filename().string()}}},
  };
  if (config.policy == Policy::kUniform) manifest["uniform_m"] = m.uniform_m;
  write_file(m.manifest_path, manifest.dump(2) + "\n");
  spdlog::info("{}: wrote {}", m.run_id, m.metrics_path.string());
  return m;
}

}  // namespace

const char* version_string() { return "fedsched " FEDSCHED_VERSION; }

std::string format_metrics_csv(const std::vector<RoundRecord>& records) {
  std::string out = kMetricsColumns;
  out += '\n';
  for (const RoundRecord& r : records) {
    out += std::to_string(r.t);
    out += ',';
    append_real(out, r.train_loss);
    out += ',';
    append_real(out, r.test_accuracy);
    out += ',';
    append_real(out, r.round_comm_time_s);
    out += ',';
    append_real(out, r.cumulative_comm_time_s);
    out += ',';
    out += std::to_string(r.selected_count);
    out += ',';
    append_real(out, r.sum_inv_q);
    out += ',';
    out += r.forced_selection ? '1' : '0';
    out += '\n';
  }
  return out;
}

void export_csv(const std::vector<RoundRecord>& records, const fs::path& path) {
  if (records.empty()) throw Error("export_csv: no records to write to " + path.string());
  write_file(path, format_metrics_csv(records));
}

std::vector<RoundRecord> read_metrics_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(0, "cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw ParseError(0, path.string() + ": empty file");
  if (line != kMetricsColumns) throw ParseError(1, "unexpected header");

  std::vector<RoundRecord> out;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string_view> f;
    std::string_view rest(line);
    for (;;) {
      const auto comma = rest.find(',');
      f.push_back(rest.substr(0, comma));
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    if (f.size() != 8) throw ParseError(line_no, "expected 8 fields");
    RoundRecord r;
    r.t = parse_field<std::size_t>(f[0], line_no, "t");
    r.train_loss = parse_field<double>(f[1], line_no, "train_loss");
    r.test_accuracy = parse_field<double>(f[2], line_no, "test_accuracy");
    r.round_comm_time_s = parse_field<double>(f[3], line_no, "round_comm_time_s");
    r.cumulative_comm_time_s = parse_field<double>(f[4], line_no, "cumulative_comm_time_s");
    r.selected_count = parse_field<std::size_t>(f[5], line_no, "selected_count");
    r.sum_inv_q = parse_field<double>(f[6], line_no, "sum_inv_q");
    r.forced_selection = parse_field<int>(f[7], line_no, "forced_selection_flag") != 0;
    out.push_back(r);
  }
  return out;
}

void ensure_writable_directory(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error("cannot create output directory " + dir.string() + ": " + ec.message());
  const fs::path probe = dir / ".fedsched-write-probe";
  {
    std::ofstream out(probe);
    if (!out) throw Error("output directory is not writable: " + dir.string());
  }
  fs::remove(probe, ec);
}

ExperimentManifest run_experiment_text(const std::string& config_text, const fs::path& out_dir,
                                       std::optional<std::uint64_t> seed_override) {
  RunConfig config = parse_config_text(config_text);
  if (seed_override) config.fed.seed = *seed_override;
  return execute(config_text, std::move(config), out_dir);
}

ExperimentManifest run_experiment(const fs::path& config_path, const fs::path& out_dir,
                                  std::optional<std::uint64_t> seed_override) {
  return run_experiment_text(read_file(config_path), out_dir, seed_override);
}

std::vector<ExperimentManifest> run_sweep(const fs::path& config_path, const std::string& param,
                                          const std::vector<std::string>& values,
                                          const fs::path& out_dir) {
  if (values.empty()) throw Error("sweep: no values given for " + param);
  const json base = read_config_json(config_path);

  // Validate every variant before running any of them.
  std::vector<std::pair<std::string, RunConfig>> variants;
  for (const std::string& raw : values) {
    json value;
    try {
      value = json::parse(raw);
    } catch (const json::parse_error&) {
      value = raw;
    }
    json doc = base;
    set_config_value(doc, param, value);
    RunConfig config = config_from_json(doc);
    variants.emplace_back(doc.dump(2) + "\n", std::move(config));
  }

  std::vector<ExperimentManifest> manifests;
  for (std::size_t i = 0; i < variants.size(); ++i) {
    manifests.push_back(execute(variants[i].first, std::move(variants[i].second),
                                out_dir / (param + "=" + values[i])));
  }
  return manifests;
}

}  // namespace fedsched
