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

#include <doctest.h>

#include <filesystem>

#include <nlohmann/json.hpp>

#include "fedsched/config.hpp"
#include "fedsched/error.hpp"
#include "fedsched/experiment.hpp"
#include "test_util.hpp"

using namespace fedsched;
namespace fs = std::filesystem;

namespace {

constexpr const char* kTinyRun = R"({
  "clients": 3,
  "rounds": 5,
  "lambda": 10,
  "local_steps": 2,
  "seed": 17,
  "channel": {"payload_bits": 320000},
  "workload": {"samples": 90, "features": 4, "classes": 3}
})";

std::string config_error_key(const std::string& text) {
  try {
    parse_config_text(text);
  } catch (const ConfigError& e) {
    return e.key();
  }
  return "<none>";
}

}  // namespace

TEST_CASE("minimal config gets documented defaults") {
  const RunConfig c = parse_config_text(R"({"clients": 4, "rounds": 10, "lambda": 10})");
  CHECK(c.lyapunov.V == 1000.0);
  CHECK(c.fed.local_steps == 10);
  CHECK(c.fed.learning_rate == 0.01);
  CHECK(c.fed.batch_size == 32);
  CHECK(c.moving_average_window == 500);
  CHECK(c.channel.bandwidth_hz == 22e6);
  CHECK(c.channel.p_max == 100.0);
  CHECK(c.policy == Policy::kLyapunov);
  CHECK_FALSE(c.uniform_m.has_value());
}

TEST_CASE("config errors name the offending key") {
  CHECK(config_error_key(R"({"clients": 4, "rounds": 10, "lambda": -1})") == "lambda");
  CHECK(config_error_key(R"({"clients": 4, "rounds": 10, "lamda": 10})") == "lambda");
  CHECK(config_error_key(R"({"clients": 4, "rounds": 10, "lambda": 1, "lamda": 10})") == "lamda");
  CHECK(config_error_key(R"({"clients": 4, "rounds": 10, "lambda": "ten"})") == "lambda");
  CHECK(config_error_key(R"({"clients": 4, "rounds": 10, "lambda": 1, "channel": {"sigmaa": 1}})") ==
        "channel.sigmaa");
  CHECK(config_error_key(R"({"clients": 4, "rounds": 10, "lambda": 1, "channel": {"p_avg": 500}})") ==
        "channel.p_avg");
  CHECK(config_error_key(R"({"clients": 4, "rounds": 10, "lambda": 1, "policy": "random"})") == "policy");
  CHECK_THROWS_AS(parse_config_text("{not json"), Error);
}

TEST_CASE("per-device channel profiles") {
  const RunConfig c = parse_config_text(R"({
    "clients": 10, "rounds": 1, "lambda": 100,
    "channel": {"sigma": [{"count": 1, "value": 0.2}, {"count": 4, "value": 0.75}, {"count": 5, "value": 1.2}]}
  })");
  REQUIRE(c.channel.sigma.size() == 10);
  CHECK(c.channel.sigma_of(0) == 0.2);
  CHECK(c.channel.sigma_of(4) == 0.75);
  CHECK(c.channel.sigma_of(9) == 1.2);
  CHECK(config_error_key(R"({"clients": 3, "rounds": 1, "lambda": 1, "channel": {"sigma": [1, 2]}})") ==
        "channel.sigma");
}

TEST_CASE("set_config_value edits nested keys") {
  nlohmann::json doc = nlohmann::json::parse(kTinyRun);
  set_config_value(doc, "V", 5.0);
  set_config_value(doc, "channel.p_max", 50.0);
  const RunConfig c = config_from_json(doc);
  CHECK(c.lyapunov.V == 5.0);
  CHECK(c.channel.p_max == 50.0);
}

TEST_CASE("export_csv") {
  test_util::TempDir dir;
  RoundRecord r;
  r.t = 0;
  r.train_loss = 0.1234567890123456;
  r.test_accuracy = 2.0 / 3.0;
  r.round_comm_time_s = 1e-7 / 3.0;
  r.cumulative_comm_time_s = 12345.678901234567;
  r.selected_count = 3;
  r.sum_inv_q = 7.0 / 3.0;
  r.forced_selection = true;

  const fs::path one = dir.path() / "one.csv";
  export_csv({r}, one);
  const std::string text = test_util::slurp(one);
  CHECK(std::count(text.begin(), text.end(), '\n') == 2);
  CHECK(text.rfind(std::string(kMetricsColumns) + "\n", 0) == 0);

  RoundRecord s = r;
  s.t = 1;
  s.forced_selection = false;
  s.train_loss = -0.0;
  const fs::path two = dir.path() / "two.csv";
  export_csv({r, s}, two);
  const auto back = read_metrics_csv(two);
  REQUIRE(back.size() == 2);
  for (std::size_t i = 0; i < 2; ++i) {
    const RoundRecord& want = i == 0 ? r : s;
    CHECK(back[i].t == want.t);
    CHECK(back[i].train_loss == doctest::Approx(want.train_loss).epsilon(1e-12));
    CHECK(back[i].test_accuracy == doctest::Approx(want.test_accuracy).epsilon(1e-12));
    CHECK(back[i].round_comm_time_s == doctest::Approx(want.round_comm_time_s).epsilon(1e-12));
    CHECK(back[i].cumulative_comm_time_s == doctest::Approx(want.cumulative_comm_time_s).epsilon(1e-12));
    CHECK(back[i].selected_count == want.selected_count);
    CHECK(back[i].sum_inv_q == doctest::Approx(want.sum_inv_q).epsilon(1e-12));
    CHECK(back[i].forced_selection == want.forced_selection);
  }

  CHECK_THROWS_AS(export_csv({}, dir.path() / "empty.csv"), Error);
  CHECK_THROWS_AS(export_csv({r}, dir.path() / "missing" / "sub" / "x.csv"), Error);
}

TEST_CASE("run_experiment writes reproducible outputs") {
  test_util::TempDir dir;
  const fs::path config = dir.write("run.json", kTinyRun);
  const auto a = run_experiment(config, dir.path() / "a");
  const auto b = run_experiment(config, dir.path() / "b");
  CHECK(test_util::slurp(a.metrics_path) == test_util::slurp(b.metrics_path));
  CHECK(test_util::slurp(a.config_path) == kTinyRun);
  CHECK(a.config_snapshot == kTinyRun);
  CHECK(a.run_id == b.run_id);
  CHECK(a.seed == 17);

  const auto manifest = nlohmann::json::parse(test_util::slurp(a.manifest_path));
  CHECK(manifest.at("run_id") == a.run_id);
  CHECK(manifest.at("seed") == 17);
  CHECK(manifest.at("version") == version_string());

  const auto c = run_experiment(config, dir.path() / "c", 18);
  CHECK(c.seed == 18);
  CHECK(c.run_id != a.run_id);
}

TEST_CASE("unwritable output directory fails before simulating") {
  test_util::TempDir dir;
  const fs::path blocker = dir.write("file", "x");
  const fs::path config = dir.write("run.json", R"({"clients": 2, "rounds": 100000000, "lambda": 10})");
  CHECK_THROWS_AS(run_experiment(config, blocker / "out"), Error);
  CHECK_THROWS_AS(ensure_writable_directory(blocker), Error);
}

TEST_CASE("sweep over V writes one run per value") {
  test_util::TempDir dir;
  const fs::path config = dir.write("run.json", kTinyRun);
  const auto runs = run_sweep(config, "V", {"1", "1e3", "1e5"}, dir.path() / "sweep");
  REQUIRE(runs.size() == 3);
  for (const auto& m : runs) {
    CHECK(fs::exists(m.metrics_path));
    CHECK(fs::exists(m.manifest_path));
  }
  CHECK(parse_config(runs[2].config_path).lyapunov.V == 1e5);
  CHECK(runs[0].metrics_path.parent_path() != runs[1].metrics_path.parent_path());
  CHECK_THROWS_AS(run_sweep(config, "V", {"1"}, dir.path() / "run.json"), Error);
}
