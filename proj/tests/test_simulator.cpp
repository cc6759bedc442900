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

#include <cmath>

#include "fedsched/error.hpp"
#include "fedsched/experiment.hpp"
#include "fedsched/simulator.hpp"

using namespace fedsched;

namespace {

RunConfig small_config(std::size_t clients, std::size_t rounds, std::uint64_t seed = 1) {
  RunConfig c;
  c.fed.num_clients = clients;
  c.fed.rounds = rounds;
  c.fed.local_steps = 3;
  c.fed.learning_rate = 0.05;
  c.fed.batch_size = 8;
  c.fed.seed = seed;
  c.channel.payload_bits = 32e4;
  c.workload.samples = 40 * clients;
  c.workload.features = 6;
  c.workload.classes = 3;
  c.m_estimate_rounds = 200;
  return c;
}

std::vector<RoundRecord> records_from(const std::vector<double>& metric, const std::vector<double>& times) {
  std::vector<RoundRecord> out(metric.size());
  for (std::size_t i = 0; i < metric.size(); ++i) {
    out[i].t = i;
    out[i].test_accuracy = metric[i];
    out[i].train_loss = metric[i];
    out[i].cumulative_comm_time_s = times[i];
  }
  return out;
}

}  // namespace

TEST_CASE("uniform policy with M = N is plain FedAvg") {
  RunConfig c = small_config(4, 3);
  c.policy = Policy::kUniform;
  c.uniform_m = 4.0;
  const RunResult result = run(c);

  const Workload w = build_workload(c);
  Rng init = make_rng(c.fed.seed, Stream::kInit);
  ParamVector x = w.model->initial_point(init);
  std::vector<MinibatchSampler> samplers;
  for (std::size_t n = 0; n < 4; ++n) {
    samplers.emplace_back(w.clients[n].sample_count(), c.fed.batch_size, make_rng(c.fed.seed, Stream::kMinibatch, n));
  }
  for (std::size_t t = 0; t < 3; ++t) {
    ParamVector sum = ParamVector::Zero(x.size());
    for (std::size_t n = 0; n < 4; ++n) {
      sum += local_update(x, w.clients[n], samplers[n], c.fed.local_steps, c.fed.learning_rate);
    }
    x += sum / 4.0;
    const RoundRecord& r = result.records[t];
    CHECK(r.selected_count == 4);
    CHECK(r.sum_inv_q == 1.0);
    CHECK_FALSE(r.forced_selection);
    CHECK(r.train_loss == doctest::Approx(global_loss(w, x)).epsilon(1e-12));
  }
  CHECK((result.probs.array() == 1.0).all());
}

TEST_CASE("single device single round time is exact") {
  RunConfig c = small_config(1, 1, 21);
  c.policy = Policy::kUniform;
  c.uniform_m = 1.0;
  const RunResult result = run(c);
  Rng channel = make_rng(21, Stream::kChannel, 0);
  const double gain = sample_gain(c.channel, 0, 0, channel).gain;
  const double expected = c.channel.payload_bits / (c.channel.bandwidth_hz * std::log2(1.0 + gain * 1.0 / c.channel.noise_power));
  CHECK(result.records.at(0).cumulative_comm_time_s == doctest::Approx(expected).epsilon(1e-14));
}

TEST_CASE("runs are reproducible and respect record invariants") {
  for (Policy policy : {Policy::kLyapunov, Policy::kUniform}) {
    RunConfig c = small_config(6, 40, 5);
    c.policy = policy;
    c.lyapunov.lambda = 100.0;
    c.track_grad_norm = true;
    const RunResult a = run(c);
    const RunResult b = run(c);
    CHECK(format_metrics_csv(a.records) == format_metrics_csv(b.records));
    double previous = 0.0;
    for (const auto& r : a.records) {
      CHECK(r.selected_count >= 1);
      CHECK(r.cumulative_comm_time_s >= previous);
      CHECK(r.cumulative_comm_time_s == doctest::Approx(previous + r.round_comm_time_s));
      CHECK(std::isfinite(r.grad_norm_sq));
      previous = r.cumulative_comm_time_s;
    }
  }
}

TEST_CASE("round time is the TDMA sum of selected transmit times") {
  RunConfig c = small_config(5, 20, 8);
  c.lyapunov.lambda = 1.0;
  const RunResult result = run(c);

  // Replay the schedule: same channel and selection streams, same queues.
  std::vector<Rng> channel_rng;
  std::vector<Rng> selection_rng;
  std::vector<DeviceParams> params;
  for (std::size_t n = 0; n < 5; ++n) {
    channel_rng.push_back(make_rng(8, Stream::kChannel, n));
    selection_rng.push_back(make_rng(8, Stream::kSelection, n));
    params.push_back(device_params(c.lyapunov, c.channel, 5, n));
  }
  VirtualQueues queues(5);
  for (std::size_t t = 0; t < 20; ++t) {
    std::vector<ScheduleDecision> ds;
    double expected = 0.0;
    std::size_t selected = 0;
    for (std::size_t n = 0; n < 5; ++n) {
      const ChannelSample s = sample_gain(c.channel, n, t, channel_rng[n]);
      ds.push_back(decide(s, queues[n], params[n], selection_rng[n]));
      if (ds.back().selected) {
        expected += tx_time_seconds(s.gain, ds.back().power, c.channel);
        ++selected;
      }
    }
    queues.update(ds, c.channel);
    if (result.records[t].forced_selection) continue;
    CHECK(result.records[t].selected_count == selected);
    CHECK(result.records[t].round_comm_time_s == doctest::Approx(expected).epsilon(1e-13));
  }
}

TEST_CASE("forced selection keeps at least one device per round") {
  RunConfig c = small_config(3, 60, 2);
  c.lyapunov.lambda = 1e4;
  c.lyapunov.q_min = 1e-3;
  const RunResult result = run(c);
  std::size_t forced = 0;
  for (const auto& r : result.records) {
    CHECK(r.selected_count >= 1);
    forced += r.forced_selection;
  }
  CHECK(forced > 0);
}

TEST_CASE("moving_average") {
  CHECK(moving_average({0.0, 1.0}, 2) == std::vector<double>{0.0, 0.5});
  CHECK(moving_average({3.0, 3.0, 3.0, 3.0}, 2) == std::vector<double>{3.0, 3.0, 3.0, 3.0});
  const std::vector<double> s = {1.0, 5.0, -2.0, 7.5};
  CHECK(moving_average(s, 1) == s);
  CHECK(moving_average(s, 3).back() == doctest::Approx((5.0 - 2.0 + 7.5) / 3.0));
  CHECK(moving_average(s).size() == s.size());
  CHECK_THROWS_AS(moving_average(s, 0), Error);
}

TEST_CASE("time_to_target") {
  const auto rec = records_from({0.5, 0.8}, {1.0, 3.0});
  CHECK(time_to_target(rec, Metric::kTestAccuracy, 0.7).value() == 3.0);
  CHECK_FALSE(time_to_target(rec, Metric::kTestAccuracy, 0.9).has_value());
  CHECK(time_to_target(rec, Metric::kTestAccuracy, 0.4).value() == 1.0);
  CHECK(time_to_target(rec, Metric::kTrainLoss, 0.6).value() == 1.0);
  CHECK(rounds_to_target(rec, Metric::kTrainLoss, 0.1) == std::nullopt);
  // With a window of two the smoothed accuracy at round 1 is 0.65.
  CHECK_FALSE(time_to_target(rec, Metric::kTestAccuracy, 0.7, 2).has_value());
}

TEST_CASE("constraint_convergence_trace") {
  std::vector<RoundRecord> flat(50);
  for (auto& r : flat) r.power_q = {1.0, 0.25};
  for (double v : constraint_convergence_trace(flat, 0)) CHECK(v == 1.0);

  std::vector<RoundRecord> burst(100);
  for (std::size_t t = 0; t < burst.size(); ++t) burst[t].power_q = {t < 10 ? 2.0 : 0.0};
  const auto trace = constraint_convergence_trace(burst, 0);
  for (std::size_t t = 10; t < trace.size(); ++t) {
    CHECK(trace[t] == doctest::Approx(20.0 / static_cast<double>(t + 1)));
  }
  CHECK_THROWS_AS(constraint_convergence_trace(burst, 1), Error);
}

TEST_CASE("smaller lambda reaches the target loss in fewer rounds") {
  // One label per client makes small cohorts noisy, so cohort size shows up in the loss.
  RunConfig c = small_config(100, 300, 2);
  c.channel.payload_bits = 32.0 * 555178.0;
  c.workload.samples = 5000;
  c.workload.features = 10;
  c.workload.classes = 10;
  c.workload.heterogeneity = 1.0;
  c.fed.local_steps = 10;
  c.fed.learning_rate = 0.1;
  c.fed.batch_size = 32;
  c.lyapunov.lambda = 10.0;
  const RunResult many = run(c);
  c.lyapunov.lambda = 100.0;
  const RunResult few = run(c);

  double mean_many = 0.0;
  double mean_few = 0.0;
  for (std::size_t t = 0; t < c.fed.rounds; ++t) {
    mean_many += static_cast<double>(many.records[t].selected_count);
    mean_few += static_cast<double>(few.records[t].selected_count);
  }
  CHECK(mean_many > 2.0 * mean_few);

  const auto r_many = rounds_to_target(many.records, Metric::kTrainLoss, 0.4, 50);
  const auto r_few = rounds_to_target(few.records, Metric::kTrainLoss, 0.4, 50);
  REQUIRE(r_many.has_value());
  CHECK(*r_many < r_few.value_or(SIZE_MAX));
}

TEST_CASE("run configuration validation") {
  RunConfig c = small_config(4, 10);
  c.moving_average_window = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = small_config(4, 10);
  c.uniform_m = 5.0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = small_config(4, 10);
  c.workload.samples = 3;
  CHECK_THROWS_AS(c.validate(), ConfigError);
}
