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

#include <cstddef>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "fedsched/channel.hpp"
#include "fedsched/data.hpp"
#include "fedsched/model.hpp"
#include "fedsched/scheduler.hpp"
#include "fedsched/workloads.hpp"

namespace fedsched {

enum class Policy { kLyapunov, kUniform };

const char* to_string(Policy policy);

enum class WorkloadKind { kLogistic, kNonconvexLogistic, kMlp };

const char* to_string(WorkloadKind kind);
WorkloadKind workload_kind_from_string(const std::string& name);

struct WorkloadConfig {
  WorkloadKind kind = WorkloadKind::kLogistic;
  std::size_t samples = 2000;
  std::size_t features = 10;
  int classes = 10;
  std::size_t hidden = 16;        // mlp only
  double heterogeneity = 0.0;
  double class_separation = 1.0;
  double l2 = 1e-4;
  double nonconvex = 0.1;         // nonconvex-logistic only
  double holdout_fraction = 0.1;
  std::string csv_path;           // overrides the synthetic generator when set
  PartitionMode partition = PartitionMode::kIid;  // csv only

  void validate() const;
};

struct RunConfig {
  FedConfig fed;
  ChannelConfig channel;
  LyapunovConfig lyapunov;
  Policy policy = Policy::kLyapunov;
  std::optional<double> uniform_m;   // unset: estimated from the Lyapunov policy
  std::size_t m_estimate_rounds = 2000;
  WorkloadConfig workload;
  std::size_t eval_every = 1;
  std::size_t moving_average_window = 500;
  bool record_queues = false;
  bool track_grad_norm = false;

  void validate() const;
};

struct RoundRecord {
  std::size_t t = 0;
  double train_loss = 0.0;
  double test_accuracy = 0.0;
  double round_comm_time_s = 0.0;
  double cumulative_comm_time_s = 0.0;
  std::size_t selected_count = 0;
  double sum_inv_q = 0.0;        // (1/N) sum_n 1/q_n for this round
  bool forced_selection = false;
  double grad_norm_sq = 0.0;     // |grad f(x_{t+1})|^2 when tracked, else NaN
  std::vector<double> power_q;   // per-device P q this round
  std::vector<double> queues;    // per-device Z after this round, if recorded
};

struct RunResult {
  std::vector<RoundRecord> records;
  double uniform_m = 0.0;        // M actually used by the uniform policy
  Eigen::MatrixXd probs;         // rounds x devices
  double initial_loss = 0.0;
};

/// Composes scheduling, selection, local training and aggregation for
/// `config.fed.rounds` rounds. Metrics for round t describe x_{t+1}.
RunResult run(const RunConfig& config);

/// Builds the client objectives and holdout set described by the workload.
struct Workload {
  std::shared_ptr<const Model> model;
  std::vector<DatasetObjective> clients;
  Dataset test;
};

Workload build_workload(const RunConfig& config);

/// (1/N) sum_n f_n(x) and its gradient.
double global_loss(const Workload& workload, const ParamVector& x);
ParamVector global_gradient(const Workload& workload, const ParamVector& x);

/// Trailing mean over min(window, t + 1) points.
std::vector<double> moving_average(const std::vector<double>& series, std::size_t window = 500);

enum class Metric { kTestAccuracy, kTrainLoss };

/// Cumulative communication time at the first round whose smoothed metric
/// reaches `target` (accuracy >= target, loss <= target).
std::optional<double> time_to_target(const std::vector<RoundRecord>& records, Metric metric,
                                     double target, std::size_t window = 1);

/// Same crossing rule, reported as the round index.
std::optional<std::size_t> rounds_to_target(const std::vector<RoundRecord>& records, Metric metric,
                                            double target, std::size_t window = 1);

/// Running time average of one device's P q: element k is the mean of the
/// first k + 1 rounds.
std::vector<double> constraint_convergence_trace(const std::vector<RoundRecord>& records,
                                                 std::size_t device);
std::vector<double> running_mean(const std::vector<double>& series);

}  // namespace fedsched
