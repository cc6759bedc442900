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

#include "fedsched/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <spdlog/spdlog.h>

#include "fedsched/error.hpp"
#include "fedsched/workloads.hpp"

namespace fedsched {

const char* to_string(Policy policy) {
  return policy == Policy::kLyapunov ? "lyapunov" : "uniform";
}

const char* to_string(WorkloadKind kind) {
  switch (kind) {
    case WorkloadKind::kLogistic: return "logistic";
    case WorkloadKind::kNonconvexLogistic: return "nonconvex-logistic";
    case WorkloadKind::kMlp: return "mlp";
  }
  return "?";
}

WorkloadKind workload_kind_from_string(const std::string& name) {
  if (name == "logistic") return WorkloadKind::kLogistic;
  if (name == "nonconvex-logistic") return WorkloadKind::kNonconvexLogistic;
  if (name == "mlp") return WorkloadKind::kMlp;
  throw ConfigError("workload.kind", "unknown workload '" + name +
                                         "' (expected logistic, nonconvex-logistic, mlp)");
}

void WorkloadConfig::validate() const {
  if (csv_path.empty()) {
    if (samples < 1) throw ConfigError("workload.samples", "must be >= 1");
    if (features < 1) throw ConfigError("workload.features", "must be >= 1");
    if (classes < 2) throw ConfigError("workload.classes", "must be >= 2");
    if (!(heterogeneity >= 0.0 && heterogeneity <= 1.0)) {
      throw ConfigError("workload.heterogeneity", "must lie in [0, 1]");
    }
    if (!(class_separation > 0.0)) throw ConfigError("workload.class_separation", "must be > 0");
  }
  if (kind == WorkloadKind::kMlp && hidden < 1) throw ConfigError("workload.hidden", "must be >= 1");
  if (!(l2 >= 0.0)) throw ConfigError("workload.l2", "must be >= 0");
  if (!(nonconvex >= 0.0)) throw ConfigError("workload.nonconvex", "must be >= 0");
  if (!(holdout_fraction >= 0.0 && holdout_fraction < 1.0)) {
    throw ConfigError("workload.holdout_fraction", "must lie in [0, 1)");
  }
}

void RunConfig::validate() const {
  fed.validate();
  channel.validate(fed.num_clients);
  lyapunov.validate();
  workload.validate();
  if (workload.csv_path.empty() && workload.samples < fed.num_clients) {
    throw ConfigError("workload.samples", "must be >= clients");
  }
  if (uniform_m && (!(*uniform_m > 0.0) || *uniform_m > static_cast<double>(fed.num_clients))) {
    throw ConfigError("uniform_m", "must lie in (0, clients]");
  }
  if (m_estimate_rounds < 1) throw ConfigError("m_estimate_rounds", "must be >= 1");
  if (eval_every < 1) throw ConfigError("eval_every", "must be >= 1");
  if (moving_average_window < 1) throw ConfigError("moving_average_window", "must be >= 1");
}

Workload build_workload(const RunConfig& config) {
  const WorkloadConfig& w = config.workload;
  const std::size_t n_clients = config.fed.num_clients;

  DatasetPartition partition;
  if (!w.csv_path.empty()) {
    CsvSchema schema;
    schema.mode = w.partition;
    schema.clients = n_clients;
    schema.holdout_fraction = w.holdout_fraction;
    schema.seed = config.fed.seed;
    partition = load_csv_dataset(w.csv_path, schema);
    if (partition.clients.size() != n_clients) {
      throw ConfigError("clients", "csv partition produced " + std::to_string(partition.clients.size()) +
                                       " clients but the run expects " + std::to_string(n_clients));
    }
    partition.num_classes = std::max(partition.num_classes, 2);
  } else {
    SyntheticSpec spec;
    spec.samples = w.samples;
    spec.features = w.features;
    spec.classes = w.classes;
    spec.clients = n_clients;
    spec.heterogeneity = w.heterogeneity;
    spec.class_separation = w.class_separation;
    spec.holdout_fraction = w.holdout_fraction;
    spec.seed = config.fed.seed;
    partition = generate_synthetic(spec);
  }

  const Eigen::Index features = partition.clients.front().dimension();
  Workload out;
  switch (w.kind) {
    case WorkloadKind::kLogistic:
      out.model = std::make_shared<SoftmaxRegression>(features, partition.num_classes, w.l2);
      break;
    case WorkloadKind::kNonconvexLogistic:
      out.model = std::make_shared<SoftmaxRegression>(features, partition.num_classes, w.l2, w.nonconvex);
      break;
    case WorkloadKind::kMlp:
      out.model = std::make_shared<TwoLayerNet>(features, static_cast<Eigen::Index>(w.hidden),
                                                partition.num_classes, w.l2);
      break;
  }
  out.clients.reserve(n_clients);
  for (std::size_t n = 0; n < n_clients; ++n) {
    out.clients.emplace_back(n, out.model, std::move(partition.clients[n]), config.fed.batch_size);
  }
  out.test = std::move(partition.test);
  return out;
}

double global_loss(const Workload& workload, const ParamVector& x) {
  double total = 0.0;
  for (const auto& client : workload.clients) total += client.loss(x);
  return total / static_cast<double>(workload.clients.size());
}

ParamVector global_gradient(const Workload& workload, const ParamVector& x) {
  ParamVector g = ParamVector::Zero(x.size());
  for (const auto& client : workload.clients) g += client.full_gradient(x);
  return g / static_cast<double>(workload.clients.size());
}

RunResult run(const RunConfig& config) {
  config.validate();
  const std::size_t n_dev = config.fed.num_clients;
  const std::size_t rounds = config.fed.rounds;
  const std::uint64_t seed = config.fed.seed;

  Workload workload = build_workload(config);
  Rng init_rng = make_rng(seed, Stream::kInit);
  ParamVector x = workload.model->initial_point(init_rng);

  RunResult result;
  result.initial_loss = global_loss(workload, x);
  result.probs.resize(static_cast<Eigen::Index>(rounds), static_cast<Eigen::Index>(n_dev));

  if (config.policy == Policy::kUniform) {
    result.uniform_m = config.uniform_m ? *config.uniform_m
                                        : estimate_mean_selected(config.lyapunov, config.channel, n_dev,
                                                                 config.m_estimate_rounds, seed);
    result.uniform_m = std::clamp(result.uniform_m, std::numeric_limits<double>::min(),
                                  static_cast<double>(n_dev));
    spdlog::info("uniform policy matched to M = {}", result.uniform_m);
  }

  std::vector<Rng> channel_rng;
  std::vector<Rng> selection_rng;
  std::vector<MinibatchSampler> samplers;
  std::vector<DeviceParams> params;
  for (std::size_t n = 0; n < n_dev; ++n) {
    channel_rng.push_back(make_rng(seed, Stream::kChannel, n));
    selection_rng.push_back(make_rng(seed, Stream::kSelection, n));
    samplers.emplace_back(workload.clients[n].sample_count(), config.fed.batch_size,
                          make_rng(seed, Stream::kMinibatch, n));
    params.push_back(device_params(config.lyapunov, config.channel, n_dev, n));
  }
  Rng baseline_rng = make_rng(seed, Stream::kBaseline);
  Rng force_rng = make_rng(seed, Stream::kForce);

  VirtualQueues queues(n_dev);
  std::vector<ChannelSample> samples(n_dev);
  std::vector<ScheduleDecision> decisions;
  std::vector<ParamVector> deltas(n_dev);
  std::vector<std::uint8_t> indicators(n_dev);
  std::vector<double> probs(n_dev);

  double cumulative = 0.0;
  double last_loss = result.initial_loss;
  double last_accuracy = workload.model->accuracy(x, workload.test);
  result.records.reserve(rounds);

  for (std::size_t t = 0; t < rounds; ++t) {
    for (std::size_t n = 0; n < n_dev; ++n) samples[n] = sample_gain(config.channel, n, t, channel_rng[n]);

    if (config.policy == Policy::kLyapunov) {
      decisions.resize(n_dev);
      for (std::size_t n = 0; n < n_dev; ++n) {
        decisions[n] = decide(samples[n], queues[n], params[n], selection_rng[n]);
      }
    } else {
      decisions = uniform_baseline(n_dev, result.uniform_m, config.channel, t, baseline_rng);
    }

    RoundRecord rec;
    rec.t = t;
    const bool any = std::any_of(decisions.begin(), decisions.end(),
                                 [](const ScheduleDecision& d) { return d.selected; });
    if (!any) {
      double q_best = 0.0;
      for (const auto& d : decisions) q_best = std::max(q_best, d.q);
      std::vector<std::size_t> ties;
      for (const auto& d : decisions) {
        if (d.q == q_best) ties.push_back(d.device);
      }
      std::uniform_int_distribution<std::size_t> pick(0, ties.size() - 1);
      const std::size_t forced = ties.size() == 1 ? ties.front() : ties[pick(force_rng)];
      decisions[forced].selected = true;
      rec.forced_selection = true;
      spdlog::debug("round {}: no device sampled, forcing device {} (q = {})", t, forced, q_best);
    }

    double round_time = 0.0;
    for (std::size_t n = 0; n < n_dev; ++n) {
      const ScheduleDecision& d = decisions[n];
      indicators[n] = d.selected ? 1 : 0;
      probs[n] = d.q;
      result.probs(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(n)) = d.q;
      if (d.selected) {
        try {
          deltas[n] = local_update(x, workload.clients[n], samplers[n], config.fed.local_steps,
                                   config.fed.learning_rate);
          round_time += tx_time_seconds(samples[n].gain, d.power, config.channel);
        } catch (const Error& e) {
          throw Error("round " + std::to_string(t) + ", device " + std::to_string(n) + ": " + e.what());
        }
        ++rec.selected_count;
      } else {
        deltas[n].resize(0);
      }
      rec.sum_inv_q += 1.0 / d.q;
      rec.power_q.push_back(d.power * d.q);
    }
    rec.sum_inv_q /= static_cast<double>(n_dev);

    x = aggregate(x, deltas, indicators, probs);
    if (!x.allFinite()) throw Error("round " + std::to_string(t) + ": global model became non-finite");
    if (config.policy == Policy::kLyapunov) queues.update(decisions, config.channel);

    cumulative += round_time;
    rec.round_comm_time_s = round_time;
    rec.cumulative_comm_time_s = cumulative;

    if (t % config.eval_every == 0 || t + 1 == rounds) {
      last_loss = global_loss(workload, x);
      last_accuracy = workload.model->accuracy(x, workload.test);
    }
    rec.train_loss = last_loss;
    rec.test_accuracy = last_accuracy;
    rec.grad_norm_sq = config.track_grad_norm ? global_gradient(workload, x).squaredNorm()
                                              : std::numeric_limits<double>::quiet_NaN();
    if (config.record_queues) rec.queues.assign(queues.values().begin(), queues.values().end());
    result.records.push_back(std::move(rec));
  }
  return result;
}

std::vector<double> moving_average(const std::vector<double>& series, std::size_t window) {
  if (window < 1) throw Error("moving_average: window must be >= 1");
  std::vector<double> out(series.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < series.size(); ++i) {
    sum += series[i];
    if (i >= window) sum -= series[i - window];
    out[i] = sum / static_cast<double>(std::min(window, i + 1));
  }
  return out;
}

std::optional<std::size_t> rounds_to_target(const std::vector<RoundRecord>& records, Metric metric,
                                            double target, std::size_t window) {
  std::vector<double> series;
  series.reserve(records.size());
  for (const auto& r : records) {
    series.push_back(metric == Metric::kTestAccuracy ? r.test_accuracy : r.train_loss);
  }
  const std::vector<double> smooth = moving_average(series, window);
  for (std::size_t i = 0; i < smooth.size(); ++i) {
    const bool hit = metric == Metric::kTestAccuracy ? smooth[i] >= target : smooth[i] <= target;
    if (hit) return i;
  }
  return std::nullopt;
}

std::optional<double> time_to_target(const std::vector<RoundRecord>& records, Metric metric,
                                     double target, std::size_t window) {
  const auto round = rounds_to_target(records, metric, target, window);
  if (!round) return std::nullopt;
  return records[*round].cumulative_comm_time_s;
}

std::vector<double> running_mean(const std::vector<double>& series) {
  std::vector<double> out(series.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < series.size(); ++i) {
    sum += series[i];
    out[i] = sum / static_cast<double>(i + 1);
  }
  return out;
}

std::vector<double> constraint_convergence_trace(const std::vector<RoundRecord>& records,
                                                 std::size_t device) {
  std::vector<double> series;
  series.reserve(records.size());
  for (const auto& r : records) {
    if (device >= r.power_q.size()) throw Error("constraint_convergence_trace: no such device");
    series.push_back(r.power_q[device]);
  }
  return running_mean(series);
}

}  // namespace fedsched
