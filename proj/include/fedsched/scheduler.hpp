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
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "fedsched/channel.hpp"
#include "fedsched/rng.hpp"

namespace fedsched {

struct LyapunovConfig {
  double V = 1000.0;       // drift-plus-penalty weight
  double lambda = 10.0;    // convergence-bound vs. airtime trade-off
  double q_min = 1e-6;     // floor on selection probabilities

  void validate() const;
};

/// Everything the per-device minimization needs, flattened for one device.
struct DeviceParams {
  double V = 1000.0;
  double lambda = 10.0;
  double q_min = 1e-6;
  double num_devices = 1.0;
  double payload_bits = 1.0;
  double bandwidth_hz = 1.0;
  double noise_power = 1.0;
  double p_max = 1.0;
  double p_avg = 1.0;
};

DeviceParams device_params(const LyapunovConfig& lyapunov, const ChannelConfig& channel,
                           std::size_t devices, std::size_t device);

enum class DecisionKind {
  kInterior,   // stationary point of the per-device objective inside the box
  kQEdge,      // power at its stationary value, probability clamped to q_min or 1
  kPeakPower,  // P = P_max with the matching clamped probability
  kUniform,    // uniform baseline
};

const char* to_string(DecisionKind kind);

struct ScheduleDecision {
  std::size_t device = 0;
  std::size_t round = 0;
  double q = 1.0;
  double power = 0.0;
  bool selected = false;
  double objective = 0.0;
  DecisionKind kind = DecisionKind::kPeakPower;
};

/// Per-device share of the drift-plus-penalty objective:
///   V (1/(N q) + lambda l q / (B log2(1 + gain P / N0))) + Z (P q - P_avg).
double per_device_objective(double q, double power, double gain, double queue, const DeviceParams& p);

struct ObjectiveGradient {
  double dq = 0.0;
  double dpower = 0.0;
};

struct ObjectiveHessian {
  double qq = 0.0;
  double qp = 0.0;
  double pp = 0.0;

  double determinant() const { return qq * pp - qp * qp; }
};

ObjectiveGradient objective_gradient(double q, double power, double gain, double queue,
                                     const DeviceParams& p);
ObjectiveHessian objective_hessian(double q, double power, double gain, double queue,
                                   const DeviceParams& p);

/// Stationary point in P of the per-device objective, which does not depend
/// on q: P = N0/gain * (exp(2 W0(sqrt(A/4))) - 1) with
/// A = V lambda l gain ln2 / (N0 B Z). Returns nullopt when Z == 0 (the
/// objective then decreases in P all the way to P_max).
std::optional<double> optimal_power(double gain, double queue, const DeviceParams& p);

/// Unclamped stationary probability at `power`:
///   (lambda l N / (B log2(1 + gain P / N0)) + N Z P / V)^(-1/2).
double optimal_q(double gain, double power, double queue, const DeviceParams& p);

/// Deterministic minimizer of the per-device objective over
/// [0, P_max] x [q_min, 1]. `selected` is left false.
ScheduleDecision solve_device(const ChannelSample& sample, double queue, const DeviceParams& p);

/// solve_device followed by a Bernoulli(q) selection draw.
ScheduleDecision decide(const ChannelSample& sample, double queue, const DeviceParams& p, Rng& rng);

/// max(Z + P q - P_avg, 0). Uses the probability, not the realized draw.
double queue_update(double queue, double power, double q, double p_avg);

/// Per-device virtual power queues, all starting at zero.
class VirtualQueues {
 public:
  explicit VirtualQueues(std::size_t devices) : z_(devices, 0.0) {}

  double operator[](std::size_t device) const { return z_.at(device); }
  std::span<const double> values() const noexcept { return z_; }
  std::size_t size() const noexcept { return z_.size(); }

  void update(std::span<const ScheduleDecision> decisions, const ChannelConfig& channel);

 private:
  std::vector<double> z_;
};

/// Uniform selection matched to an average of `m` devices per round: M' is
/// floor(m) with probability ceil(m) - m and ceil(m) otherwise, a uniformly
/// random M'-subset transmits at P_avg N / M', and every device records
/// q = m / N.
std::vector<ScheduleDecision> uniform_baseline(std::size_t devices, double m,
                                               const ChannelConfig& channel, std::size_t round,
                                               Rng& rng);

/// Closed-loop Lyapunov schedule without training: rows are rounds, columns
/// devices. Channel draws use the same sub-streams as the simulator.
struct ScheduleTrace {
  Eigen::MatrixXd q;
  Eigen::MatrixXd power;
  Eigen::MatrixXd gain;
};

ScheduleTrace simulate_schedule(const LyapunovConfig& lyapunov, const ChannelConfig& channel,
                                std::size_t devices, std::size_t rounds, std::uint64_t seed);

/// Mean over `rounds` closed-loop rounds of sum_n q_n.
double estimate_mean_selected(const LyapunovConfig& lyapunov, const ChannelConfig& channel,
                              std::size_t devices, std::size_t rounds, std::uint64_t seed);

}  // namespace fedsched
