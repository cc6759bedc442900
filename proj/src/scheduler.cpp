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

#include "fedsched/scheduler.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

#include "fedsched/error.hpp"
#include "fedsched/lambertw.hpp"

namespace fedsched {

namespace {

constexpr double kLn2 = std::numbers::ln2;

// Spectral efficiency log2(1 + gain P / N0) and its first two P-derivatives.
struct Rate {
  double s;
  double ds;
  double d2s;
};

Rate rate(double gain, double power, const DeviceParams& p) {
  const double snr_slope = gain / p.noise_power;
  const double one_plus = 1.0 + snr_slope * power;
  return {std::log1p(snr_slope * power) / kLn2, snr_slope / (one_plus * kLn2),
          -snr_slope * snr_slope / (one_plus * one_plus * kLn2)};
}

double clamp_q(double q, const DeviceParams& p) {
  if (std::isnan(q)) return p.q_min;
  return std::clamp(q, p.q_min, 1.0);
}

ScheduleDecision make(const ChannelSample& sample, double q, double power, double queue,
                      const DeviceParams& p, DecisionKind kind) {
  ScheduleDecision d;
  d.device = sample.device;
  d.round = sample.round;
  d.q = q;
  d.power = power;
  d.objective = per_device_objective(q, power, sample.gain, queue, p);
  d.kind = kind;
  return d;
}

}  // namespace

void LyapunovConfig::validate() const {
  if (!(V > 0.0) || !std::isfinite(V)) throw ConfigError("V", "must be > 0");
  if (!(lambda > 0.0) || !std::isfinite(lambda)) throw ConfigError("lambda", "must be > 0");
  if (!(q_min > 0.0 && q_min <= 1.0)) throw ConfigError("q_min", "must lie in (0, 1]");
}

DeviceParams device_params(const LyapunovConfig& lyapunov, const ChannelConfig& channel,
                           std::size_t devices, std::size_t device) {
  DeviceParams p;
  p.V = lyapunov.V;
  p.lambda = lyapunov.lambda;
  p.q_min = lyapunov.q_min;
  p.num_devices = static_cast<double>(devices);
  p.payload_bits = channel.payload_bits;
  p.bandwidth_hz = channel.bandwidth_hz;
  p.noise_power = channel.noise_power;
  p.p_max = channel.p_max;
  p.p_avg = channel.p_avg_of(device);
  return p;
}

const char* to_string(DecisionKind kind) {
  switch (kind) {
    case DecisionKind::kInterior: return "interior";
    case DecisionKind::kQEdge: return "q-edge";
    case DecisionKind::kPeakPower: return "peak-power";
    case DecisionKind::kUniform: return "uniform";
  }
  return "?";
}

double per_device_objective(double q, double power, double gain, double queue, const DeviceParams& p) {
  if (!(q > 0.0) || q > 1.0) throw Error("per_device_objective: q must lie in (0, 1]");
  if (!(power > 0.0)) throw Error("per_device_objective: power must be > 0");
  const double s = rate(gain, power, p).s;
  const double airtime = p.lambda * p.payload_bits * q / (p.bandwidth_hz * s);
  return p.V * (1.0 / (p.num_devices * q) + airtime) + queue * (power * q - p.p_avg);
}

ObjectiveGradient objective_gradient(double q, double power, double gain, double queue,
                                     const DeviceParams& p) {
  const Rate r = rate(gain, power, p);
  const double c = p.V * p.lambda * p.payload_bits / p.bandwidth_hz;
  return {-p.V / (p.num_devices * q * q) + c / r.s + queue * power,
          -c * q * r.ds / (r.s * r.s) + queue * q};
}

ObjectiveHessian objective_hessian(double q, double power, double gain, double queue,
                                   const DeviceParams& p) {
  const Rate r = rate(gain, power, p);
  const double c = p.V * p.lambda * p.payload_bits / p.bandwidth_hz;
  ObjectiveHessian h;
  h.qq = 2.0 * p.V / (p.num_devices * q * q * q);
  h.qp = -c * r.ds / (r.s * r.s) + queue;
  h.pp = c * q * (2.0 * r.ds * r.ds / (r.s * r.s * r.s) - r.d2s / (r.s * r.s));
  return h;
}

std::optional<double> optimal_power(double gain, double queue, const DeviceParams& p) {
  if (!(gain > 0.0)) throw Error("optimal_power: gain must be > 0");
  if (queue < 0.0) throw Error("optimal_power: queue must be >= 0");
  if (queue == 0.0) return std::nullopt;
  const double a = p.V * p.lambda * p.payload_bits * gain * kLn2 /
                   (p.noise_power * p.bandwidth_hz * queue);
  const double w = lambert_w0(std::sqrt(a / 4.0)).w;
  // exp(2w) == (A/4) / w^2; expm1 keeps precision when A is tiny.
  return p.noise_power / gain * std::expm1(2.0 * w);
}

double optimal_q(double gain, double power, double queue, const DeviceParams& p) {
  if (!(power > 0.0)) throw Error("optimal_q: power must be > 0");
  const double s = rate(gain, power, p).s;
  const double inner = p.lambda * p.payload_bits * p.num_devices / (p.bandwidth_hz * s) +
                       p.num_devices * queue * power / p.V;
  return 1.0 / std::sqrt(inner);
}

ScheduleDecision solve_device(const ChannelSample& sample, double queue, const DeviceParams& p) {
  const double gain = sample.gain;
  ScheduleDecision best = make(sample, clamp_q(optimal_q(gain, p.p_max, queue, p), p), p.p_max,
                               queue, p, DecisionKind::kPeakPower);

  const std::optional<double> p_opt = optimal_power(gain, queue, p);
  if (!p_opt || !(*p_opt > 0.0) || *p_opt > p.p_max) return best;

  const double q_opt = optimal_q(gain, *p_opt, queue, p);
  ScheduleDecision candidate;
  if (q_opt >= p.q_min && q_opt <= 1.0) {
    const ObjectiveHessian h = objective_hessian(q_opt, *p_opt, gain, queue, p);
    if (!(h.qq > 0.0 && h.determinant() > 0.0)) return best;
    candidate = make(sample, q_opt, *p_opt, queue, p, DecisionKind::kInterior);
  } else {
    // The P-minimizer is the same for every q, so the q-edge point is the
    // exact minimizer along the clamped edge.
    candidate = make(sample, clamp_q(q_opt, p), *p_opt, queue, p, DecisionKind::kQEdge);
  }
  return candidate.objective < best.objective ? candidate : best;
}

ScheduleDecision decide(const ChannelSample& sample, double queue, const DeviceParams& p, Rng& rng) {
  ScheduleDecision d = solve_device(sample, queue, p);
  d.selected = bernoulli(rng, d.q);
  return d;
}

double queue_update(double queue, double power, double q, double p_avg) {
  return std::max(queue + power * q - p_avg, 0.0);
}

void VirtualQueues::update(std::span<const ScheduleDecision> decisions, const ChannelConfig& channel) {
  for (const ScheduleDecision& d : decisions) {
    double& z = z_.at(d.device);
    z = queue_update(z, d.power, d.q, channel.p_avg_of(d.device));
  }
}

std::vector<ScheduleDecision> uniform_baseline(std::size_t devices, double m,
                                               const ChannelConfig& channel, std::size_t round,
                                               Rng& rng) {
  if (devices == 0) throw Error("uniform_baseline: no devices");
  if (!(m > 0.0) || m > static_cast<double>(devices)) {
    throw Error("uniform_baseline: M must lie in (0, N], got " + std::to_string(m));
  }
  const double lo = std::floor(m);
  const double hi = std::ceil(m);
  const bool take_floor = lo != hi && bernoulli(rng, hi - m);
  const auto count = static_cast<std::size_t>(take_floor ? lo : hi);

  std::vector<std::size_t> order(devices);
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (std::size_t i = 0; i < count; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, devices - 1);
    std::swap(order[i], order[pick(rng)]);
  }

  const double n = static_cast<double>(devices);
  const double share = n / static_cast<double>(std::max<std::size_t>(count, 1));
  std::vector<ScheduleDecision> out(devices);
  for (std::size_t d = 0; d < devices; ++d) {
    out[d].device = d;
    out[d].round = round;
    out[d].q = m / n;
    out[d].power = channel.p_avg_of(d) * share;
    out[d].kind = DecisionKind::kUniform;
  }
  for (std::size_t i = 0; i < count; ++i) out[order[i]].selected = true;
  return out;
}

ScheduleTrace simulate_schedule(const LyapunovConfig& lyapunov, const ChannelConfig& channel,
                                std::size_t devices, std::size_t rounds, std::uint64_t seed) {
  lyapunov.validate();
  channel.validate(devices);

  std::vector<Rng> channel_rng;
  std::vector<DeviceParams> params;
  for (std::size_t n = 0; n < devices; ++n) {
    channel_rng.push_back(make_rng(seed, Stream::kChannel, n));
    params.push_back(device_params(lyapunov, channel, devices, n));
  }

  ScheduleTrace trace;
  const auto rows = static_cast<Eigen::Index>(rounds);
  const auto cols = static_cast<Eigen::Index>(devices);
  trace.q.resize(rows, cols);
  trace.power.resize(rows, cols);
  trace.gain.resize(rows, cols);

  VirtualQueues queues(devices);
  std::vector<ScheduleDecision> decisions(devices);
  for (std::size_t t = 0; t < rounds; ++t) {
    for (std::size_t n = 0; n < devices; ++n) {
      const ChannelSample sample = sample_gain(channel, n, t, channel_rng[n]);
      decisions[n] = solve_device(sample, queues[n], params[n]);
      const auto i = static_cast<Eigen::Index>(t);
      const auto j = static_cast<Eigen::Index>(n);
      trace.q(i, j) = decisions[n].q;
      trace.power(i, j) = decisions[n].power;
      trace.gain(i, j) = sample.gain;
    }
    queues.update(decisions, channel);
  }
  return trace;
}

double estimate_mean_selected(const LyapunovConfig& lyapunov, const ChannelConfig& channel,
                              std::size_t devices, std::size_t rounds, std::uint64_t seed) {
  if (rounds < 1) throw Error("estimate_mean_selected: need at least one round");
  return simulate_schedule(lyapunov, channel, devices, rounds, seed).q.rowwise().sum().mean();
}

}  // namespace fedsched
