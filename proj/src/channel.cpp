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

#include "fedsched/channel.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "fedsched/error.hpp"

namespace fedsched {

namespace {

double pick(const std::vector<double>& values, std::size_t device) {
  return values.size() == 1 ? values.front() : values.at(device);
}

void check_per_device(const std::vector<double>& values, std::size_t devices, const char* key) {
  if (values.size() != 1 && values.size() != devices) {
    throw ConfigError(key, "needs 1 or " + std::to_string(devices) + " entries, got " +
                               std::to_string(values.size()));
  }
}

}  // namespace

double ChannelConfig::sigma_of(std::size_t device) const { return pick(sigma, device); }
double ChannelConfig::p_avg_of(std::size_t device) const { return pick(p_avg, device); }

double ChannelConfig::gain_lo() const { return (std::exp2(0.25) - 1.0) * noise_power / p_max; }

double ChannelConfig::gain_hi(std::size_t device) const {
  return (std::exp2(10.0) - 1.0) * noise_power / p_avg_of(device);
}

void ChannelConfig::validate(std::size_t devices) const {
  check_per_device(sigma, devices, "channel.sigma");
  check_per_device(p_avg, devices, "channel.p_avg");
  for (double s : sigma) {
    if (!(s > 0.0)) throw ConfigError("channel.sigma", "must be > 0");
  }
  if (!(noise_power > 0.0)) throw ConfigError("channel.noise_power", "must be > 0");
  if (!(bandwidth_hz > 0.0)) throw ConfigError("channel.bandwidth_hz", "must be > 0");
  if (!(payload_bits > 0.0)) throw ConfigError("channel.payload_bits", "must be > 0");
  if (!(p_max > 0.0) || !std::isfinite(p_max)) throw ConfigError("channel.p_max", "must be > 0");
  for (double p : p_avg) {
    if (!(p > 0.0) || p > p_max) throw ConfigError("channel.p_avg", "must lie in (0, p_max]");
  }
}

double draw_rayleigh_power(double sigma, Rng& rng) {
  std::exponential_distribution<double> power(1.0 / (2.0 * sigma * sigma));
  return power(rng);
}

ChannelSample sample_gain(const ChannelConfig& config, std::size_t device, std::size_t round, Rng& rng) {
  const double raw = draw_rayleigh_power(config.sigma_of(device), rng);
  return {device, round, std::clamp(raw, config.gain_lo(), config.gain_hi(device))};
}

double capacity_bps(double gain, double power, const ChannelConfig& config) {
  if (power < 0.0 || std::isnan(power)) throw Error("capacity_bps: negative transmit power");
  return config.bandwidth_hz * std::log2(1.0 + gain * power / config.noise_power);
}

double tx_time_seconds(double gain, double power, const ChannelConfig& config) {
  if (!(power > 0.0)) throw Error("tx_time_seconds: selected device has zero transmit power");
  const double capacity = capacity_bps(gain, power, config);
  if (!(capacity > 0.0)) throw Error("tx_time_seconds: zero capacity (gain " + std::to_string(gain) + ")");
  return config.payload_bits / capacity;
}

}  // namespace fedsched
