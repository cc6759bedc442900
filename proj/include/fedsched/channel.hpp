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
#include <vector>

#include "fedsched/rng.hpp"

namespace fedsched {

/// Uplink parameters. `sigma` and `p_avg` hold one entry per device, or a
/// single entry shared by all devices.
struct ChannelConfig {
  std::vector<double> sigma{1.0};  // Rayleigh scale of |h|
  double noise_power = 1.0;        // N0
  double bandwidth_hz = 22e6;      // B
  double payload_bits = 32.0 * 555178.0;  // l
  double p_max = 100.0;
  std::vector<double> p_avg{1.0};  // time-average power budget per device

  double sigma_of(std::size_t device) const;
  double p_avg_of(std::size_t device) const;

  /// Lowest admissible gain: 0.25 bit/s/Hz at peak power.
  double gain_lo() const;
  /// Highest admissible gain for `device`: 10 bit/s/Hz (1024-QAM) at its average power.
  double gain_hi(std::size_t device) const;

  /// Throws ConfigError when a field is out of range or a per-device vector
  /// has neither 1 nor `devices` entries.
  void validate(std::size_t devices) const;
};

struct ChannelSample {
  std::size_t device = 0;
  std::size_t round = 0;
  double gain = 0.0;  // |h|^2
};

/// |h|^2 for |h| ~ Rayleigh(sigma), i.e. exponential with mean 2 sigma^2.
double draw_rayleigh_power(double sigma, Rng& rng);

/// Rayleigh draw clamped to [gain_lo, gain_hi(device)].
ChannelSample sample_gain(const ChannelConfig& config, std::size_t device, std::size_t round, Rng& rng);

/// B log2(1 + gain P / N0), bits per second.
double capacity_bps(double gain, double power, const ChannelConfig& config);

/// Seconds to push the payload at `power`; requires power > 0.
double tx_time_seconds(double gain, double power, const ChannelConfig& config);

}  // namespace fedsched
