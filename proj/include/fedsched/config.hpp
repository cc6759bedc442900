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

#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "fedsched/simulator.hpp"

namespace fedsched {

/// Reads a JSON run configuration. Unknown keys, type mismatches and range
/// violations raise ConfigError naming the dotted key.
///
/// Required: `clients`, `rounds`, `lambda`. Defaults: V = 1000,
/// local_steps = 10, learning_rate = 0.01, batch_size = 32,
/// moving_average_window = 500, channel constants B = 22e6, N0 = 1,
/// p_avg = 1, p_max = 100, payload_bits = 32 * 555178.
RunConfig parse_config(const std::filesystem::path& path);
RunConfig parse_config_text(const std::string& text);
RunConfig config_from_json(const nlohmann::json& doc);

nlohmann::json read_config_json(const std::filesystem::path& path);

/// Replaces the value at a dotted key (e.g. `channel.p_max`), creating
/// intermediate objects as needed.
void set_config_value(nlohmann::json& doc, const std::string& dotted_key, const nlohmann::json& value);

}  // namespace fedsched
