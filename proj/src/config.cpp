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

#include "fedsched/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "fedsched/error.hpp"

namespace fedsched {

namespace {

using nlohmann::json;

// Reads keys out of one JSON object and rejects whatever is left over.
class ObjectReader {
 public:
  ObjectReader(const json& object, std::string prefix) : object_(object), prefix_(std::move(prefix)) {
    if (!object_.is_object()) throw ConfigError(prefix_.empty() ? "<root>" : prefix_, "expected an object");
  }

  std::string path(const std::string& key) const { return prefix_.empty() ? key : prefix_ + "." + key; }

  const json* find(const std::string& key) {
    seen_.insert(key);
    const auto it = object_.find(key);
    return it == object_.end() ? nullptr : &*it;
  }

  const json& require(const std::string& key) {
    const json* v = find(key);
    if (!v) throw ConfigError(path(key), "missing required key");
    return *v;
  }

  double number(const json& v, const std::string& key) const {
    if (!v.is_number()) throw ConfigError(path(key), "expected a number");
    return v.get<double>();
  }

  std::size_t count(const json& v, const std::string& key) const {
    if (v.is_number_unsigned()) return v.get<std::size_t>();
    if (v.is_number_integer()) throw ConfigError(path(key), "must be >= 0");
    throw ConfigError(path(key), "expected a non-negative integer");
  }

  void read(const std::string& key, double& out) {
    if (const json* v = find(key)) out = number(*v, key);
  }
  void read(const std::string& key, std::size_t& out) {
    if (const json* v = find(key)) out = count(*v, key);
  }
  void read(const std::string& key, bool& out) {
    if (const json* v = find(key)) {
      if (!v->is_boolean()) throw ConfigError(path(key), "expected true or false");
      out = v->get<bool>();
    }
  }
  void read(const std::string& key, std::string& out) {
    if (const json* v = find(key)) {
      if (!v->is_string()) throw ConfigError(path(key), "expected a string");
      out = v->get<std::string>();
    }
  }

  void finish() const {
    for (const auto& [key, value] : object_.items()) {
      if (!seen_.count(key)) throw ConfigError(path(key), "unknown key");
    }
  }

 private:
  const json& object_;
  std::string prefix_;
  std::set<std::string> seen_;
};

std::vector<double> per_device(ObjectReader& r, const json& v, const std::string& key) {
  if (v.is_number()) return {v.get<double>()};
  if (!v.is_array() || v.empty()) {
    throw ConfigError(r.path(key), "expected a number or a non-empty array");
  }
  std::vector<double> out;
  if (v.front().is_object()) {
    // Profile form: [{"count": 10, "sigma": 0.2}, ...]
    for (std::size_t i = 0; i < v.size(); ++i) {
      ObjectReader entry(v[i], r.path(key) + "[" + std::to_string(i) + "]");
      const std::size_t n = entry.count(entry.require("count"), "count");
      const double value = entry.number(entry.require("value"), "value");
      entry.finish();
      out.insert(out.end(), n, value);
    }
    return out;
  }
  for (const auto& item : v) out.push_back(r.number(item, key));
  return out;
}

ChannelConfig channel_from_json(const json& doc) {
  ObjectReader r(doc, "channel");
  ChannelConfig c;
  if (const json* v = r.find("sigma")) c.sigma = per_device(r, *v, "sigma");
  if (const json* v = r.find("p_avg")) c.p_avg = per_device(r, *v, "p_avg");
  r.read("noise_power", c.noise_power);
  r.read("bandwidth_hz", c.bandwidth_hz);
  r.read("payload_bits", c.payload_bits);
  r.read("p_max", c.p_max);
  r.finish();
  return c;
}

WorkloadConfig workload_from_json(const json& doc) {
  ObjectReader r(doc, "workload");
  WorkloadConfig w;
  std::string kind = to_string(w.kind);
  r.read("kind", kind);
  w.kind = workload_kind_from_string(kind);
  r.read("samples", w.samples);
  r.read("features", w.features);
  std::size_t classes = static_cast<std::size_t>(w.classes);
  r.read("classes", classes);
  w.classes = static_cast<int>(classes);
  r.read("hidden", w.hidden);
  r.read("heterogeneity", w.heterogeneity);
  r.read("class_separation", w.class_separation);
  r.read("l2", w.l2);
  r.read("nonconvex", w.nonconvex);
  r.read("holdout_fraction", w.holdout_fraction);
  r.read("csv", w.csv_path);
  std::string partition = to_string(w.partition);
  r.read("partition", partition);
  try {
    w.partition = partition_mode_from_string(partition);
  } catch (const Error& e) {
    throw ConfigError("workload.partition", e.what());
  }
  r.finish();
  return w;
}

}  // namespace

RunConfig config_from_json(const json& doc) {
  ObjectReader r(doc, "");
  RunConfig c;
  c.fed.num_clients = r.count(r.require("clients"), "clients");
  c.fed.rounds = r.count(r.require("rounds"), "rounds");
  c.lyapunov.lambda = r.number(r.require("lambda"), "lambda");
  r.read("local_steps", c.fed.local_steps);
  r.read("learning_rate", c.fed.learning_rate);
  r.read("batch_size", c.fed.batch_size);
  if (const json* v = r.find("seed")) c.fed.seed = r.count(*v, "seed");
  r.read("V", c.lyapunov.V);
  r.read("q_min", c.lyapunov.q_min);

  std::string policy = "lyapunov";
  r.read("policy", policy);
  if (policy == "lyapunov") {
    c.policy = Policy::kLyapunov;
  } else if (policy == "uniform") {
    c.policy = Policy::kUniform;
  } else {
    throw ConfigError("policy", "expected 'lyapunov' or 'uniform', got '" + policy + "'");
  }
  if (const json* v = r.find("uniform_m")) {
    if (v->is_string()) {
      if (v->get<std::string>() != "auto") throw ConfigError("uniform_m", "expected a number or \"auto\"");
    } else {
      c.uniform_m = r.number(*v, "uniform_m");
    }
  }
  r.read("m_estimate_rounds", c.m_estimate_rounds);
  r.read("eval_every", c.eval_every);
  r.read("moving_average_window", c.moving_average_window);
  r.read("record_queues", c.record_queues);
  r.read("track_grad_norm", c.track_grad_norm);
  if (const json* v = r.find("channel")) c.channel = channel_from_json(*v);
  if (const json* v = r.find("workload")) c.workload = workload_from_json(*v);
  r.finish();

  c.validate();
  return c;
}

nlohmann::json read_config_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  try {
    return json::parse(buffer.str());
  } catch (const json::parse_error& e) {
    throw ConfigError("<root>", path.string() + ": " + e.what());
  }
}

RunConfig parse_config(const std::filesystem::path& path) { return config_from_json(read_config_json(path)); }

RunConfig parse_config_text(const std::string& text) {
  try {
    return config_from_json(json::parse(text));
  } catch (const json::parse_error& e) {
    throw ConfigError("<root>", e.what());
  }
}

void set_config_value(nlohmann::json& doc, const std::string& dotted_key, const nlohmann::json& value) {
  if (dotted_key.empty()) throw ConfigError("<root>", "empty parameter name");
  json* node = &doc;
  std::size_t start = 0;
  for (;;) {
    const std::size_t dot = dotted_key.find('.', start);
    const std::string part = dotted_key.substr(start, dot - start);
    if (part.empty()) throw ConfigError(dotted_key, "malformed parameter name");
    if (!node->is_object()) throw ConfigError(dotted_key, "parent is not an object");
    if (dot == std::string::npos) {
      (*node)[part] = value;
      return;
    }
    node = &(*node)[part];
    if (node->is_null()) *node = json::object();
    start = dot + 1;
  }
}

}  // namespace fedsched
