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

#include "fedsched/model.hpp"

#include <algorithm>
#include <numeric>
#include <string>

namespace fedsched {

void FedConfig::validate() const {
  if (num_clients < 1) throw ConfigError("clients", "must be >= 1");
  if (local_steps < 1) throw ConfigError("local_steps", "must be >= 1");
  if (rounds < 1) throw ConfigError("rounds", "must be >= 1");
  if (!(learning_rate > 0.0)) throw ConfigError("learning_rate", "must be > 0");
  if (batch_size < 1) throw ConfigError("batch_size", "must be >= 1");
}

ParamVector ClientObjective::full_gradient(const ParamVector& x) const {
  std::vector<std::size_t> all(sample_count());
  std::iota(all.begin(), all.end(), std::size_t{0});
  return gradient(x, all);
}

MinibatchSampler::MinibatchSampler(std::size_t sample_count, std::size_t batch_size, Rng rng)
    : order_(sample_count), batch_(std::min(batch_size, sample_count)), cursor_(0),
      rng_(std::move(rng)) {
  if (sample_count == 0) throw Error("MinibatchSampler: empty shard");
  if (batch_size == 0) throw Error("MinibatchSampler: batch size must be >= 1");
  std::iota(order_.begin(), order_.end(), std::size_t{0});
  cursor_ = order_.size();  // forces a shuffle on the first draw
}

std::span<const std::size_t> MinibatchSampler::next() {
  if (batch_ == order_.size()) return order_;
  if (cursor_ + batch_ > order_.size()) {
    std::shuffle(order_.begin(), order_.end(), rng_);
    cursor_ = 0;
  }
  std::span<const std::size_t> out(order_.data() + cursor_, batch_);
  cursor_ += batch_;
  return out;
}

NonFiniteError::NonFiniteError(std::size_t client, std::size_t step, const std::string& what)
    : Error("client " + std::to_string(client) + ", local step " + std::to_string(step) + ": " +
            what),
      client_(client),
      step_(step) {}

ParamVector local_update(const ParamVector& x, const ClientObjective& objective,
                         MinibatchSampler& sampler, std::size_t steps, double learning_rate) {
  if (!(learning_rate > 0.0)) throw Error("local_update: learning rate must be > 0");
  if (steps < 1) throw Error("local_update: need at least one local step");

  ParamVector y = x;
  for (std::size_t i = 0; i < steps; ++i) {
    const ParamVector g = objective.gradient(y, sampler.next());
    if (!g.allFinite()) throw NonFiniteError(objective.client_id(), i, "non-finite gradient");
    y -= learning_rate * g;
  }
  return y - x;
}

ParamVector aggregate(const ParamVector& x, std::span<const ParamVector> deltas,
                      std::span<const std::uint8_t> indicators, std::span<const double> probs) {
  const std::size_t n = probs.size();
  if (n == 0) throw Error("aggregate: no clients");
  if (indicators.size() != n || deltas.size() != n) {
    throw Error("aggregate: deltas, indicators and probs must have one entry per client");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!(probs[i] > 0.0) || probs[i] > 1.0) {
      throw Error("aggregate: probability of client " + std::to_string(i) + " outside (0, 1]");
    }
    if (indicators[i] > 1) throw Error("aggregate: indicator must be 0 or 1");
  }

  ParamVector sum = ParamVector::Zero(x.size());
  for (std::size_t i = 0; i < n; ++i) {
    if (indicators[i] == 0) continue;
    if (deltas[i].size() != x.size()) {
      throw Error("aggregate: missing or mis-sized delta for selected client " +
                  std::to_string(i));
    }
    sum += deltas[i] / probs[i];
  }
  return x + sum / static_cast<double>(n);
}

BoundDiagnostics bound_diagnostics(const Eigen::MatrixXd& probs, const BoundConstants& c) {
  if (probs.size() == 0) throw Error("bound_diagnostics: empty probability history");
  if (!(probs.array() > 0.0).all()) throw Error("bound_diagnostics: all q must be > 0");
  if (!(c.smoothness > 0.0) || !(c.gradient_bound > 0.0)) {
    throw Error("bound_diagnostics: L and G must be > 0");
  }
  if (!(c.learning_rate > 0.0) || c.local_steps < 1) {
    throw Error("bound_diagnostics: need learning rate > 0 and local steps >= 1");
  }

  const double rounds = static_cast<double>(probs.rows());
  const double steps = static_cast<double>(c.local_steps);
  const double lr = c.learning_rate;
  const double L = c.smoothness;
  const double G2 = c.gradient_bound * c.gradient_bound;

  BoundDiagnostics out;
  out.sum_inv_q = probs.array().inverse().mean();
  out.gradient_norm_bound = 2.0 * (c.initial_loss - c.optimal_loss) / (lr * rounds * steps) +
                        lr * lr * L * L * (steps - 1.0) * (steps - 1.0) * G2 +
                        lr * L * steps * G2 * out.sum_inv_q;
  return out;
}

}  // namespace fedsched
