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
#include <span>
#include <vector>

#include <Eigen/Core>

#include "fedsched/error.hpp"
#include "fedsched/rng.hpp"

namespace fedsched {

using ParamVector = Eigen::VectorXd;

/// Per-round federated training knobs.
struct FedConfig {
  std::size_t num_clients = 1;
  std::size_t local_steps = 10;  // synchronization interval
  std::size_t rounds = 1;
  double learning_rate = 0.01;
  std::size_t batch_size = 32;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Local objective f_n of one client together with its stochastic gradient
/// oracle. A minibatch gradient is the mean of per-sample gradients over the
/// batch (plus any regularizer), so averaging over all equal-size batches
/// reproduces the full gradient.
class ClientObjective {
 public:
  explicit ClientObjective(std::size_t client_id) : client_id_(client_id) {}
  virtual ~ClientObjective() = default;

  std::size_t client_id() const noexcept { return client_id_; }

  virtual Eigen::Index dimension() const = 0;
  virtual std::size_t sample_count() const = 0;
  virtual std::size_t batch_size() const = 0;

  virtual double loss(const ParamVector& x) const = 0;
  virtual ParamVector gradient(const ParamVector& x,
                               std::span<const std::size_t> batch) const = 0;

  ParamVector full_gradient(const ParamVector& x) const;

 private:
  std::size_t client_id_;
};

/// Minibatch index stream: sampling without replacement inside an epoch, with
/// a reshuffle at each epoch boundary. A tail shorter than the batch size is
/// dropped so every batch is a uniformly random subset of fixed size. When the
/// batch size covers the whole shard every step is full-batch.
class MinibatchSampler {
 public:
  MinibatchSampler(std::size_t sample_count, std::size_t batch_size, Rng rng);

  std::span<const std::size_t> next();

  std::size_t batch_size() const noexcept { return batch_; }

 private:
  std::vector<std::size_t> order_;
  std::size_t batch_;
  std::size_t cursor_;
  Rng rng_;
};

class NonFiniteError : public Error {
 public:
  NonFiniteError(std::size_t client, std::size_t step, const std::string& what);

  std::size_t client() const noexcept { return client_; }
  std::size_t step() const noexcept { return step_; }

 private:
  std::size_t client_;
  std::size_t step_;
};

/// Runs `steps` local SGD steps from `x` and returns y_I - y_0.
ParamVector local_update(const ParamVector& x, const ClientObjective& objective,
                         MinibatchSampler& sampler, std::size_t steps, double learning_rate);

/// Inverse-probability-weighted global update
///   x + (1/N) sum_n (1_n / q_n) delta_n.
/// `deltas[n]` may be empty for clients that were not selected.
ParamVector aggregate(const ParamVector& x, std::span<const ParamVector> deltas,
                      std::span<const std::uint8_t> indicators, std::span<const double> probs);

struct BoundConstants {
  double smoothness = 1.0;       // L
  double gradient_bound = 1.0;   // G
  double learning_rate = 0.01;
  std::size_t local_steps = 1;
  double initial_loss = 0.0;     // f(x_0)
  double optimal_loss = 0.0;     // estimate of f*, e.g. best loss seen
};

struct BoundDiagnostics {
  double sum_inv_q = 0.0;
  /// Upper-bound estimate on the average squared gradient norm; only as
  /// good as the supplied f* estimate.
  double gradient_norm_bound = 0.0;
};

/// `probs` is rounds x clients. sum_inv_q = mean of 1/q over all entries.
BoundDiagnostics bound_diagnostics(const Eigen::MatrixXd& probs, const BoundConstants& constants);

}  // namespace fedsched
