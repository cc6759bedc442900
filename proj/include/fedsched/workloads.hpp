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

#include <memory>
#include <span>
#include <string>

#include <Eigen/Core>

#include "fedsched/data.hpp"
#include "fedsched/model.hpp"
#include "fedsched/rng.hpp"

namespace fedsched {

/// Loss and gradient of the mean per-sample loss over a block of rows, plus a
/// data-independent regularizer.
struct LossAndGradient {
  double loss = 0.0;
  ParamVector gradient;
};

class Model {
 public:
  virtual ~Model() = default;

  virtual Eigen::Index dimension() const = 0;
  virtual ParamVector initial_point(Rng& rng) const = 0;

  virtual LossAndGradient evaluate(const ParamVector& x, const Eigen::Ref<const Eigen::MatrixXd>& features,
                                   std::span<const int> labels, bool with_gradient) const = 0;

  /// Class scores, one row per sample.
  virtual Eigen::MatrixXd logits(const ParamVector& x,
                                 const Eigen::Ref<const Eigen::MatrixXd>& features) const = 0;

  double loss(const ParamVector& x, const Dataset& data) const;
  ParamVector gradient(const ParamVector& x, const Dataset& data) const;
  double accuracy(const ParamVector& x, const Dataset& data) const;
};

/// Multinomial logistic regression. Parameters: weights (classes x features,
/// column-major) followed by per-class biases. Regularizer on the weights:
///   l2/2 * |W|^2 + nonconvex * sum w^2 / (1 + w^2).
/// A positive `nonconvex` weight makes the objective smooth but non-convex.
class SoftmaxRegression final : public Model {
 public:
  SoftmaxRegression(Eigen::Index features, int classes, double l2 = 0.0, double nonconvex = 0.0);

  Eigen::Index dimension() const override { return classes_ * (features_ + 1); }
  ParamVector initial_point(Rng& rng) const override;
  LossAndGradient evaluate(const ParamVector& x, const Eigen::Ref<const Eigen::MatrixXd>& features,
                           std::span<const int> labels, bool with_gradient) const override;
  Eigen::MatrixXd logits(const ParamVector& x,
                         const Eigen::Ref<const Eigen::MatrixXd>& features) const override;

 private:
  Eigen::Index features_;
  Eigen::Index classes_;
  double l2_;
  double nonconvex_;
};

/// features -> tanh hidden layer -> softmax. Parameters: W1 (hidden x
/// features), b1, W2 (classes x hidden), b2, each column-major, concatenated.
class TwoLayerNet final : public Model {
 public:
  TwoLayerNet(Eigen::Index features, Eigen::Index hidden, int classes, double l2 = 0.0);

  Eigen::Index dimension() const override;
  ParamVector initial_point(Rng& rng) const override;
  LossAndGradient evaluate(const ParamVector& x, const Eigen::Ref<const Eigen::MatrixXd>& features,
                           std::span<const int> labels, bool with_gradient) const override;
  Eigen::MatrixXd logits(const ParamVector& x,
                         const Eigen::Ref<const Eigen::MatrixXd>& features) const override;

 private:
  Eigen::Index features_;
  Eigen::Index hidden_;
  Eigen::Index classes_;
  double l2_;
};

/// A client's shard bound to a shared model.
class DatasetObjective final : public ClientObjective {
 public:
  DatasetObjective(std::size_t client_id, std::shared_ptr<const Model> model, Dataset shard,
                   std::size_t batch_size);

  Eigen::Index dimension() const override { return model_->dimension(); }
  std::size_t sample_count() const override { return shard_.size(); }
  std::size_t batch_size() const override { return batch_size_; }

  double loss(const ParamVector& x) const override;
  ParamVector gradient(const ParamVector& x, std::span<const std::size_t> batch) const override;

  const Dataset& shard() const noexcept { return shard_; }

 private:
  std::shared_ptr<const Model> model_;
  Dataset shard_;
  std::size_t batch_size_;
};

}  // namespace fedsched
