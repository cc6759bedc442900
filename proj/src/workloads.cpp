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

#include "fedsched/workloads.hpp"

#include <cmath>
#include <random>

#include "fedsched/error.hpp"

namespace fedsched {

namespace {

using Eigen::Index;
using Eigen::MatrixXd;

// Row-wise softmax cross-entropy. Returns mean loss; when `grad` is non-null
// it receives (softmax - onehot) / rows.
double cross_entropy(const MatrixXd& scores, std::span<const int> labels, MatrixXd* grad) {
  const Index rows = scores.rows();
  if (static_cast<std::size_t>(rows) != labels.size()) {
    throw Error("cross_entropy: label count does not match rows");
  }
  if (rows == 0) {
    if (grad) grad->setZero(0, scores.cols());
    return 0.0;
  }
  const Eigen::VectorXd row_max = scores.rowwise().maxCoeff();
  MatrixXd shifted = scores.colwise() - row_max;
  MatrixXd expd = shifted.array().exp();
  const Eigen::VectorXd norm = expd.rowwise().sum();

  double total = 0.0;
  for (Index i = 0; i < rows; ++i) {
    const int y = labels[static_cast<std::size_t>(i)];
    if (y < 0 || y >= scores.cols()) throw Error("cross_entropy: label out of range");
    total += std::log(norm(i)) - shifted(i, y);
  }
  if (grad) {
    *grad = expd.array().colwise() / norm.array();
    for (Index i = 0; i < rows; ++i) (*grad)(i, labels[static_cast<std::size_t>(i)]) -= 1.0;
    *grad /= static_cast<double>(rows);
  }
  return total / static_cast<double>(rows);
}

}  // namespace

double Model::loss(const ParamVector& x, const Dataset& data) const {
  return evaluate(x, data.features, data.labels, false).loss;
}

ParamVector Model::gradient(const ParamVector& x, const Dataset& data) const {
  return evaluate(x, data.features, data.labels, true).gradient;
}

double Model::accuracy(const ParamVector& x, const Dataset& data) const {
  if (data.size() == 0) return std::nan("");
  const MatrixXd scores = logits(x, data.features);
  std::size_t hits = 0;
  for (Index i = 0; i < scores.rows(); ++i) {
    Index best = 0;
    scores.row(i).maxCoeff(&best);
    if (best == data.labels[static_cast<std::size_t>(i)]) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(data.size());
}

SoftmaxRegression::SoftmaxRegression(Index features, int classes, double l2, double nonconvex)
    : features_(features), classes_(classes), l2_(l2), nonconvex_(nonconvex) {
  if (features < 1 || classes < 2) throw Error("SoftmaxRegression: need >= 1 feature and >= 2 classes");
  if (l2 < 0.0 || nonconvex < 0.0) throw Error("SoftmaxRegression: regularizer weights must be >= 0");
}

ParamVector SoftmaxRegression::initial_point(Rng&) const { return ParamVector::Zero(dimension()); }

MatrixXd SoftmaxRegression::logits(const ParamVector& x,
                                   const Eigen::Ref<const MatrixXd>& features) const {
  const Eigen::Map<const MatrixXd> w(x.data(), classes_, features_);
  const Eigen::Map<const Eigen::VectorXd> b(x.data() + classes_ * features_, classes_);
  return (features * w.transpose()).rowwise() + b.transpose();
}

LossAndGradient SoftmaxRegression::evaluate(const ParamVector& x,
                                            const Eigen::Ref<const MatrixXd>& features,
                                            std::span<const int> labels, bool with_gradient) const {
  const Eigen::Map<const MatrixXd> w(x.data(), classes_, features_);
  const auto w2 = w.array().square();

  MatrixXd g;
  LossAndGradient out;
  out.loss = cross_entropy(logits(x, features), labels, with_gradient ? &g : nullptr) +
             0.5 * l2_ * w2.sum() + nonconvex_ * (w2 / (1.0 + w2)).sum();
  if (!with_gradient) return out;

  out.gradient.resize(dimension());
  Eigen::Map<MatrixXd> dw(out.gradient.data(), classes_, features_);
  Eigen::Map<Eigen::VectorXd> db(out.gradient.data() + classes_ * features_, classes_);
  dw = g.transpose() * features;
  dw.array() += l2_ * w.array() + nonconvex_ * 2.0 * w.array() / (1.0 + w2).square();
  db = g.colwise().sum().transpose();
  return out;
}

TwoLayerNet::TwoLayerNet(Index features, Index hidden, int classes, double l2)
    : features_(features), hidden_(hidden), classes_(classes), l2_(l2) {
  if (features < 1 || hidden < 1 || classes < 2) {
    throw Error("TwoLayerNet: need >= 1 feature, >= 1 hidden unit and >= 2 classes");
  }
  if (l2 < 0.0) throw Error("TwoLayerNet: l2 must be >= 0");
}

Index TwoLayerNet::dimension() const {
  return hidden_ * features_ + hidden_ + classes_ * hidden_ + classes_;
}

ParamVector TwoLayerNet::initial_point(Rng& rng) const {
  ParamVector x = ParamVector::Zero(dimension());
  std::normal_distribution<double> in(0.0, 1.0 / std::sqrt(static_cast<double>(features_)));
  std::normal_distribution<double> out(0.0, 1.0 / std::sqrt(static_cast<double>(hidden_)));
  for (Index i = 0; i < hidden_ * features_; ++i) x(i) = in(rng);
  const Index w2_offset = hidden_ * features_ + hidden_;
  for (Index i = 0; i < classes_ * hidden_; ++i) x(w2_offset + i) = out(rng);
  return x;
}

MatrixXd TwoLayerNet::logits(const ParamVector& x, const Eigen::Ref<const MatrixXd>& features) const {
  const double* p = x.data();
  const Eigen::Map<const MatrixXd> w1(p, hidden_, features_);
  const Eigen::Map<const Eigen::VectorXd> b1(p + hidden_ * features_, hidden_);
  p += hidden_ * features_ + hidden_;
  const Eigen::Map<const MatrixXd> w2(p, classes_, hidden_);
  const Eigen::Map<const Eigen::VectorXd> b2(p + classes_ * hidden_, classes_);

  const MatrixXd h = ((features * w1.transpose()).rowwise() + b1.transpose()).array().tanh();
  return (h * w2.transpose()).rowwise() + b2.transpose();
}

LossAndGradient TwoLayerNet::evaluate(const ParamVector& x, const Eigen::Ref<const MatrixXd>& features,
                                      std::span<const int> labels, bool with_gradient) const {
  const double* p = x.data();
  const Eigen::Map<const MatrixXd> w1(p, hidden_, features_);
  const Eigen::Map<const Eigen::VectorXd> b1(p + hidden_ * features_, hidden_);
  const Index w2_offset = hidden_ * features_ + hidden_;
  const Eigen::Map<const MatrixXd> w2(p + w2_offset, classes_, hidden_);
  const Eigen::Map<const Eigen::VectorXd> b2(p + w2_offset + classes_ * hidden_, classes_);

  const MatrixXd h = ((features * w1.transpose()).rowwise() + b1.transpose()).array().tanh();
  const MatrixXd scores = (h * w2.transpose()).rowwise() + b2.transpose();

  MatrixXd g;
  LossAndGradient out;
  out.loss = cross_entropy(scores, labels, with_gradient ? &g : nullptr) + 0.5 * l2_ * x.squaredNorm();
  if (!with_gradient) return out;

  out.gradient.resize(dimension());
  double* q = out.gradient.data();
  Eigen::Map<MatrixXd> dw1(q, hidden_, features_);
  Eigen::Map<Eigen::VectorXd> db1(q + hidden_ * features_, hidden_);
  Eigen::Map<MatrixXd> dw2(q + w2_offset, classes_, hidden_);
  Eigen::Map<Eigen::VectorXd> db2(q + w2_offset + classes_ * hidden_, classes_);

  dw2 = g.transpose() * h;
  db2 = g.colwise().sum().transpose();
  const MatrixXd da = ((g * w2).array() * (1.0 - h.array().square())).matrix();
  dw1 = da.transpose() * features;
  db1 = da.colwise().sum().transpose();
  out.gradient += l2_ * x;
  return out;
}

DatasetObjective::DatasetObjective(std::size_t client_id, std::shared_ptr<const Model> model,
                                   Dataset shard, std::size_t batch_size)
    : ClientObjective(client_id), model_(std::move(model)), shard_(std::move(shard)),
      batch_size_(batch_size) {
  if (!model_) throw Error("DatasetObjective: null model");
  if (shard_.size() == 0) throw Error("DatasetObjective: client " + std::to_string(client_id) + " has no samples");
  if (batch_size_ == 0) throw Error("DatasetObjective: batch size must be >= 1");
}

double DatasetObjective::loss(const ParamVector& x) const { return model_->loss(x, shard_); }

ParamVector DatasetObjective::gradient(const ParamVector& x, std::span<const std::size_t> batch) const {
  if (batch.size() == shard_.size()) return model_->gradient(x, shard_);
  MatrixXd rows(static_cast<Index>(batch.size()), shard_.features.cols());
  std::vector<int> labels(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    rows.row(static_cast<Index>(i)) = shard_.features.row(static_cast<Index>(batch[i]));
    labels[i] = shard_.labels[batch[i]];
  }
  return model_->evaluate(x, rows, labels, true).gradient;
}

}  // namespace fedsched
