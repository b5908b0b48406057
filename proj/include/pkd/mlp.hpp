#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "pkd/dataset.hpp"
#include "pkd/error.hpp"
#include "pkd/random.hpp"
#include "pkd/types.hpp"

namespace pkd {

enum class Activation { Relu };

// Feed-forward binary classifier: ReLU hidden layers, two-way softmax output.
// weights[l] maps layer l (size layer_sizes[l]) to layer l+1.
template <typename Scalar>
struct Mlp {
  using MatrixType = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using VectorType = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  std::vector<Index> layer_sizes;
  std::vector<MatrixType> weights;
  std::vector<VectorType> biases;
  Activation hidden_activation = Activation::Relu;

  Index input_size() const { return layer_sizes.front(); }
  std::size_t n_transforms() const { return weights.size(); }

  // Total number of scalar parameters.
  Index size() const {
    Index total = 0;
    for (std::size_t l = 0; l < weights.size(); ++l) total += weights[l].size() + biases[l].size();
    return total;
  }

  Scalar squared_weight_norm() const {
    Scalar total = 0;
    for (const auto& w : weights) total += w.squaredNorm();
    return total;
  }

  void validate() const {
    if (layer_sizes.size() < 2 || layer_sizes.back() != 2) {
      throw Error(Errc::InvalidArchitecture, "need at least an input and a 2-unit output layer");
    }
    if (weights.size() != layer_sizes.size() - 1 || biases.size() != weights.size()) {
      throw Error(Errc::InvalidArchitecture, "parameter count does not match layer sizes");
    }
    for (std::size_t l = 0; l < weights.size(); ++l) {
      if (weights[l].rows() != layer_sizes[l + 1] || weights[l].cols() != layer_sizes[l] ||
          biases[l].size() != layer_sizes[l + 1]) {
        throw Error(Errc::InvalidArchitecture, "layer " + std::to_string(l) + " has the wrong shape");
      }
      if (!weights[l].allFinite() || !biases[l].allFinite()) {
        throw Error(Errc::InvalidArchitecture, "layer " + std::to_string(l) + " has non-finite parameters");
      }
    }
  }
};

using MlpModel = Mlp<double>;

template <typename Scalar>
struct MlpGradients {
  std::vector<typename Mlp<Scalar>::MatrixType> weights;
  std::vector<typename Mlp<Scalar>::VectorType> biases;
};

template <typename Scalar>
struct LossAndGradients {
  Scalar loss;
  MlpGradients<Scalar> gradients;
  Index n_correct = 0;  // samples the current parameters classify correctly (ties positive)
};

struct TrainConfig {
  int epochs = 200;
  int batch_size = 32;
  double learning_rate = 0.01;
  double l2 = 0.0;
  std::uint64_t seed = 0;

  void validate() const {
    if (epochs < 1 || batch_size < 1) throw Error(Errc::InvalidHyperparameter, "epochs and batch_size must be positive");
    if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
      throw Error(Errc::InvalidHyperparameter, "learning_rate must be finite and non-negative");
    }
    if (!(l2 >= 0.0) || !std::isfinite(l2)) throw Error(Errc::InvalidHyperparameter, "l2 must be finite and non-negative");
  }
};

struct TrainHistory {
  std::vector<double> loss;
  std::vector<double> accuracy;
};

// He-normal weights (variance 2 / fan_in), zero biases.
template <typename Scalar = double>
Mlp<Scalar> init_mlp(const std::vector<Index>& layer_sizes, std::uint64_t seed) {
  if (layer_sizes.size() < 2) throw Error(Errc::InvalidArchitecture, "need at least two layers");
  if (layer_sizes.back() != 2) throw Error(Errc::InvalidArchitecture, "output layer must have 2 units");
  for (Index size : layer_sizes) {
    if (size < 1) throw Error(Errc::InvalidArchitecture, "layer sizes must be positive");
  }
  Mlp<Scalar> model;
  model.layer_sizes = layer_sizes;
  Rng rng(seed);
  for (std::size_t l = 0; l + 1 < layer_sizes.size(); ++l) {
    std::normal_distribution<double> normal(0.0, std::sqrt(2.0 / static_cast<double>(layer_sizes[l])));
    typename Mlp<Scalar>::MatrixType w(layer_sizes[l + 1], layer_sizes[l]);
    for (Index r = 0; r < w.rows(); ++r) {
      for (Index c = 0; c < w.cols(); ++c) w(r, c) = static_cast<Scalar>(normal(rng));
    }
    model.weights.push_back(std::move(w));
    model.biases.push_back(Mlp<Scalar>::VectorType::Zero(layer_sizes[l + 1]));
  }
  return model;
}

namespace detail {

// Pre-activations of every layer for a batch (rows are samples).
template <typename Scalar, typename Derived>
std::vector<RowMatrix<Scalar>> forward_logits(const Mlp<Scalar>& model, const Eigen::MatrixBase<Derived>& batch) {
  if (batch.cols() != model.input_size()) {
    throw Error(Errc::DimensionMismatch, "model expects " + std::to_string(model.input_size()) +
                                             " features, got " + std::to_string(batch.cols()));
  }
  std::vector<RowMatrix<Scalar>> z;
  z.reserve(model.n_transforms());
  RowMatrix<Scalar> activation = batch.template cast<Scalar>();
  for (std::size_t l = 0; l < model.n_transforms(); ++l) {
    RowMatrix<Scalar> pre = activation * model.weights[l].transpose();
    pre.rowwise() += model.biases[l].transpose();
    if (l + 1 < model.n_transforms()) activation = pre.cwiseMax(Scalar(0));
    z.push_back(std::move(pre));
  }
  return z;
}

template <typename Scalar>
RowMatrix<Scalar> softmax_rows(const RowMatrix<Scalar>& logits) {
  RowMatrix<Scalar> shifted = logits.colwise() - logits.rowwise().maxCoeff();
  RowMatrix<Scalar> e = shifted.array().exp().matrix();
  return e.array().colwise() / e.rowwise().sum().array();
}

}  // namespace detail

// Class probabilities, one row per sample: column 0 negative, column 1 positive.
template <typename Scalar, typename Derived>
RowMatrix<Scalar> forward(const Mlp<Scalar>& model, const Eigen::MatrixBase<Derived>& batch) {
  return detail::softmax_rows<Scalar>(detail::forward_logits(model, batch).back());
}

// Mean cross-entropy plus (l2 / 2) * sum of squared weights (biases unpenalized),
// with exact backpropagated gradients.
template <typename Scalar, typename Derived>
LossAndGradients<Scalar> loss_and_gradients(const Mlp<Scalar>& model, const Eigen::MatrixBase<Derived>& batch,
                                            const Eigen::Ref<const Labels>& labels, Scalar l2 = Scalar(0)) {
  const Index m = batch.rows();
  if (m == 0) throw Error(Errc::EmptyBatch, "loss requires at least one sample");
  if (labels.size() != m) throw Error(Errc::DimensionMismatch, "label count differs from batch rows");

  const auto z = detail::forward_logits(model, batch);
  const RowMatrix<Scalar>& logits = z.back();
  const auto L = model.n_transforms();

  Scalar loss = 0;
  Index correct = 0;
  RowMatrix<Scalar> delta = detail::softmax_rows<Scalar>(logits);
  for (Index i = 0; i < m; ++i) {
    const int label = labels[i];
    if (label != 0 && label != 1) throw Error(Errc::DimensionMismatch, "labels must be 0 or 1");
    const Scalar top = logits.row(i).maxCoeff();
    const Scalar log_norm = top + std::log((logits.row(i).array() - top).exp().sum());
    loss -= logits(i, label) - log_norm;
    if ((delta(i, 1) >= Scalar(0.5)) == (label == 1)) ++correct;
    delta(i, label) -= Scalar(1);
  }
  loss /= static_cast<Scalar>(m);
  loss += l2 / Scalar(2) * model.squared_weight_norm();
  delta /= static_cast<Scalar>(m);

  LossAndGradients<Scalar> out{loss, {}, correct};
  out.gradients.weights.resize(L);
  out.gradients.biases.resize(L);
  for (std::size_t l = L; l-- > 0;) {
    const RowMatrix<Scalar> input =
        l == 0 ? RowMatrix<Scalar>(batch.template cast<Scalar>()) : RowMatrix<Scalar>(z[l - 1].cwiseMax(Scalar(0)));
    out.gradients.weights[l] = delta.transpose() * input + l2 * model.weights[l];
    out.gradients.biases[l] = delta.colwise().sum().transpose();
    if (l > 0) {
      RowMatrix<Scalar> back = delta * model.weights[l];
      delta = (z[l - 1].array() > Scalar(0)).select(back, Scalar(0));
    }
  }
  return out;
}

template <typename Scalar, typename Derived>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> predict_proba(const Mlp<Scalar>& model,
                                                        const Eigen::MatrixBase<Derived>& batch) {
  return forward(model, batch).col(1);
}

// Label 1 iff the positive-class probability is >= threshold.
template <typename Scalar, typename Derived>
Labels predict(const Mlp<Scalar>& model, const Eigen::MatrixBase<Derived>& batch, double threshold = 0.5) {
  const auto p = predict_proba(model, batch);
  return (p.array().template cast<double>() >= threshold).template cast<int>();
}

// Mini-batch SGD; the sample order is reshuffled every epoch from config.seed.
template <typename Scalar>
std::pair<Mlp<Scalar>, TrainHistory> train(Mlp<Scalar> model, const Dataset& data, const TrainConfig& config) {
  config.validate();
  model.validate();
  if (data.n() == 0) throw Error(Errc::EmptyDataset, "training set is empty");
  if (data.d() != model.input_size()) {
    throw Error(Errc::DimensionMismatch, "model expects " + std::to_string(model.input_size()) +
                                             " features, dataset has " + std::to_string(data.d()));
  }
  const Scalar lr = static_cast<Scalar>(config.learning_rate);
  const Scalar l2 = static_cast<Scalar>(config.l2);
  Rng rng(config.seed);
  std::vector<Index> order(static_cast<std::size_t>(data.n()));
  std::iota(order.begin(), order.end(), Index{0});

  TrainHistory history;
  RowMatrix<Scalar> batch;
  Labels batch_labels;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;
    Index correct = 0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(config.batch_size)) {
      const std::size_t stop = std::min(order.size(), start + static_cast<std::size_t>(config.batch_size));
      const auto m = static_cast<Index>(stop - start);
      batch.resize(m, data.d());
      batch_labels.resize(m);
      for (Index r = 0; r < m; ++r) {
        const Index row = order[start + static_cast<std::size_t>(r)];
        batch.row(r) = data.x.row(row).template cast<Scalar>();
        batch_labels[r] = data.y[row];
      }
      auto step = loss_and_gradients(model, batch, batch_labels, l2);
      if (!std::isfinite(static_cast<double>(step.loss))) {
        throw Error(Errc::NonFiniteLoss, "loss diverged at epoch " + std::to_string(epoch) +
                                             "; lower the learning rate");
      }
      correct += step.n_correct;
      epoch_loss += static_cast<double>(step.loss) * static_cast<double>(m);
      for (std::size_t l = 0; l < model.n_transforms(); ++l) {
        model.weights[l] -= lr * step.gradients.weights[l];
        model.biases[l] -= lr * step.gradients.biases[l];
      }
    }
    history.loss.push_back(epoch_loss / static_cast<double>(data.n()));
    history.accuracy.push_back(static_cast<double>(correct) / static_cast<double>(data.n()));
  }
  return {std::move(model), std::move(history)};
}

extern template struct Mlp<double>;
extern template struct Mlp<float>;

}  // namespace pkd
