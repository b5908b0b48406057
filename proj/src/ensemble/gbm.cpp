#include "pkd/ensemble/gbm.hpp"

#include <cmath>

#include "pkd/error.hpp"

namespace pkd {
namespace {

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

}  // namespace

Vector GbmModel::decision_function(const Matrix& x) const {
  Vector score = Vector::Constant(x.rows(), initial_score);
  for (const auto& tree : trees) score += learning_rate * tree.predict(x);
  return score;
}

Vector GbmModel::predict_proba(const Matrix& x) const {
  return decision_function(x).unaryExpr([](double z) { return sigmoid(z); });
}

double logistic_loss(const Vector& scores, const Labels& y) {
  double total = 0.0;
  for (Index i = 0; i < scores.size(); ++i) {
    // log(1 + exp(-s)) for positives, log(1 + exp(s)) for negatives, overflow-safe
    const double margin = y[i] == 1 ? scores[i] : -scores[i];
    total += margin > 0 ? std::log1p(std::exp(-margin)) : -margin + std::log1p(std::exp(margin));
  }
  return total / static_cast<double>(scores.size());
}

GbmModel train_gbm(const Dataset& train, const GbmConfig& config, std::uint64_t /*seed*/) {
  if (config.n_rounds < 0) throw Error(Errc::InvalidHyperparameter, "n_rounds must be >= 0");
  if (config.max_depth < 1) throw Error(Errc::InvalidHyperparameter, "max_depth must be at least 1");
  if (!(config.learning_rate >= 0.0) || !std::isfinite(config.learning_rate)) {
    throw Error(Errc::InvalidHyperparameter, "learning_rate must be finite and >= 0");
  }
  const Index positives = train.count_label(1);
  if (positives == 0 || positives == train.n()) {
    throw Error(Errc::DegenerateClass, "gradient boosting needs both classes in the training set");
  }

  const double base_rate = static_cast<double>(positives) / static_cast<double>(train.n());
  GbmModel model;
  model.initial_score = std::log(base_rate / (1.0 - base_rate));
  model.learning_rate = config.learning_rate;
  if (config.n_rounds == 0) return model;

  const ColumnMatrix x = train.x;
  const PresortedColumns sorted(x);
  const auto n = static_cast<std::size_t>(train.n());
  Vector score = Vector::Constant(train.n(), model.initial_score);
  std::vector<double> residual(n);
  std::vector<double> curvature(n);

  const LeafValueFn newton_step = [&](std::span<const Index> rows) {
    double g = 0.0;
    double h = 0.0;
    for (Index r : rows) {
      g += residual[static_cast<std::size_t>(r)];
      h += curvature[static_cast<std::size_t>(r)];
    }
    return h > 1e-12 ? g / h : 0.0;
  };

  model.trees.reserve(static_cast<std::size_t>(config.n_rounds));
  for (int round = 0; round < config.n_rounds; ++round) {
    for (std::size_t i = 0; i < n; ++i) {
      const double p = sigmoid(score[static_cast<Index>(i)]);
      residual[i] = train.y[static_cast<Index>(i)] - p;
      curvature[i] = p * (1.0 - p);
    }
    DecisionTree tree = grow_tree_presorted(x, sorted, residual, config.max_depth, newton_step);
    for (Index i = 0; i < train.n(); ++i) score[i] += model.learning_rate * tree.predict_row(x.row(i));
    model.trees.push_back(std::move(tree));
  }
  return model;
}

}  // namespace pkd
