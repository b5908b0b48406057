#pragma once

#include <cstdint>
#include <vector>

#include "pkd/dataset.hpp"
#include "pkd/ensemble/tree.hpp"

namespace pkd {

struct GbmConfig {
  int n_rounds = 100;
  int max_depth = 3;
  double learning_rate = 0.1;
};

// Additive log-odds model: score = initial_score + learning_rate * sum(tree outputs).
struct GbmModel {
  double initial_score = 0.0;
  std::vector<DecisionTree> trees;
  double learning_rate = 0.1;

  Vector decision_function(const Matrix& x) const;
  Vector predict_proba(const Matrix& x) const;
};

// Each round fits a regression tree to the logistic-loss residuals y - p, with
// Newton leaf values sum(residual) / sum(p * (1 - p)). `seed` is recorded for
// interface symmetry; fitting uses every row and feature, so it is deterministic.
GbmModel train_gbm(const Dataset& train, const GbmConfig& config, std::uint64_t seed);

double logistic_loss(const Vector& scores, const Labels& y);

}  // namespace pkd
