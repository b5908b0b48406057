#pragma once

#include <cstdint>

#include "pkd/dataset.hpp"

namespace pkd {

struct SvmConfig {
  double lambda = 1e-4;
  int epochs = 20;
};

// Linear max-margin classifier with a Platt sigmoid on its decision score:
// P(y = 1) = sigmoid(platt_a * (w.x + b) + platt_b).
struct LinearSvmModel {
  Vector w;
  double b = 0.0;
  double platt_a = 0.0;
  double platt_b = 0.0;

  Vector decision_function(const Matrix& x) const;
  Vector predict_proba(const Matrix& x) const;
};

struct PlattParams {
  double a = 0.0;
  double b = 0.0;
};

// Newton fit of a sigmoid to (score, label) pairs against Platt's smoothed
// targets. Scores with no spread give a = b = 0 (probability 0.5).
PlattParams fit_platt(const Vector& scores, const Labels& y);

// Pegasos stochastic subgradient descent on the L2-regularized hinge loss,
// step 1 / (lambda * t), one shuffled pass over the rows per epoch. The bias is
// learned as the weight of a constant-1 feature.
LinearSvmModel train_linear_svm(const Dataset& train, double lambda, int epochs, std::uint64_t seed);

inline LinearSvmModel train_linear_svm(const Dataset& train, const SvmConfig& config, std::uint64_t seed) {
  return train_linear_svm(train, config.lambda, config.epochs, seed);
}

}  // namespace pkd
