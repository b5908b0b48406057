#pragma once

#include "pkd/types.hpp"

namespace pkd {

struct LogisticModel {
  Vector coefficients;
  double intercept = 0.0;

  Vector decision_function(const Matrix& x) const;
  Vector predict_proba(const Matrix& x) const;
};

struct LogisticConfig {
  double l2 = 1e-3;
  int iters = 5000;
};

// Mean logistic loss plus (l2 / 2) * |coefficients|^2; the intercept is not penalized.
double logistic_objective(const LogisticModel& model, const Matrix& x, const Labels& y, double l2);

// Gradient of logistic_objective: coefficients first, intercept last.
Vector logistic_gradient(const LogisticModel& model, const Matrix& x, const Labels& y, double l2);

// Full-batch gradient descent with step 1 / L, L an upper bound on the
// objective's curvature; stops after `iters` steps or once |gradient| < 1e-8.
LogisticModel train_logistic(const Matrix& x, const Labels& y, double l2, int iters);

inline LogisticModel train_logistic(const Matrix& x, const Labels& y, const LogisticConfig& config) {
  return train_logistic(x, y, config.l2, config.iters);
}

}  // namespace pkd
