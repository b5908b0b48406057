#include "pkd/ensemble/logistic.hpp"

#include <cmath>

#include "pkd/error.hpp"

namespace pkd {
namespace {

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

void check_inputs(const Matrix& x, const Labels& y) {
  if (x.rows() != y.size()) {
    throw Error(Errc::DimensionMismatch, "x has " + std::to_string(x.rows()) + " rows but y has " +
                                             std::to_string(y.size()) + " labels");
  }
}

}  // namespace

Vector LogisticModel::decision_function(const Matrix& x) const {
  if (x.cols() != coefficients.size()) throw Error(Errc::DimensionMismatch, "logistic model input width");
  return (x * coefficients).array() + intercept;
}

Vector LogisticModel::predict_proba(const Matrix& x) const {
  return decision_function(x).unaryExpr([](double z) { return sigmoid(z); });
}

double logistic_objective(const LogisticModel& model, const Matrix& x, const Labels& y, double l2) {
  check_inputs(x, y);
  const Vector z = model.decision_function(x);
  double loss = 0.0;
  for (Index i = 0; i < z.size(); ++i) {
    const double margin = y[i] == 1 ? z[i] : -z[i];
    loss += margin > 0 ? std::log1p(std::exp(-margin)) : -margin + std::log1p(std::exp(margin));
  }
  return loss / static_cast<double>(z.size()) + 0.5 * l2 * model.coefficients.squaredNorm();
}

Vector logistic_gradient(const LogisticModel& model, const Matrix& x, const Labels& y, double l2) {
  check_inputs(x, y);
  const Vector residual = model.predict_proba(x) - y.cast<double>();
  const double n = static_cast<double>(x.rows());
  Vector grad(x.cols() + 1);
  grad.head(x.cols()) = x.transpose() * residual / n + l2 * model.coefficients;
  grad[x.cols()] = residual.sum() / n;
  return grad;
}

LogisticModel train_logistic(const Matrix& x, const Labels& y, double l2, int iters) {
  check_inputs(x, y);
  if (x.rows() < 2) throw Error(Errc::DegenerateClass, "logistic regression needs at least two rows");
  const Index positives = (y.array() == 1).count();
  if (positives == 0 || positives == y.size()) {
    throw Error(Errc::DegenerateClass, "logistic regression needs both classes");
  }
  if (!(l2 >= 0.0) || iters < 0) throw Error(Errc::InvalidHyperparameter, "l2 must be >= 0 and iters >= 0");

  // Hessian <= 0.25 * X~'X~ / n + l2 I with X~ = [X 1]; its trace bounds the top eigenvalue.
  const double curvature = 0.25 * (x.squaredNorm() / static_cast<double>(x.rows()) + 1.0) + l2;
  const double step = 1.0 / curvature;

  LogisticModel model{Vector::Zero(x.cols()), 0.0};
  for (int it = 0; it < iters; ++it) {
    const Vector grad = logistic_gradient(model, x, y, l2);
    if (grad.norm() < 1e-8) break;
    model.coefficients -= step * grad.head(x.cols());
    model.intercept -= step * grad[x.cols()];
  }
  return model;
}

}  // namespace pkd
