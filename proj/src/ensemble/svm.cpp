#include "pkd/ensemble/svm.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "pkd/error.hpp"
#include "pkd/random.hpp"

namespace pkd {
namespace {

double softplus(double z) { return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }
double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

}  // namespace

Vector LinearSvmModel::decision_function(const Matrix& x) const {
  if (x.cols() != w.size()) throw Error(Errc::DimensionMismatch, "svm input width");
  return (x * w).array() + b;
}

Vector LinearSvmModel::predict_proba(const Matrix& x) const {
  return decision_function(x).unaryExpr([&](double f) { return sigmoid(platt_a * f + platt_b); });
}

PlattParams fit_platt(const Vector& scores, const Labels& y) {
  const Index n = scores.size();
  const double mean = scores.mean();
  const double spread = std::sqrt((scores.array() - mean).square().mean());
  if (!(spread > 0.0) || !std::isfinite(spread)) return {};

  const double n_pos = static_cast<double>((y.array() == 1).count());
  const double n_neg = static_cast<double>(n) - n_pos;
  const double hi = (n_pos + 1.0) / (n_pos + 2.0);
  const double lo = 1.0 / (n_neg + 2.0);
  const Vector f = (scores.array() - mean) / spread;
  const Vector t = y.cast<double>().unaryExpr([&](double label) { return label == 1.0 ? hi : lo; });

  const auto objective = [&](double a, double b) {
    double total = 0.0;
    for (Index i = 0; i < n; ++i) {
      const double z = a * f[i] + b;
      total += softplus(z) - t[i] * z;
    }
    return total;
  };

  double a = 0.0;
  double b = std::log((n_pos + 1.0) / (n_neg + 1.0));
  double value = objective(a, b);
  for (int iter = 0; iter < 100; ++iter) {
    double ga = 0.0, gb = 0.0, haa = 1e-12, hab = 0.0, hbb = 1e-12;
    for (Index i = 0; i < n; ++i) {
      const double p = sigmoid(a * f[i] + b);
      const double r = p - t[i];
      const double w = p * (1.0 - p);
      ga += r * f[i];
      gb += r;
      haa += w * f[i] * f[i];
      hab += w * f[i];
      hbb += w;
    }
    if (std::abs(ga) < 1e-10 && std::abs(gb) < 1e-10) break;
    const double det = haa * hbb - hab * hab;
    const double da = -(hbb * ga - hab * gb) / det;
    const double db = -(haa * gb - hab * ga) / det;
    const double slope = ga * da + gb * db;
    double step = 1.0;
    while (step > 1e-10) {
      const double candidate = objective(a + step * da, b + step * db);
      if (candidate <= value + 1e-4 * step * slope) {
        a += step * da;
        b += step * db;
        value = candidate;
        break;
      }
      step /= 2.0;
    }
    if (step <= 1e-10) break;
  }
  // Undo the standardization of the scores.
  return {a / spread, b - a * mean / spread};
}

LinearSvmModel train_linear_svm(const Dataset& train, double lambda, int epochs, std::uint64_t seed) {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) throw Error(Errc::InvalidHyperparameter, "lambda must be > 0");
  if (epochs < 0) throw Error(Errc::InvalidHyperparameter, "epochs must be >= 0");
  const Index positives = train.count_label(1);
  if (positives == 0 || positives == train.n()) {
    throw Error(Errc::DegenerateClass, "linear SVM needs both classes in the training set");
  }

  const Index d = train.d();
  // Weights for the d features plus the constant-1 bias feature.
  Vector w = Vector::Zero(d + 1);
  Rng rng(seed);
  std::vector<Index> order(static_cast<std::size_t>(train.n()));
  std::iota(order.begin(), order.end(), Index{0});
  double t = 0.0;
  for (int epoch = 0; epoch < epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (Index i : order) {
      t += 1.0;
      const double eta = 1.0 / (lambda * t);
      const double label = train.y[i] == 1 ? 1.0 : -1.0;
      const double margin = label * (train.x.row(i).dot(w.head(d)) + w[d]);
      w *= 1.0 - eta * lambda;
      if (margin < 1.0) {
        w.head(d) += eta * label * train.x.row(i).transpose();
        w[d] += eta * label;
      }
    }
  }

  LinearSvmModel model;
  model.w = w.head(d);
  model.b = w[d];
  const PlattParams platt = fit_platt(model.decision_function(train.x), train.y);
  model.platt_a = platt.a;
  model.platt_b = platt.b;
  return model;
}

}  // namespace pkd
