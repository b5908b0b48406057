#include "pkd/ensemble/stack.hpp"

#include <algorithm>

#include "pkd/error.hpp"
#include "pkd/random.hpp"

namespace pkd {
namespace {

enum Learner : std::uint64_t { kSvm = 1, kForest = 2, kGbm = 3 };

std::uint64_t learner_seed(std::uint64_t seed, int fold, Learner learner) {
  return derive_seed(derive_seed(seed, static_cast<std::uint64_t>(fold) + 1), learner);
}

}  // namespace

Matrix StackEnsembleModel::base_probabilities(const Matrix& x) const {
  Matrix out(x.rows(), 3);
  out.col(0) = svm.predict_proba(x);
  out.col(1) = forest.predict_proba(x);
  out.col(2) = gbm.predict_proba(x);
  return out;
}

std::vector<int> stratified_folds(const Labels& y, int n_folds, std::uint64_t seed) {
  const Index positives = (y.array() == 1).count();
  const Index negatives = y.size() - positives;
  if (positives == 0 || negatives == 0) throw Error(Errc::DegenerateClass, "stacking needs both classes");
  if (n_folds < 2 || n_folds > std::min(positives, negatives)) {
    throw Error(Errc::InvalidFolds, "n_folds must be in [2, " + std::to_string(std::min(positives, negatives)) +
                                        "], got " + std::to_string(n_folds));
  }
  Rng rng(seed);
  std::vector<int> fold(static_cast<std::size_t>(y.size()), -1);
  for (int label : {0, 1}) {
    std::vector<Index> members;
    for (Index i = 0; i < y.size(); ++i) {
      if (y[i] == label) members.push_back(i);
    }
    std::shuffle(members.begin(), members.end(), rng);
    for (std::size_t k = 0; k < members.size(); ++k) {
      fold[static_cast<std::size_t>(members[k])] = static_cast<int>(k % static_cast<std::size_t>(n_folds));
    }
  }
  return fold;
}

StackTraining train_stack_detailed(const Dataset& train, const StackConfig& config, std::uint64_t seed) {
  StackTraining out;
  out.fold = stratified_folds(train.y, config.n_folds, derive_seed(seed, 0));
  out.out_of_fold = Matrix::Constant(train.n(), 3, 0.5);

  const auto fit_all = [&](const Dataset& rows, int fold, StackEnsembleModel& model) {
    model.svm = train_linear_svm(rows, config.svm, learner_seed(seed, fold, kSvm));
    model.forest = train_random_forest(rows, config.forest, learner_seed(seed, fold, kForest));
    model.gbm = train_gbm(rows, config.gbm, learner_seed(seed, fold, kGbm));
  };

  for (int k = 0; k < config.n_folds; ++k) {
    std::vector<Index> fit_rows;
    std::vector<Index> heldout_rows;
    for (Index i = 0; i < train.n(); ++i) {
      (out.fold[static_cast<std::size_t>(i)] == k ? heldout_rows : fit_rows).push_back(i);
    }
    if (config.on_fold) config.on_fold(k, fit_rows, heldout_rows);
    if (config.constant_base_probabilities) continue;

    StackEnsembleModel fold_model;
    fit_all(train.subset(fit_rows), k, fold_model);
    const Matrix heldout_probs = fold_model.base_probabilities(train.subset(heldout_rows).x);
    for (std::size_t r = 0; r < heldout_rows.size(); ++r) {
      out.out_of_fold.row(heldout_rows[r]) = heldout_probs.row(static_cast<Index>(r));
    }
  }

  out.model.n_folds = config.n_folds;
  out.model.meta = train_logistic(out.out_of_fold, train.y, config.meta);
  fit_all(train, config.n_folds, out.model);
  return out;
}

StackPrediction predict_stack(const StackEnsembleModel& model, const Matrix& x) {
  if (x.cols() != model.svm.w.size()) {
    throw Error(Errc::DimensionMismatch, "stack expects " + std::to_string(model.svm.w.size()) +
                                             " features, got " + std::to_string(x.cols()));
  }
  StackPrediction out;
  out.probability = model.meta.predict_proba(model.base_probabilities(x));
  out.label = (out.probability.array() >= 0.5).cast<int>();
  return out;
}

}  // namespace pkd
