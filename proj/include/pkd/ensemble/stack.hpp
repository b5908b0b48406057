#pragma once

#include <cstdint>
#include <functional>
#include <span>

#include "pkd/dataset.hpp"
#include "pkd/ensemble/forest.hpp"
#include "pkd/ensemble/gbm.hpp"
#include "pkd/ensemble/logistic.hpp"
#include "pkd/ensemble/svm.hpp"

namespace pkd {

// Called once per cross-validation fold with the rows the base learners were
// fit on and the held-out rows they then scored.
using FoldObserver =
    std::function<void(int fold, std::span<const Index> fit_rows, std::span<const Index> heldout_rows)>;

struct StackConfig {
  int n_folds = 5;
  SvmConfig svm;
  ForestConfig forest;
  GbmConfig gbm;
  LogisticConfig meta{1e-3, 5000};

  // Test hooks.
  FoldObserver on_fold;
  bool constant_base_probabilities = false;  // every base learner reports 0.5
};

struct StackEnsembleModel {
  LinearSvmModel svm;
  RandomForestModel forest;
  GbmModel gbm;
  LogisticModel meta;
  int n_folds = 5;

  // n x 3: SVM, random forest and boosting positive-class probabilities.
  Matrix base_probabilities(const Matrix& x) const;
};

struct StackTraining {
  StackEnsembleModel model;
  Matrix out_of_fold;      // n_train x 3, row i scored by learners never fit on row i
  std::vector<int> fold;   // fold index of every training row
};

// Stratified k-fold out-of-fold stacking: base learners are fit on each fold's
// complement and score the held-out fold, the logistic meta-classifier learns
// from those scores, and the base learners are finally refit on all rows.
StackTraining train_stack_detailed(const Dataset& train, const StackConfig& config, std::uint64_t seed);

inline StackEnsembleModel train_stack(const Dataset& train, const StackConfig& config, std::uint64_t seed) {
  return train_stack_detailed(train, config, seed).model;
}

struct StackPrediction {
  Vector probability;
  Labels label;  // 1 iff probability >= 0.5
};

StackPrediction predict_stack(const StackEnsembleModel& model, const Matrix& x);

// Stratified assignment of rows to folds: each class is shuffled and dealt round-robin.
std::vector<int> stratified_folds(const Labels& y, int n_folds, std::uint64_t seed);

}  // namespace pkd
