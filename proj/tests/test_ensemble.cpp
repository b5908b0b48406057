#include <functional>
#include <numeric>
#include <set>

#include "helpers.hpp"
#include "pkd/ensemble/forest.hpp"
#include "pkd/ensemble/gbm.hpp"
#include "pkd/ensemble/logistic.hpp"
#include "pkd/ensemble/stack.hpp"
#include "pkd/ensemble/svm.hpp"
#include "pkd/synthgen.hpp"

using namespace pkd;
using pkd::test::code_of;

namespace {

Dataset line_data() {
  return test::make_dataset(test::column({-2, -1, 1, 2}), test::labels({0, 0, 1, 1}));
}

Dataset desk_data(std::uint64_t seed, Index n = 150, double separation = 1.0) {
  return generate({n, 20, 5, 0.3, separation, seed}).data;
}

StackConfig small_stack() {
  StackConfig config;
  config.n_folds = 3;
  config.forest.n_trees = 15;
  config.forest.max_depth = 6;
  config.gbm.n_rounds = 20;
  return config;
}

double gini_mass(std::span<const Index> rows, const Labels& y) {
  if (rows.empty()) return 0.0;
  double pos = 0;
  for (Index r : rows) pos += y[r];
  const double n = static_cast<double>(rows.size());
  const double p = pos / n;
  return n * 2.0 * p * (1.0 - p);
}

// Walks training rows down the tree and checks every split against its parent.
void check_gini_splits(const DecisionTree& tree, const Matrix& x, const Labels& y, int node,
                       const std::vector<Index>& rows, int& checked) {
  const TreeNode& at = tree.nodes[static_cast<std::size_t>(node)];
  if (at.is_leaf()) return;
  std::vector<Index> left, right;
  for (Index r : rows) (x(r, at.feature) <= at.threshold ? left : right).push_back(r);
  CHECK(gini_mass(left, y) + gini_mass(right, y) <= gini_mass(rows, y) + 1e-12);
  ++checked;
  check_gini_splits(tree, x, y, at.left, left, checked);
  check_gini_splits(tree, x, y, at.right, right, checked);
}

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

}  // namespace

TEST_SUITE("ensemble") {
  TEST_CASE("svm separates separable 1D data") {
    const Dataset d = line_data();
    const LinearSvmModel m = train_linear_svm(d, 0.01, 200, 3);
    const Vector score = m.decision_function(d.x);
    for (Index i = 0; i < d.n(); ++i) CHECK((score[i] > 0) == (d.y[i] == 1));
    const Vector p = m.predict_proba(d.x);
    CHECK(p[3] > p[0]);
    CHECK(m.w.allFinite());
  }

  TEST_CASE("svm with zero epochs is the null model") {
    const LinearSvmModel m = train_linear_svm(line_data(), 0.01, 0, 3);
    CHECK(m.w.isZero(0.0));
    CHECK(m.b == 0.0);
    CHECK(m.predict_proba(test::column({-5, 0, 7})).isConstant(0.5, 0.0));
  }

  TEST_CASE("svm with huge lambda has a tiny weight vector") {
    const LinearSvmModel m = train_linear_svm(desk_data(1), 1e6, 20, 3);
    CHECK(m.w.norm() < 1e-2);
  }

  TEST_CASE("svm errors") {
    CHECK(code_of([] { train_linear_svm(line_data(), 0.0, 5, 1); }) == Errc::InvalidHyperparameter);
    Dataset one_class = line_data();
    one_class.y.setOnes();
    CHECK(code_of([&] { train_linear_svm(one_class, 0.1, 5, 1); }) == Errc::DegenerateClass);
  }

  TEST_CASE("platt calibration is monotone in the score") {
    const Vector scores = (Vector(6) << -3, -2, -1, 1, 2, 3).finished();
    const PlattParams p = fit_platt(scores, test::labels({0, 0, 1, 0, 1, 1}));
    CHECK(p.a > 0.0);
    const PlattParams flat = fit_platt(Vector::Constant(4, 1.5), test::labels({0, 1, 0, 1}));
    CHECK(flat.a == 0.0);
    CHECK(flat.b == 0.0);
  }

  TEST_CASE("forest on pure data predicts 1") {
    Dataset d = desk_data(2, 40);
    d.y.setOnes();
    ForestConfig config;
    config.n_trees = 5;
    const RandomForestModel m = train_random_forest(d, config, 1);
    CHECK(m.predict_proba(d.x).isConstant(1.0, 0.0));
  }

  TEST_CASE("single stump splits between the middle points") {
    ForestConfig config;
    config.n_trees = 1;
    config.max_depth = 1;
    config.bootstrap = false;
    const Dataset d = line_data();
    const RandomForestModel m = train_random_forest(d, config, 1);
    REQUIRE(m.trees.size() == 1);
    const TreeNode& root = m.trees[0].nodes[0];
    CHECK(root.feature == 0);
    CHECK(root.threshold == 0.0);
    CHECK(m.trees[0].depth() == 1);
    const Vector p = m.predict_proba(d.x);
    for (Index i = 0; i < d.n(); ++i) CHECK((p[i] >= 0.5) == (d.y[i] == 1));
  }

  TEST_CASE("forest hyperparameter bounds") {
    ForestConfig config;
    config.n_trees = 0;
    CHECK(code_of([&] { train_random_forest(line_data(), config, 1); }) == Errc::InvalidHyperparameter);
    config.n_trees = 2;
    config.max_depth = 0;
    CHECK(code_of([&] { train_random_forest(line_data(), config, 1); }) == Errc::InvalidHyperparameter);
  }

  TEST_CASE("forest probability is the mean of its trees") {
    const Dataset d = desk_data(3);
    ForestConfig config;
    config.n_trees = 12;
    config.max_depth = 5;
    const RandomForestModel m = train_random_forest(d, config, 4);
    Vector sum = Vector::Zero(d.n());
    for (std::size_t t = 0; t < m.trees.size(); ++t) {
      RandomForestModel one = m;
      one.trees = {m.trees[t]};
      const Vector single = one.predict_proba(d.x);
      CHECK(single == m.trees[t].predict(d.x));
      sum += single;
      for (const TreeNode& node : m.trees[t].nodes) {
        if (node.is_leaf()) {
          CHECK(node.value >= 0.0);
          CHECK(node.value <= 1.0);
        } else {
          CHECK(node.feature < d.d());
        }
      }
      CHECK(m.trees[t].depth() <= 5);
    }
    CHECK((sum / 12.0 - m.predict_proba(d.x)).cwiseAbs().maxCoeff() < 1e-12);
  }

  TEST_CASE("every chosen split lowers weighted gini") {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      const Dataset d = desk_data(10 + seed, 80);
      ForestConfig config;
      config.n_trees = 3;
      config.max_depth = 8;
      config.bootstrap = false;
      const RandomForestModel m = train_random_forest(d, config, seed);
      std::vector<Index> rows(static_cast<std::size_t>(d.n()));
      std::iota(rows.begin(), rows.end(), Index{0});
      for (const auto& tree : m.trees) {
        int checked = 0;
        check_gini_splits(tree, d.x, d.y, 0, rows, checked);
        CHECK(checked > 0);
      }
    }
  }

  TEST_CASE("forest is deterministic per seed") {
    const Dataset d = desk_data(4);
    ForestConfig config;
    config.n_trees = 6;
    const Vector a = train_random_forest(d, config, 9).predict_proba(d.x);
    CHECK(a == train_random_forest(d, config, 9).predict_proba(d.x));
  }

  TEST_CASE("boosting with no rounds predicts the base rate") {
    const Dataset d = test::make_dataset(test::column({1, 2, 3, 4, 5, 6, 7, 8}), test::labels({0, 1, 0, 0, 0, 0, 1, 0}));
    GbmConfig config;
    config.n_rounds = 0;
    const GbmModel m = train_gbm(d, config, 1);
    CHECK(m.predict_proba(d.x).isConstant(0.25, 1e-12));
    config.n_rounds = 10;
    config.learning_rate = 0.0;
    CHECK(train_gbm(d, config, 1).predict_proba(d.x).isConstant(0.25, 1e-12));
  }

  TEST_CASE("boosting fits separable data") {
    const Dataset d = test::make_dataset(test::column({-3, -2, -1, 1, 2, 3}), test::labels({0, 0, 0, 1, 1, 1}));
    const GbmModel m = train_gbm(d, {50, 2, 0.1}, 1);
    const Vector p = m.predict_proba(d.x);
    for (Index i = 0; i < d.n(); ++i) CHECK((p[i] >= 0.5) == (d.y[i] == 1));
  }

  TEST_CASE("boosting training loss never increases") {
    for (double lr : {0.05, 0.1, 0.3}) {
      for (std::uint64_t seed = 0; seed < 3; ++seed) {
        const Dataset d = desk_data(20 + seed, 120);
        const GbmModel m = train_gbm(d, {30, 3, lr}, seed);
        double previous = INFINITY;
        for (std::size_t r = 0; r <= m.trees.size(); ++r) {
          GbmModel prefix = m;
          prefix.trees.resize(r);
          const double loss = logistic_loss(prefix.decision_function(d.x), d.y);
          CHECK(loss <= previous + 1e-12);
          previous = loss;
        }
      }
    }
  }

  TEST_CASE("boosting errors") {
    Dataset d = line_data();
    CHECK(code_of([&] { train_gbm(d, {-1, 3, 0.1}, 1); }) == Errc::InvalidHyperparameter);
    d.y.setZero();
    CHECK(code_of([&] { train_gbm(d, {5, 3, 0.1}, 1); }) == Errc::DegenerateClass);
  }

  TEST_CASE("logistic regression on symmetric data") {
    const LogisticModel m = train_logistic(Matrix::Zero(6, 2), test::labels({0, 1, 0, 1, 0, 1}), 1e-3, 500);
    CHECK(m.coefficients.cwiseAbs().maxCoeff() < 1e-9);
    CHECK(std::abs(m.intercept) < 1e-9);
    CHECK(m.predict_proba(Matrix::Zero(1, 2))[0] == doctest::Approx(0.5));
  }

  TEST_CASE("logistic regression learns a label copy") {
    const Matrix x = test::column({0, 1, 0, 1, 1, 0, 0, 1});
    const Labels y = test::labels({0, 1, 0, 1, 1, 0, 0, 1});
    const LogisticModel m = train_logistic(x, y, 0.01, 5000);
    CHECK(m.coefficients[0] > 0.0);
    const Vector p = m.predict_proba(x);
    for (Index i = 0; i < y.size(); ++i) {
      if (y[i] == 1) CHECK(p[i] > 0.9);
    }
  }

  TEST_CASE("logistic regression errors") {
    CHECK(code_of([] { train_logistic(Matrix::Zero(3, 1), test::labels({0, 1}), 0.0, 10); }) == Errc::DimensionMismatch);
    CHECK(code_of([] { train_logistic(Matrix::Zero(3, 1), test::labels({1, 1, 1}), 0.0, 10); }) == Errc::DegenerateClass);
  }

  TEST_CASE("logistic gradient matches finite differences") {
    Rng rng(31);
    std::uniform_int_distribution<int> coin(0, 1);
    for (int trial = 0; trial < 20; ++trial) {
      const Index n = 5 + trial, k = 1 + trial % 4;
      const Matrix x = test::random_matrix(n, k, rng);
      Labels y(n);
      for (Index i = 0; i < n; ++i) y[i] = coin(rng);
      LogisticModel m;
      m.coefficients = test::random_matrix(k, 1, rng).col(0);
      m.intercept = std::normal_distribution<double>()(rng);
      const double l2 = trial % 2 ? 0.1 : 0.0;
      const Vector g = logistic_gradient(m, x, y, l2);
      REQUIRE(g.size() == k + 1);
      const double eps = 1e-5;
      for (Index j = 0; j <= k; ++j) {
        LogisticModel plus = m, minus = m;
        (j < k ? plus.coefficients[j] : plus.intercept) += eps;
        (j < k ? minus.coefficients[j] : minus.intercept) -= eps;
        const double numeric = (logistic_objective(plus, x, y, l2) - logistic_objective(minus, x, y, l2)) / (2 * eps);
        const double diff = std::abs(numeric - g[j]);
        CHECK((diff <= 1e-9 || diff / std::max(std::abs(numeric), std::abs(g[j])) < 1e-6));
      }
    }
  }

  TEST_CASE("stratified folds are balanced and validated") {
    const Labels y = desk_data(5).y;
    const auto fold = stratified_folds(y, 5, 1);
    for (int label : {0, 1}) {
      std::vector<int> counts(5, 0);
      for (Index i = 0; i < y.size(); ++i) {
        if (y[i] == label) ++counts[static_cast<std::size_t>(fold[static_cast<std::size_t>(i)])];
      }
      CHECK(*std::max_element(counts.begin(), counts.end()) - *std::min_element(counts.begin(), counts.end()) <= 1);
    }
    CHECK(code_of([&] { stratified_folds(y, 1, 1); }) == Errc::InvalidFolds);
    CHECK(code_of([&] { stratified_folds(y, static_cast<int>(y.size()) + 1, 1); }) == Errc::InvalidFolds);
  }

  TEST_CASE("stack out-of-fold matrix and fold bookkeeping") {
    const Dataset d = desk_data(6);
    StackConfig config = small_stack();
    std::vector<std::set<Index>> fit_sets, heldout_sets;
    config.on_fold = [&](int fold, std::span<const Index> fit, std::span<const Index> heldout) {
      CHECK(fold == static_cast<int>(fit_sets.size()));
      fit_sets.emplace_back(fit.begin(), fit.end());
      heldout_sets.emplace_back(heldout.begin(), heldout.end());
    };
    const StackTraining t = train_stack_detailed(d, config, 8);
    CHECK(t.out_of_fold.rows() == d.n());
    CHECK(t.out_of_fold.cols() == 3);
    CHECK(t.out_of_fold.minCoeff() >= 0.0);
    CHECK(t.out_of_fold.maxCoeff() <= 1.0);
    CHECK(t.model.meta.coefficients.size() == 3);
    REQUIRE(fit_sets.size() == 3);

    std::vector<int> seen(static_cast<std::size_t>(d.n()), 0);
    for (std::size_t k = 0; k < 3; ++k) {
      CHECK(fit_sets[k].size() + heldout_sets[k].size() == static_cast<std::size_t>(d.n()));
      for (Index r : heldout_sets[k]) {
        CHECK(fit_sets[k].count(r) == 0);
        CHECK(t.fold[static_cast<std::size_t>(r)] == static_cast<int>(k));
        ++seen[static_cast<std::size_t>(r)];
      }
    }
    CHECK(std::all_of(seen.begin(), seen.end(), [](int c) { return c == 1; }));
  }

  TEST_CASE("out-of-fold scores come from models not fit on the row") {
    // Refit fold 0's learners by hand and compare with the recorded scores.
    const Dataset d = desk_data(7, 90);
    const StackConfig config = small_stack();
    const StackTraining t = train_stack_detailed(d, config, 3);
    std::vector<Index> fit, heldout;
    for (Index i = 0; i < d.n(); ++i) (t.fold[static_cast<std::size_t>(i)] == 0 ? heldout : fit).push_back(i);
    const std::uint64_t fold_seed = derive_seed(3, 1);
    const Dataset train_rows = d.subset(fit);
    const Matrix held = d.subset(heldout).x;
    const Vector svm = train_linear_svm(train_rows, config.svm, derive_seed(fold_seed, 1)).predict_proba(held);
    const Vector forest = train_random_forest(train_rows, config.forest, derive_seed(fold_seed, 2)).predict_proba(held);
    const Vector gbm = train_gbm(train_rows, config.gbm, derive_seed(fold_seed, 3)).predict_proba(held);
    for (std::size_t r = 0; r < heldout.size(); ++r) {
      const Index row = heldout[r];
      CHECK(t.out_of_fold(row, 0) == svm[static_cast<Index>(r)]);
      CHECK(t.out_of_fold(row, 1) == forest[static_cast<Index>(r)]);
      CHECK(t.out_of_fold(row, 2) == gbm[static_cast<Index>(r)]);
    }
  }

  TEST_CASE("constant base learners reduce the stack to the majority class") {
    const Dataset d = desk_data(8);
    StackConfig config = small_stack();
    config.constant_base_probabilities = true;
    const StackEnsembleModel m = train_stack(d, config, 2);
    CHECK(m.meta.coefficients.cwiseAbs().maxCoeff() < 1e-3);
    CHECK(predict_stack(m, d.x).label.isZero());
  }

  TEST_CASE("stack fold bounds") {
    const Dataset d = desk_data(9, 40);
    StackConfig config = small_stack();
    config.n_folds = static_cast<int>(d.n()) + 1;
    CHECK(code_of([&] { train_stack(d, config, 1); }) == Errc::InvalidFolds);
  }

  TEST_CASE("predict_stack meta examples") {
    const Dataset d = desk_data(11);
    StackEnsembleModel m = train_stack(d, small_stack(), 5);

    m.meta.coefficients = Vector::Zero(3);
    m.meta.intercept = 0.0;
    const StackPrediction null_meta = predict_stack(m, d.x);
    CHECK(null_meta.probability.isConstant(0.5, 0.0));
    CHECK(null_meta.label.isConstant(1));

    m.meta.coefficients << 10, 0, 0;
    m.meta.intercept = -5;
    const StackPrediction svm_only = predict_stack(m, d.x);
    const Vector svm = m.svm.predict_proba(d.x);
    for (Index i = 0; i < d.n(); ++i) {
      CHECK(svm_only.probability[i] == doctest::Approx(sigmoid(10 * svm[i] - 5)).epsilon(1e-12));
      for (Index j = 0; j < d.n(); ++j) {
        if (svm[i] < svm[j]) CHECK(svm_only.probability[i] <= svm_only.probability[j]);
      }
    }

    const StackPrediction one = predict_stack(m, d.x.topRows(1));
    CHECK(one.probability.size() == 1);
    CHECK(one.label.size() == 1);
    CHECK(code_of([&] { predict_stack(m, Matrix::Zero(2, 3)); }) == Errc::DimensionMismatch);
  }

  TEST_CASE("stack training is deterministic") {
    const Dataset d = desk_data(12);
    const StackTraining a = train_stack_detailed(d, small_stack(), 77);
    const StackTraining b = train_stack_detailed(d, small_stack(), 77);
    CHECK(a.out_of_fold == b.out_of_fold);
    CHECK(a.model.meta.coefficients == b.model.meta.coefficients);
    CHECK(a.model.meta.intercept == b.model.meta.intercept);
    CHECK(predict_stack(a.model, d.x).probability == predict_stack(b.model, d.x).probability);
  }
}
