#pragma once

#include <cstdint>
#include <vector>

#include "pkd/dataset.hpp"
#include "pkd/ensemble/tree.hpp"

namespace pkd {

struct ForestConfig {
  int n_trees = 100;
  int max_depth = 12;
  // 0 selects floor(sqrt(d)).
  Index features_per_split = 0;
  // Test hook: grow every tree on the full training set instead of a bootstrap sample.
  bool bootstrap = true;
};

struct RandomForestModel {
  std::vector<DecisionTree> trees;
  Index features_per_split = 0;
  std::uint64_t seed = 0;

  // Mean of the trees' leaf positive fractions.
  Vector predict_proba(const Matrix& x) const;
};

RandomForestModel train_random_forest(const Dataset& train, const ForestConfig& config, std::uint64_t seed);

}  // namespace pkd
