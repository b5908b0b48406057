#pragma once

#include <functional>
#include <span>
#include <vector>

#include "pkd/random.hpp"
#include "pkd/types.hpp"

namespace pkd {

// Internal nodes route x[feature] <= threshold to the left child. Leaves carry
// `value`: a positive-class fraction for forest trees, an additive score for
// boosted trees.
struct TreeNode {
  int feature = -1;
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double value = 0.0;

  bool is_leaf() const { return feature < 0; }
};

struct DecisionTree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root

  template <typename Derived>
  double predict_row(const Eigen::MatrixBase<Derived>& row) const {
    int at = 0;
    while (!nodes[at].is_leaf()) {
      at = row(nodes[at].feature) <= nodes[at].threshold ? nodes[at].left : nodes[at].right;
    }
    return nodes[at].value;
  }

  Vector predict(const Matrix& x) const;
  int depth() const;
};

struct TreeParams {
  int max_depth = 1;
  // Candidate features drawn per split; 0 means every feature.
  Index features_per_split = 0;
};

// Column-major copy of the training matrix; split search walks columns.
using ColumnMatrix = Eigen::MatrixXd;

// Returns the leaf value for the rows (indices into x, duplicates allowed) reaching it.
using LeafValueFn = std::function<double(std::span<const Index> rows)>;

// Greedy depth-first growth: at each node, candidate thresholds are midpoints
// between consecutive distinct values; the split minimizing the summed
// within-child squared error of `target` wins (ties: lowest feature, then
// lowest threshold). For 0/1 targets that is exactly weighted Gini.
// Growth stops at max_depth, at a pure node, or below 2 rows. `rows` may repeat
// indices (bootstrap samples).
DecisionTree grow_tree(const ColumnMatrix& x, std::span<const double> target, std::vector<Index> rows,
                       const TreeParams& params, Rng& rng, const LeafValueFn& leaf_value);

// Per-column row orderings sorted by value, shared across the trees of one fit.
struct PresortedColumns {
  std::vector<std::vector<Index>> order;

  explicit PresortedColumns(const ColumnMatrix& x);
};

// Same criterion as grow_tree over all rows and all features, grown level by
// level against presorted columns (cost O(n * d) per level, no re-sorting).
DecisionTree grow_tree_presorted(const ColumnMatrix& x, const PresortedColumns& sorted,
                                 std::span<const double> target, int max_depth, const LeafValueFn& leaf_value);

}  // namespace pkd
