#include "pkd/ensemble/tree.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

namespace pkd {
namespace {

// Running sums over a set of rows; squared_error() is the within-set SSE of the target.
struct TargetStats {
  double count = 0.0;
  double sum = 0.0;
  double sum_sq = 0.0;

  void add(double t) {
    count += 1.0;
    sum += t;
    sum_sq += t * t;
  }
  TargetStats minus(const TargetStats& other) const {
    return {count - other.count, sum - other.sum, sum_sq - other.sum_sq};
  }
  double squared_error() const { return count > 0.0 ? sum_sq - sum * sum / count : 0.0; }
};

struct BestSplit {
  int feature = -1;
  double threshold = 0.0;
  double impurity = std::numeric_limits<double>::infinity();
};

// Threshold strictly between two consecutive distinct values so that `lo` goes left.
double midpoint(double lo, double hi) {
  const double mid = lo + (hi - lo) / 2.0;
  return mid < hi ? mid : lo;
}

struct SplitScanner {
  TargetStats total;
  TargetStats left;
  double last = 0.0;
  bool started = false;

  void push(double value, double t, int feature, BestSplit& best) {
    if (started && value > last) {
      const double impurity = left.squared_error() + total.minus(left).squared_error();
      if (impurity < best.impurity) best = {feature, midpoint(last, value), impurity};
    }
    left.add(t);
    last = value;
    started = true;
  }
};

bool is_pure(std::span<const double> target, std::span<const Index> rows) {
  const double first = target[rows.front()];
  return std::all_of(rows.begin(), rows.end(), [&](Index r) { return target[r] == first; });
}

std::vector<int> sample_features(Index d, Index k, Rng& rng) {
  std::vector<int> features(static_cast<std::size_t>(d));
  std::iota(features.begin(), features.end(), 0);
  if (k <= 0 || k >= d) return features;
  for (Index i = 0; i < k; ++i) {
    std::uniform_int_distribution<Index> pick(i, d - 1);
    std::swap(features[i], features[pick(rng)]);
  }
  features.resize(static_cast<std::size_t>(k));
  std::sort(features.begin(), features.end());
  return features;
}

class DepthFirstGrower {
 public:
  DepthFirstGrower(const ColumnMatrix& x, std::span<const double> target, const TreeParams& params, Rng& rng,
                   const LeafValueFn& leaf_value)
      : x_(x), target_(target), params_(params), rng_(rng), leaf_value_(leaf_value) {}

  DecisionTree run(std::vector<Index> rows) {
    grow(std::move(rows), 0);
    return std::move(tree_);
  }

 private:
  int grow(std::vector<Index> rows, int depth) {
    const int id = static_cast<int>(tree_.nodes.size());
    tree_.nodes.emplace_back();
    if (depth >= params_.max_depth || rows.size() < 2 || is_pure(target_, rows)) {
      tree_.nodes[id].value = leaf_value_(rows);
      return id;
    }
    const BestSplit best = find_split(rows);
    if (best.feature < 0) {
      tree_.nodes[id].value = leaf_value_(rows);
      return id;
    }
    std::vector<Index> left_rows;
    std::vector<Index> right_rows;
    for (Index r : rows) {
      (x_(r, best.feature) <= best.threshold ? left_rows : right_rows).push_back(r);
    }
    rows.clear();
    rows.shrink_to_fit();
    const int left = grow(std::move(left_rows), depth + 1);
    const int right = grow(std::move(right_rows), depth + 1);
    tree_.nodes[id] = {best.feature, best.threshold, left, right, 0.0};
    return id;
  }

  BestSplit find_split(const std::vector<Index>& rows) {
    BestSplit best;
    TargetStats total;
    for (Index r : rows) total.add(target_[r]);
    std::vector<std::pair<double, double>> column(rows.size());
    for (int f : sample_features(x_.cols(), params_.features_per_split, rng_)) {
      for (std::size_t i = 0; i < rows.size(); ++i) column[i] = {x_(rows[i], f), target_[rows[i]]};
      std::sort(column.begin(), column.end(),
                [](const auto& a, const auto& b) { return a.first < b.first; });
      SplitScanner scanner{total, {}};
      for (const auto& [value, t] : column) scanner.push(value, t, f, best);
    }
    return best;
  }

  const ColumnMatrix& x_;
  std::span<const double> target_;
  const TreeParams& params_;
  Rng& rng_;
  const LeafValueFn& leaf_value_;
  DecisionTree tree_;
};

}  // namespace

Vector DecisionTree::predict(const Matrix& x) const {
  Vector out(x.rows());
  for (Index i = 0; i < x.rows(); ++i) out[i] = predict_row(x.row(i));
  return out;
}

int DecisionTree::depth() const {
  std::vector<int> level(nodes.size(), 0);
  int deepest = 0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    deepest = std::max(deepest, level[i]);
    if (!nodes[i].is_leaf()) {
      level[static_cast<std::size_t>(nodes[i].left)] = level[i] + 1;
      level[static_cast<std::size_t>(nodes[i].right)] = level[i] + 1;
    }
  }
  return deepest;
}

DecisionTree grow_tree(const ColumnMatrix& x, std::span<const double> target, std::vector<Index> rows,
                       const TreeParams& params, Rng& rng, const LeafValueFn& leaf_value) {
  return DepthFirstGrower(x, target, params, rng, leaf_value).run(std::move(rows));
}

PresortedColumns::PresortedColumns(const ColumnMatrix& x) : order(static_cast<std::size_t>(x.cols())) {
  for (Index f = 0; f < x.cols(); ++f) {
    auto& col = order[static_cast<std::size_t>(f)];
    col.resize(static_cast<std::size_t>(x.rows()));
    std::iota(col.begin(), col.end(), Index{0});
    std::stable_sort(col.begin(), col.end(), [&](Index a, Index b) { return x(a, f) < x(b, f); });
  }
}

DecisionTree grow_tree_presorted(const ColumnMatrix& x, const PresortedColumns& sorted,
                                 std::span<const double> target, int max_depth, const LeafValueFn& leaf_value) {
  const Index n = x.rows();
  DecisionTree tree;
  tree.nodes.emplace_back();
  std::vector<int> node_of(static_cast<std::size_t>(n), 0);
  std::vector<int> level{0};

  for (int depth = 0; !level.empty(); ++depth) {
    // slot_of[node] indexes `level`; rows_of[slot] lists the rows at that node.
    std::vector<int> slot_of(tree.nodes.size(), -1);
    for (std::size_t s = 0; s < level.size(); ++s) slot_of[static_cast<std::size_t>(level[s])] = static_cast<int>(s);
    std::vector<std::vector<Index>> rows_of(level.size());
    for (Index r = 0; r < n; ++r) {
      const int node = node_of[static_cast<std::size_t>(r)];
      if (node >= 0 && slot_of[static_cast<std::size_t>(node)] >= 0) {
        rows_of[static_cast<std::size_t>(slot_of[static_cast<std::size_t>(node)])].push_back(r);
      }
    }

    // Splittable nodes keep their slot; the rest become leaves now.
    std::vector<SplitScanner> scanners(level.size());
    std::vector<BestSplit> best(level.size());
    std::vector<bool> active(level.size(), false);
    bool any_active = false;
    for (std::size_t s = 0; s < level.size(); ++s) {
      const auto& rows = rows_of[s];
      if (depth < max_depth && rows.size() >= 2 && !is_pure(target, rows)) {
        active[s] = true;
        any_active = true;
      } else {
        tree.nodes[static_cast<std::size_t>(level[s])].value = leaf_value(rows);
      }
    }
    if (!any_active) break;

    TargetStats empty;
    std::vector<TargetStats> totals(level.size());
    for (std::size_t s = 0; s < level.size(); ++s) {
      for (Index r : rows_of[s]) totals[s].add(target[r]);
    }
    for (Index f = 0; f < x.cols(); ++f) {
      for (std::size_t s = 0; s < level.size(); ++s) scanners[s] = SplitScanner{totals[s], empty};
      for (Index r : sorted.order[static_cast<std::size_t>(f)]) {
        const int node = node_of[static_cast<std::size_t>(r)];
        if (node < 0) continue;
        const int slot = slot_of[static_cast<std::size_t>(node)];
        if (slot < 0 || !active[static_cast<std::size_t>(slot)]) continue;
        scanners[static_cast<std::size_t>(slot)].push(x(r, f), target[r], static_cast<int>(f),
                                                      best[static_cast<std::size_t>(slot)]);
      }
    }

    std::vector<int> next_level;
    for (std::size_t s = 0; s < level.size(); ++s) {
      if (!active[s]) {
        for (Index r : rows_of[s]) node_of[static_cast<std::size_t>(r)] = -1;
        continue;
      }
      const int id = level[s];
      if (best[s].feature < 0) {
        tree.nodes[static_cast<std::size_t>(id)].value = leaf_value(rows_of[s]);
        for (Index r : rows_of[s]) node_of[static_cast<std::size_t>(r)] = -1;
        continue;
      }
      const int left = static_cast<int>(tree.nodes.size());
      const int right = left + 1;
      tree.nodes.emplace_back();
      tree.nodes.emplace_back();
      tree.nodes[static_cast<std::size_t>(id)] = {best[s].feature, best[s].threshold, left, right, 0.0};
      for (Index r : rows_of[s]) {
        node_of[static_cast<std::size_t>(r)] = x(r, best[s].feature) <= best[s].threshold ? left : right;
      }
      next_level.push_back(left);
      next_level.push_back(right);
    }
    level = std::move(next_level);
  }
  return tree;
}

}  // namespace pkd
