#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "pkd/dataset.hpp"

namespace pkd {

struct CorrelationRecord {
  std::string feature_name;
  double r = 0.0;
};

// Point-biserial (Pearson, population moments) correlation of every feature
// with the 0/1 label. Constant columns get r = 0. Sorted by |r| descending,
// ties by feature name.
std::vector<CorrelationRecord> feature_label_correlation(const Dataset& data);

template <typename DerivedX, typename DerivedY>
double pearson(const Eigen::MatrixBase<DerivedX>& x, const Eigen::MatrixBase<DerivedY>& y) {
  const auto xc = (x.array() - x.mean()).eval();
  const auto yc = (y.array() - y.mean()).eval();
  const double sxx = (xc * xc).sum();
  const double syy = (yc * yc).sum();
  if (sxx <= 0.0 || syy <= 0.0) return 0.0;
  const double r = (xc * yc).sum() / std::sqrt(sxx * syy);
  return std::clamp(r, -1.0, 1.0);
}

}  // namespace pkd
