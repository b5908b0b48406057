#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

namespace pkd {

// Row-major so that gathering sample rows for a batch or a split is contiguous.
template <typename Scalar>
using RowMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using Matrix = RowMatrix<double>;
using Vector = Eigen::VectorXd;

// Binary labels; every entry is 0 or 1.
using Labels = Eigen::Matrix<int, Eigen::Dynamic, 1>;

using Index = Eigen::Index;

}  // namespace pkd
