#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pkd/error.hpp"
#include "pkd/types.hpp"

namespace pkd {

// Expression table: one row per sample (or gene), one column per feature, one binary label.
struct Dataset {
  std::vector<std::string> ids;
  std::vector<std::string> feature_names;
  Matrix x;
  Labels y;

  Index n() const { return x.rows(); }
  Index d() const { return x.cols(); }

  // Throws if the shape or value invariants do not hold.
  void validate() const;

  Dataset subset(std::span<const Index> rows) const;
  Index count_label(int label) const;
};

struct CsvSchema {
  std::optional<std::string> id_column;
  std::string label_column = "label";
  // When false, a table without the label column loads with every label 0.
  bool require_label = true;
  // Compared case-insensitively after trimming whitespace.
  std::vector<std::string> missing_tokens = {"", "NA", "NaN", "null"};
};

struct LoadedDataset {
  Dataset data;
  std::size_t raw_rows = 0;
  std::size_t dropped_rows = 0;
};

LoadedDataset read_csv(std::istream& in, const CsvSchema& schema);
LoadedDataset load_csv(const std::filesystem::path& path, const CsvSchema& schema);

void write_csv(std::ostream& out, const Dataset& data, const std::string& id_column = "id",
               const std::string& label_column = "label");
void save_csv(const std::filesystem::path& path, const Dataset& data,
              const std::string& id_column = "id", const std::string& label_column = "label");

// Per-feature standardization learned from training rows only.
struct ScalerParams {
  Vector means;
  Vector stds;  // population convention (divide by n)

  static constexpr double kConstantTolerance = 1e-12;

  Index d() const { return means.size(); }
  bool is_constant(Index j) const { return stds[j] < kConstantTolerance; }
};

template <typename Derived>
ScalerParams fit_scaler(const Eigen::MatrixBase<Derived>& x) {
  if (x.rows() == 0) throw Error(Errc::EmptyDataset, "cannot fit a scaler on zero rows");
  const double n = static_cast<double>(x.rows());
  ScalerParams params;
  params.means = x.template cast<double>().colwise().sum().transpose() / n;
  params.stds.resize(x.cols());
  for (Index j = 0; j < x.cols(); ++j) {
    const double var = (x.col(j).template cast<double>().array() - params.means[j]).square().sum() / n;
    params.stds[j] = std::sqrt(var);
  }
  return params;
}

// (x - mean) / std per column; constant columns map to exactly 0.
template <typename Derived>
RowMatrix<typename Derived::Scalar> apply_scaler(const ScalerParams& params,
                                                 const Eigen::MatrixBase<Derived>& x) {
  using Scalar = typename Derived::Scalar;
  if (x.cols() != params.d()) {
    throw Error(Errc::DimensionMismatch, "scaler expects " + std::to_string(params.d()) +
                                             " columns, got " + std::to_string(x.cols()));
  }
  RowMatrix<Scalar> out(x.rows(), x.cols());
  for (Index j = 0; j < x.cols(); ++j) {
    if (params.is_constant(j)) {
      out.col(j).setZero();
    } else {
      out.col(j) = (x.col(j).array() - Scalar(params.means[j])) / Scalar(params.stds[j]);
    }
  }
  return out;
}

struct SplitResult {
  Dataset train;
  Dataset test;
  std::uint64_t seed = 0;
  double test_fraction = 0.0;
  std::vector<Index> train_rows;  // indices into the source dataset
  std::vector<Index> test_rows;
};

// Stratified by label: each class is shuffled independently and its first
// round(count * test_fraction) rows go to the test partition.
SplitResult split(const Dataset& data, double test_fraction, std::uint64_t seed);

}  // namespace pkd
