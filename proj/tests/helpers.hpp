#pragma once

#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>

#include "doctest.h"
#include "pkd/dataset.hpp"
#include "pkd/random.hpp"

namespace pkd::test {

inline Errc code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected pkd::Error");
  return Errc::UsageError;
}

inline Dataset make_dataset(const Matrix& x, const Labels& y) {
  Dataset d;
  d.x = x;
  d.y = y;
  for (Index i = 0; i < x.rows(); ++i) d.ids.push_back("r" + std::to_string(i));
  for (Index j = 0; j < x.cols(); ++j) d.feature_names.push_back("x" + std::to_string(j));
  return d;
}

inline Matrix column(std::initializer_list<double> values) {
  Matrix x(static_cast<Index>(values.size()), 1);
  Index i = 0;
  for (double v : values) x(i++, 0) = v;
  return x;
}

inline Labels labels(std::initializer_list<int> values) {
  Labels y(static_cast<Index>(values.size()));
  Index i = 0;
  for (int v : values) y[i++] = v;
  return y;
}

inline Matrix random_matrix(Index rows, Index cols, Rng& rng, double scale = 1.0) {
  std::normal_distribution<double> normal(0.0, scale);
  Matrix x(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) x(i, j) = normal(rng);
  return x;
}

// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("pkd_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

}  // namespace pkd::test
