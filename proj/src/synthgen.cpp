#include "pkd/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "pkd/random.hpp"

namespace pkd {
namespace {

std::string padded_name(char prefix, Index value, Index count) {
  const std::size_t width = std::max<std::size_t>(4, std::to_string(std::max<Index>(count - 1, 0)).size());
  std::string digits = std::to_string(value);
  return prefix + std::string(width - std::min(width, digits.size()), '0') + digits;
}

}  // namespace

void SynthConfig::validate() const {
  if (n_samples < 1 || n_features < 1 || n_informative < 1) {
    throw Error(Errc::ConfigError, "sample, feature and informative counts must be positive");
  }
  if (n_informative > n_features) {
    throw Error(Errc::ConfigError, "n_informative (" + std::to_string(n_informative) +
                                       ") exceeds n_features (" + std::to_string(n_features) + ")");
  }
  if (!std::isfinite(positive_fraction) || positive_fraction < 0.0 || positive_fraction > 1.0) {
    throw Error(Errc::ConfigError, "positive_fraction must lie in [0, 1]");
  }
  if (!std::isfinite(class_separation) || class_separation < 0.0) {
    throw Error(Errc::ConfigError, "class_separation must be finite and non-negative");
  }
}

SynthDataset generate(const SynthConfig& config) {
  config.validate();
  Rng rng(config.seed);
  const Index n = config.n_samples;
  const Index d = config.n_features;

  const auto n_positive = static_cast<Index>(std::llround(static_cast<double>(n) * config.positive_fraction));
  std::vector<int> labels(static_cast<std::size_t>(n), 0);
  std::fill_n(labels.begin(), n_positive, 1);
  std::shuffle(labels.begin(), labels.end(), rng);

  // source[c] < n_informative marks output column c as informative.
  std::vector<Index> source(static_cast<std::size_t>(d));
  std::iota(source.begin(), source.end(), Index{0});
  std::shuffle(source.begin(), source.end(), rng);

  SynthDataset out;
  Dataset& data = out.data;
  data.x.resize(n, d);
  data.y.resize(n);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (Index i = 0; i < n; ++i) {
    const int label = labels[static_cast<std::size_t>(i)];
    const double centroid = label == 1 ? config.class_separation : -config.class_separation;
    data.y[i] = label;
    for (Index c = 0; c < d; ++c) {
      const bool informative = source[static_cast<std::size_t>(c)] < config.n_informative;
      data.x(i, c) = (informative ? centroid : 0.0) + normal(rng);
    }
    data.ids.push_back(padded_name('s', i, n));
  }
  for (Index c = 0; c < d; ++c) {
    data.feature_names.push_back(padded_name('f', c, d));
    if (source[static_cast<std::size_t>(c)] < config.n_informative) {
      out.informative_columns.push_back(c);
      out.informative_features.push_back(data.feature_names.back());
    }
  }
  return out;
}

}  // namespace pkd
