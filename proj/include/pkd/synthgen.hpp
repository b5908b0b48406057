#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pkd/dataset.hpp"

namespace pkd {

struct SynthConfig {
  Index n_samples = 1000;
  Index n_features = 5000;
  Index n_informative = 100;
  double positive_fraction = 0.2;
  double class_separation = 1.0;
  std::uint64_t seed = 0;

  void validate() const;
};

struct SynthDataset {
  Dataset data;
  // Positions (and names) of the informative columns after column shuffling.
  std::vector<Index> informative_columns;
  std::vector<std::string> informative_features;
};

// Two Gaussian class centroids at +/- class_separation on every informative axis,
// identity covariance, standard-normal noise columns. Exactly
// round(n_samples * positive_fraction) rows are positive.
SynthDataset generate(const SynthConfig& config);

}  // namespace pkd
