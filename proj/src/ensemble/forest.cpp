#include "pkd/ensemble/forest.hpp"

#include <cmath>
#include <numeric>

#include "pkd/error.hpp"
#include "pkd/random.hpp"

namespace pkd {

Vector RandomForestModel::predict_proba(const Matrix& x) const {
  Vector sum = Vector::Zero(x.rows());
  for (const auto& tree : trees) sum += tree.predict(x);
  return sum / static_cast<double>(trees.size());
}

RandomForestModel train_random_forest(const Dataset& train, const ForestConfig& config, std::uint64_t seed) {
  if (config.n_trees < 1) throw Error(Errc::InvalidHyperparameter, "n_trees must be at least 1");
  if (config.max_depth < 1) throw Error(Errc::InvalidHyperparameter, "max_depth must be at least 1");
  if (config.features_per_split < 0) throw Error(Errc::InvalidHyperparameter, "features_per_split must be >= 0");
  if (train.n() == 0) throw Error(Errc::EmptyDataset, "random forest needs training rows");

  const ColumnMatrix x = train.x;
  const std::vector<double> target(train.y.data(), train.y.data() + train.n());
  const auto n = static_cast<std::size_t>(train.n());

  RandomForestModel model;
  model.seed = seed;
  model.features_per_split = config.features_per_split > 0
                                 ? std::min(config.features_per_split, train.d())
                                 : std::max<Index>(1, static_cast<Index>(std::floor(std::sqrt(static_cast<double>(train.d())))));
  const TreeParams params{config.max_depth, model.features_per_split};
  const LeafValueFn positive_fraction = [&](std::span<const Index> rows) {
    double positives = 0.0;
    for (Index r : rows) positives += target[static_cast<std::size_t>(r)];
    return positives / static_cast<double>(rows.size());
  };

  model.trees.reserve(static_cast<std::size_t>(config.n_trees));
  for (int t = 0; t < config.n_trees; ++t) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(t)));
    std::vector<Index> rows(n);
    if (config.bootstrap) {
      std::uniform_int_distribution<Index> draw(0, train.n() - 1);
      for (auto& r : rows) r = draw(rng);
    } else {
      std::iota(rows.begin(), rows.end(), Index{0});
    }
    model.trees.push_back(grow_tree(x, target, std::move(rows), params, rng, positive_fraction));
  }
  return model;
}

}  // namespace pkd
