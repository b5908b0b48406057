#include "pkd/cluster.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "pkd/random.hpp"

namespace pkd {
namespace {

using Points = Eigen::Matrix<double, Eigen::Dynamic, 2>;
using Centroids = Eigen::Matrix<double, Eigen::Dynamic, 2>;

struct Run {
  Centroids centroids;
  std::vector<int> assignments;
  double objective = 0.0;
  int iterations = 0;
  std::vector<double> trace;
};

// Nearest centroid with ties to the lowest index; returns the objective.
double assign(const Points& p, const Centroids& c, std::vector<int>& assignments) {
  double objective = 0.0;
  for (Index i = 0; i < p.rows(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    int arg = 0;
    for (Index j = 0; j < c.rows(); ++j) {
      const double dist = (p.row(i) - c.row(j)).squaredNorm();
      if (dist < best) {
        best = dist;
        arg = static_cast<int>(j);
      }
    }
    assignments[static_cast<std::size_t>(i)] = arg;
    objective += best;
  }
  return objective;
}

Centroids plus_plus_seeds(const Points& p, int k, Rng& rng) {
  const Index n = p.rows();
  Centroids c(k, 2);
  std::uniform_int_distribution<Index> first(0, n - 1);
  c.row(0) = p.row(first(rng));
  Vector nearest = (p.rowwise() - c.row(0)).rowwise().squaredNorm();
  for (int j = 1; j < k; ++j) {
    const double total = nearest.sum();
    // D^2 sampling over points not already coinciding with a centroid.
    Index pick = 0;
    std::uniform_real_distribution<double> u(0.0, total);
    const double target = u(rng);
    double acc = 0.0;
    for (Index i = 0; i < n; ++i) {
      if (nearest[i] <= 0.0) continue;
      pick = i;
      acc += nearest[i];
      if (acc > target) break;
    }
    c.row(j) = p.row(pick);
    nearest = nearest.cwiseMin((p.rowwise() - c.row(j)).rowwise().squaredNorm());
  }
  return c;
}

// Moves the centroid of every empty cluster onto the point farthest from its
// own centroid, then reassigns. Returns false if nothing was empty.
bool repair_empty(const Points& p, Centroids& c, std::vector<int>& assignments) {
  bool repaired = false;
  for (Index j = 0; j < c.rows(); ++j) {
    if (std::find(assignments.begin(), assignments.end(), static_cast<int>(j)) != assignments.end()) continue;
    std::vector<Index> counts(static_cast<std::size_t>(c.rows()), 0);
    for (int a : assignments) ++counts[static_cast<std::size_t>(a)];
    double farthest = -1.0;
    Index at = 0;
    for (Index i = 0; i < p.rows(); ++i) {
      const int own = assignments[static_cast<std::size_t>(i)];
      if (counts[static_cast<std::size_t>(own)] < 2) continue;
      const double dist = (p.row(i) - c.row(own)).squaredNorm();
      if (dist > farthest) {
        farthest = dist;
        at = i;
      }
    }
    c.row(j) = p.row(at);
    assignments[static_cast<std::size_t>(at)] = static_cast<int>(j);
    repaired = true;
  }
  return repaired;
}

Centroids cluster_means(const Points& p, const std::vector<int>& assignments, const Centroids& previous) {
  Centroids sums = Centroids::Zero(previous.rows(), 2);
  std::vector<double> counts(static_cast<std::size_t>(previous.rows()), 0.0);
  for (Index i = 0; i < p.rows(); ++i) {
    const int a = assignments[static_cast<std::size_t>(i)];
    sums.row(a) += p.row(i);
    counts[static_cast<std::size_t>(a)] += 1.0;
  }
  Centroids out = previous;
  for (Index j = 0; j < out.rows(); ++j) {
    if (counts[static_cast<std::size_t>(j)] > 0.0) out.row(j) = sums.row(j) / counts[static_cast<std::size_t>(j)];
  }
  return out;
}

double objective_of(const Points& p, const Centroids& c, const std::vector<int>& assignments) {
  double total = 0.0;
  for (Index i = 0; i < p.rows(); ++i) total += (p.row(i) - c.row(assignments[static_cast<std::size_t>(i)])).squaredNorm();
  return total;
}

// Hartigan single-point moves: relocate a point whenever doing so lowers the
// objective once both affected means shift. Lloyd-stable partitions can still
// admit such moves. Returns true if any point moved.
bool hartigan_pass(const Points& p, Centroids& c, std::vector<int>& assignments) {
  std::vector<double> counts(static_cast<std::size_t>(c.rows()), 0.0);
  for (int a : assignments) counts[static_cast<std::size_t>(a)] += 1.0;
  bool moved = false;
  for (Index i = 0; i < p.rows(); ++i) {
    const int from = assignments[static_cast<std::size_t>(i)];
    const double n_from = counts[static_cast<std::size_t>(from)];
    if (n_from < 2.0) continue;
    const double removal = n_from / (n_from - 1.0) * (p.row(i) - c.row(from)).squaredNorm();
    double best_delta = -1e-12 * (1.0 + removal);
    int to = -1;
    for (Index j = 0; j < c.rows(); ++j) {
      if (j == from) continue;
      const double n_to = counts[static_cast<std::size_t>(j)];
      const double delta = n_to / (n_to + 1.0) * (p.row(i) - c.row(j)).squaredNorm() - removal;
      if (delta < best_delta) {
        best_delta = delta;
        to = static_cast<int>(j);
      }
    }
    if (to < 0) continue;
    assignments[static_cast<std::size_t>(i)] = to;
    counts[static_cast<std::size_t>(from)] -= 1.0;
    counts[static_cast<std::size_t>(to)] += 1.0;
    c = cluster_means(p, assignments, c);
    moved = true;
  }
  return moved;
}

// Lloyd iterations to a stable assignment, then Hartigan refinement; the two
// alternate until neither changes anything or the iteration budget runs out.
Run lloyd(const Points& p, int k, Rng& rng, int max_iterations) {
  Run run;
  run.centroids = plus_plus_seeds(p, k, rng);
  run.assignments.assign(static_cast<std::size_t>(p.rows()), -1);
  std::vector<int> previous;
  for (int iter = 0; iter < max_iterations; ++iter) {
    run.objective = assign(p, run.centroids, run.assignments);
    if (repair_empty(p, run.centroids, run.assignments)) run.objective = assign(p, run.centroids, run.assignments);
    run.trace.push_back(run.objective);
    run.iterations = iter + 1;
    if (iter + 1 == max_iterations) break;
    if (run.assignments == previous) {
      if (!hartigan_pass(p, run.centroids, run.assignments)) break;
      run.objective = objective_of(p, run.centroids, run.assignments);
      run.trace.push_back(run.objective);
      previous = run.assignments;
      continue;
    }
    previous = run.assignments;
    run.centroids = cluster_means(p, run.assignments, run.centroids);
  }
  return run;
}

}  // namespace

std::vector<ClusterPoint> build_cluster_space(const Dataset& standardized, const Vector& probabilities,
                                              const std::string& expression_column) {
  if (probabilities.size() != standardized.n()) {
    throw Error(Errc::LengthMismatch, std::to_string(probabilities.size()) + " probabilities for " +
                                          std::to_string(standardized.n()) + " rows");
  }
  Vector expression;
  if (expression_column == "mean") {
    expression = standardized.x.rowwise().mean();
  } else {
    const auto it = std::find(standardized.feature_names.begin(), standardized.feature_names.end(), expression_column);
    if (it == standardized.feature_names.end()) {
      throw Error(Errc::MissingColumn, "expression column '" + expression_column + "' not found");
    }
    expression = standardized.x.col(it - standardized.feature_names.begin());
  }
  std::vector<ClusterPoint> points;
  points.reserve(static_cast<std::size_t>(standardized.n()));
  for (Index i = 0; i < standardized.n(); ++i) {
    points.push_back({standardized.ids[static_cast<std::size_t>(i)], expression[i], probabilities[i]});
  }
  return points;
}

KMeansResult kmeans(const std::vector<ClusterPoint>& points, int k, std::uint64_t seed, int restarts,
                    const KMeansOptions& options) {
  if (points.empty()) throw Error(Errc::TooFewPoints, "k-means needs at least one point");
  if (restarts < 1) throw Error(Errc::InvalidHyperparameter, "restarts must be at least 1");
  for (const auto& point : points) {
    if (!std::isfinite(point.expression) || !std::isfinite(point.probability)) {
      throw Error(Errc::InconsistentInput, "point " + point.id + " has a non-finite coordinate");
    }
  }
  std::set<std::pair<double, double>> distinct;
  for (const auto& point : points) distinct.emplace(point.expression, point.probability);
  if (k < 1 || static_cast<std::size_t>(k) > distinct.size()) {
    throw Error(Errc::InvalidK, "k = " + std::to_string(k) + " with " + std::to_string(distinct.size()) +
                                    " distinct points");
  }

  Points p(static_cast<Index>(points.size()), 2);
  for (std::size_t i = 0; i < points.size(); ++i) {
    p(static_cast<Index>(i), 0) = points[i].expression;
    p(static_cast<Index>(i), 1) = points[i].probability;
  }

  KMeansResult best;
  best.objective = std::numeric_limits<double>::infinity();
  best.seed = seed;
  if (options.all_traces) options.all_traces->clear();
  for (int r = 0; r < restarts; ++r) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(r)));
    Run run = lloyd(p, k, rng, options.max_iterations);
    if (options.all_traces) options.all_traces->push_back(run.trace);
    if (run.objective < best.objective) {
      best.centroids = run.centroids;
      best.assignments = std::move(run.assignments);
      best.objective = run.objective;
      best.iterations = run.iterations;
      best.restart = r;
      best.trace = std::move(run.trace);
    }
  }
  return best;
}

TopCluster top_cluster(const KMeansResult& result, const std::vector<ClusterPoint>& points) {
  if (result.assignments.size() != points.size() || result.centroids.rows() == 0) {
    throw Error(Errc::InconsistentInput, "assignments do not match the points");
  }
  const auto k = static_cast<std::size_t>(result.centroids.rows());
  std::vector<double> sum(k, 0.0);
  std::vector<double> count(k, 0.0);
  for (std::size_t i = 0; i < points.size(); ++i) {
    const int a = result.assignments[i];
    if (a < 0 || static_cast<std::size_t>(a) >= k) throw Error(Errc::InconsistentInput, "assignment out of range");
    sum[static_cast<std::size_t>(a)] += points[i].probability;
    count[static_cast<std::size_t>(a)] += 1.0;
  }
  TopCluster top;
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < k; ++j) {
    if (count[j] == 0.0) continue;
    const double mean = sum[j] / count[j];
    if (mean > best) {
      best = mean;
      top.cluster = static_cast<int>(j);
    }
  }
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (result.assignments[i] == top.cluster) top.member_ids.push_back(points[i].id);
  }
  std::sort(top.member_ids.begin(), top.member_ids.end());
  return top;
}

}  // namespace pkd
