#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pkd/dataset.hpp"

namespace pkd {

// A row placed in the (expression summary, predicted probability) plane.
struct ClusterPoint {
  std::string id;
  double expression = 0.0;
  double probability = 0.0;
};

struct KMeansResult {
  Eigen::Matrix<double, Eigen::Dynamic, 2> centroids;  // (expression, probability) per cluster
  std::vector<int> assignments;
  double objective = 0.0;  // sum of squared distances to the assigned centroid
  int iterations = 0;
  std::uint64_t seed = 0;
  int restart = 0;                 // index of the winning restart
  std::vector<double> trace;       // objective after every assignment or refinement step of the winning restart
};

// Expression axis: the standardized column `expression_column`, or the row mean
// of all standardized features when it is "mean".
std::vector<ClusterPoint> build_cluster_space(const Dataset& standardized, const Vector& probabilities,
                                              const std::string& expression_column);

struct KMeansOptions {
  int max_iterations = 300;
  // Called with the objective trace of every restart (test instrumentation).
  std::vector<std::vector<double>>* all_traces = nullptr;
};

// k-means++ seeding, Lloyd iterations polished by Hartigan single-point moves,
// best of `restarts` runs by objective (ties to the earliest restart). Empty
// clusters are reseeded at the point farthest from its assigned centroid.
KMeansResult kmeans(const std::vector<ClusterPoint>& points, int k, std::uint64_t seed, int restarts,
                    const KMeansOptions& options = {});

struct TopCluster {
  int cluster = 0;
  std::vector<std::string> member_ids;  // lexicographically sorted
};

// Cluster with the highest mean probability; ties go to the lowest index.
TopCluster top_cluster(const KMeansResult& result, const std::vector<ClusterPoint>& points);

}  // namespace pkd
