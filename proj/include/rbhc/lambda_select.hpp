// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <cstdint>
#include <vector>

#include "rbhc/cluster.hpp"

namespace rbhc {

struct KMeansResult {
  Eigen::MatrixXd centers;      // k x dim
  std::vector<int> assignment;  // per point, in [0, k)
  std::vector<std::int64_t> counts;
  int iterations = 0;
};

/// Euclidean k-means: k-means++ seeding from the given seed, Lloyd
/// iterations until assignments stabilize, centroids move less than `tol`,
/// or `max_iters` is reached. A cluster left empty is reseeded to the point
/// farthest from its current center. Deterministic given the seed.
KMeansResult kmeans(const Eigen::MatrixXd& points, int k, std::uint64_t seed,
                    int max_iters = 100, double tol = 1e-8);

enum class CenterWeight {
  population,  // center summaries carry their assigned population
  singleton,   // center summaries act as single points
};

struct LambdaConfig {
  int k_tilde = 1;     // rough cluster-count guess
  int multiplier = 4;  // k-means runs with k = multiplier * k_tilde
  int kmeans_iters = 100;
  double kmeans_tol = 1e-8;
  CenterWeight weight = CenterWeight::population;
  std::uint64_t seed = 0;
};

/// Merge-threshold heuristic: over-segment with Euclidean k-means at
/// k = multiplier * k_tilde, embed each center as a cluster summary, and
/// return the mean dissimilarity over all center pairs. Returns 0 for
/// degenerate data (all centers coincide); callers should treat that as a
/// warning.
double select_lambda(const Eigen::MatrixXd& points,
                     const FamilyDescriptor& fam, const LambdaConfig& cfg);

}  // namespace rbhc
