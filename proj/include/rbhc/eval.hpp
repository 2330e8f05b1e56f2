// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <cstdint>
#include <vector>

#include "rbhc/agglomerate.hpp"
#include "rbhc/synth.hpp"

namespace rbhc {

/// Hubert-Arabie adjusted Rand index between two labelings of the same
/// items. Label values are arbitrary integers. Returns 1.0 when the
/// adjustment denominator vanishes (both labelings make the same trivial
/// split, where expected and achieved agreement coincide).
double adjusted_rand_index(const std::vector<int>& a,
                           const std::vector<int>& b);
double adjusted_rand_index(const Partition& a, const Partition& b);

/// One Monte-Carlo reducibility trial: three clusters from a common
/// component, the three pairwise dissimilarities, the merged-pair check of
/// the reducibility implication on the minimal pair, and the quadratic
/// approximation error on that pair.
struct TrialReport {
  double d_star_01 = 0.0;
  double d_star_02 = 0.0;
  double d_star_12 = 0.0;
  double merged_check = 0.0;  // d(minimal pair merged, remaining cluster)
  bool reducible = true;
  double d_exact = 0.0;
  double d_approx = 0.0;
  double rel_error = 0.0;  // 2|exact - approx| / (exact + approx), in [0, 2]
  bool domain_error = false;  // generator left its domain; excluded upstream
};

TrialReport reducibility_trial(Family family, std::int64_t size_min,
                               std::int64_t size_max, double beta,
                               std::uint64_t seed, std::uint64_t trial);

struct ReducibilitySummary {
  Family family = Family::poisson;
  std::int64_t trials = 0;
  std::int64_t violations = 0;
  std::int64_t domain_errors = 0;
  double mean_d_exact = 0.0;
  double mean_d_approx = 0.0;
  double mean_rel_error = 0.0;
};

/// Runs `trials` independent reducibility trials (streams keyed by trial
/// index, embarrassingly parallel, thread-count-independent aggregation).
ReducibilitySummary run_reducibility(Family family, std::int64_t trials,
                                     double beta, std::uint64_t seed);

/// One cell of the error-decay sweep: mean relative error of the quadratic
/// approximation at a given variance scale and maximum cluster size.
struct SweepCell {
  double beta = 1.0;
  std::int64_t max_size = 0;
  std::int64_t trials = 0;
  std::int64_t domain_errors = 0;
  double mean_rel_error = 0.0;
};

/// Trials in a cell use streams keyed by (size index, trial) only, so for
/// families with scale-invariant draw sequences (the Gaussians) the same
/// underlying randomness is reused across the beta grid and the decay in
/// beta is paired rather than noisy.
std::vector<SweepCell> error_decay_sweep(Family family,
                                         const std::vector<double>& beta_grid,
                                         const std::vector<std::int64_t>& max_size_grid,
                                         std::int64_t trials_per_cell,
                                         std::uint64_t seed);

/// Classic agglomerative baselines under Euclidean geometry, cut at k
/// clusters. Ward operates on squared distances via the Lance-Williams
/// recurrence; single/complete store plain Euclidean distances.
enum class LinkageRule { single, complete, ward };

const char* linkage_name(LinkageRule rule);

Partition baseline_cluster(const Eigen::MatrixXd& points, LinkageRule rule,
                           int k);

/// Full baseline dendrogram (nearest-neighbour chain over the stored
/// distance matrix). Heights are linkage values (squared-distance units for
/// ward); merges appear in chain order, not height order.
Forest baseline_tree(const Eigen::MatrixXd& points, LinkageRule rule);

/// Cuts a full tree with monotone heights into k clusters by removing the
/// k-1 highest merges (ties resolved toward later merges).
Partition cut_tree(const Forest& forest, int k);

}  // namespace rbhc
