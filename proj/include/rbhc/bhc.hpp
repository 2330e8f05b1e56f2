// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <cstdint>
#include <limits>
#include <vector>

#include <Eigen/Dense>

#include "rbhc/agglomerate.hpp"

namespace rbhc {

/// Conjugate observation models with closed-form marginal likelihoods.
enum class PriorModel {
  gamma_poisson,          // Gamma(shape, rate) prior on a Poisson mean
  dirichlet_multinomial,  // Dirichlet prior on multinomial probabilities
  gaussian_known_var,     // Gaussian mean prior, known observation variance
};

const char* prior_model_name(PriorModel model);

struct ConjugatePrior {
  PriorModel model = PriorModel::gaussian_known_var;
  int dim = 1;

  // gamma_poisson (applied independently per dimension)
  double shape = 1.0;
  double rate = 1.0;

  // dirichlet_multinomial
  Eigen::VectorXd concentration;  // length dim
  std::int64_t trials = 1;        // row sum of every observation

  // gaussian_known_var (independent dimensions, shared scalar variances)
  double obs_variance = 1.0;
  Eigen::VectorXd prior_mean;  // length dim
  double prior_variance = 1.0;

  void validate() const;

  static ConjugatePrior make_gamma_poisson(int dim, double shape, double rate);
  static ConjugatePrior make_dirichlet_multinomial(Eigen::VectorXd concentration,
                                                   std::int64_t trials);
  static ConjugatePrior make_gaussian_known_var(Eigen::VectorXd prior_mean,
                                                double prior_variance,
                                                double obs_variance);
};

/// Additive per-cluster observation statistics. Merging clusters adds
/// fields componentwise, so marginals never need the raw points again.
struct ObsStats {
  std::int64_t count = 0;
  Eigen::VectorXd sum;     // per-dimension sums
  Eigen::VectorXd sum_sq;  // per-dimension sums of squares (gaussian only)
  double log_coef = 0.0;   // summed base-measure / combinatorial terms
};

ObsStats stats_from_point(const ConjugatePrior& prior,
                          const Eigen::Ref<const Eigen::RowVectorXd>& x);
ObsStats merge_stats(const ObsStats& a, const ObsStats& b);

/// Log marginal likelihood of the observations summarized by `stats` under
/// the single-cluster hypothesis of `prior`.
double log_marginal(const ConjugatePrior& prior, const ObsStats& stats);

/// Per-node quantities of the Bayesian evidence recursion. For a node c
/// with children c0, c1 (sizes n0, n1, n = n0 + n1):
///   gamma_c    = alpha * (n-1)! + gamma_c0 * gamma_c1
///   phi_h(c)   = alpha * (n-1)! * marginal(x_c)
///   phi_t(c)   = phi_h(c) + phi_t(c0) * phi_t(c1)
///   posterior  = phi_h(c) / phi_t(c)   (probability the node is one cluster)
/// Leaves: gamma = alpha, phi_h = phi_t = alpha * marginal(x).
/// All values are stored in log space; log_odds = log(phi_t0 phi_t1 / phi_h).
struct BhcNodeInfo {
  std::int64_t left = -1;   // -1 for leaves
  std::int64_t right = -1;
  std::int64_t size = 1;
  double log_gamma = 0.0;
  double log_phi_h = 0.0;
  double log_phi_tree = 0.0;
  double log_odds = -std::numeric_limits<double>::infinity();
  double posterior = 1.0;
};

struct BhcOptions {
  double alpha = 1.0;  // concentration of the partition prior, > 0
};

struct BhcResult {
  Forest forest;  // full binary tree; heights are the merge log-odds
  std::vector<double> merge_posteriors;  // parallel to forest.merges
  std::vector<BhcNodeInfo> nodes;        // indexed by node id, size 2n-1
  Partition cut;  // top-down cut at posterior >= 1/2
};

/// Greedy Bayesian agglomeration: always merges the live pair with the
/// highest merge posterior (ties to the smallest id pair), down to one root,
/// then cuts the tree top-down where the merge posterior drops below 1/2.
BhcResult bhc_cluster(const Eigen::MatrixXd& points,
                      const ConjugatePrior& prior, const BhcOptions& opts);

/// Small-variance agreement probe. For every pair of points it compares the
/// Bayesian pairwise merge decision (posterior > 1/2 under observation
/// variance sigma2 / beta, prior-mean variance rho2 held fixed, and
/// concentration alpha = beta^(-d/2) * exp(-beta * lambda)) against the
/// geometric rule d(i, j) < lambda evaluated at the unscaled variance.
/// As beta grows the two decisions coincide.
struct ProbeResult {
  std::int64_t pairs = 0;
  std::int64_t agreements = 0;  // pairs whose two merge decisions coincide
  double fraction = 1.0;
  bool argmin_match = false;  // best Bayesian pair == closest geometric pair
};

ProbeResult asymptotic_agreement_probe(const Eigen::MatrixXd& points,
                                       double sigma2, double lambda,
                                       double beta, double rho2);

}  // namespace rbhc
