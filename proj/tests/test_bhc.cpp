// Apache License, Version 2.0, refer to LICENSE.txt

#include <cmath>
#include <vector>

#include "doctest.h"
#include "rbhc/bhc.hpp"
#include "rbhc/cluster.hpp"
#include "rbhc/common.hpp"
#include "rbhc/rng.hpp"

using rbhc::BhcOptions;
using rbhc::BhcResult;
using rbhc::ConjugatePrior;
using rbhc::ObsStats;

namespace {

Eigen::MatrixXd poisson_points(int n, int dim, double mean,
                               std::uint64_t seed) {
  rbhc::RandomStream rng(seed, 0);
  Eigen::MatrixXd points(n, dim);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < dim; ++j)
      points(i, j) = static_cast<double>(rng.poisson(mean));
  return points;
}

Eigen::MatrixXd multinomial_points(int n, int dim, int trials,
                                   std::uint64_t seed) {
  rbhc::RandomStream rng(seed, 0);
  Eigen::MatrixXd points = Eigen::MatrixXd::Zero(n, dim);
  for (int i = 0; i < n; ++i) {
    for (int t = 0; t < trials; ++t) {
      const std::int64_t j = rng.uniform_int(0, dim - 1);
      points(i, static_cast<int>(j)) += 1.0;
    }
  }
  return points;
}

Eigen::MatrixXd normal_points(int n, int dim, std::uint64_t seed) {
  rbhc::RandomStream rng(seed, 0);
  Eigen::MatrixXd points(n, dim);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < dim; ++j) points(i, j) = rng.normal();
  return points;
}

/// Log density of a 1-D joint normal sample with exchangeable covariance
/// v I + rho2 11^T — the closed-form evidence of the conjugate normal
/// model, computed independently of the library's streaming recursion.
double joint_normal_logpdf(const Eigen::VectorXd& x, double m0, double v,
                           double rho2) {
  const Eigen::Index n = x.size();
  const Eigen::MatrixXd cov =
      v * Eigen::MatrixXd::Identity(n, n) +
      rho2 * Eigen::MatrixXd::Ones(n, n);
  const Eigen::VectorXd centered =
      x - Eigen::VectorXd::Constant(n, m0);
  const Eigen::LLT<Eigen::MatrixXd> llt(cov);
  const Eigen::VectorXd solved = llt.solve(centered);
  double logdet = 0.0;
  for (Eigen::Index i = 0; i < n; ++i)
    logdet += 2.0 * std::log(llt.matrixL()(i, i));
  return -0.5 * (static_cast<double>(n) * std::log(2.0 * M_PI) + logdet +
                 centered.dot(solved));
}

}  // namespace

TEST_CASE("single-observation marginal oracles") {
  // Poisson mean with a Gamma(1, 1) prior, observation 1:
  // integral of Pois(1 | rho) Gamma(rho | 1, 1) = Gamma(2) / 2^2 = 1/4.
  const ConjugatePrior gp = ConjugatePrior::make_gamma_poisson(1, 1.0, 1.0);
  Eigen::RowVectorXd x1(1);
  x1 << 1.0;
  CHECK(rbhc::log_marginal(gp, rbhc::stats_from_point(gp, x1)) ==
        doctest::Approx(-std::log(4.0)).epsilon(1e-13));

  // Two categories, one trial, uniform Dirichlet(1,1): each outcome 1/2.
  const ConjugatePrior dm = ConjugatePrior::make_dirichlet_multinomial(
      Eigen::VectorXd::Ones(2), 1);
  Eigen::RowVectorXd c(2);
  c << 1.0, 0.0;
  CHECK(rbhc::log_marginal(dm, rbhc::stats_from_point(dm, c)) ==
        doctest::Approx(std::log(0.5)).epsilon(1e-13));

  // Normal mean prior N(0, 1), observation variance 1, x = 0:
  // N(0 | 0, 2) = 1 / sqrt(4 pi).
  const ConjugatePrior gk = ConjugatePrior::make_gaussian_known_var(
      Eigen::VectorXd::Zero(1), 1.0, 1.0);
  Eigen::RowVectorXd z(1);
  z << 0.0;
  CHECK(rbhc::log_marginal(gk, rbhc::stats_from_point(gk, z)) ==
        doctest::Approx(-0.5 * std::log(4.0 * M_PI)).epsilon(1e-13));
}

TEST_CASE("pooled normal marginal equals the joint-covariance evidence") {
  const double m0 = 0.3, v = 0.8, rho2 = 2.5;
  const ConjugatePrior prior = ConjugatePrior::make_gaussian_known_var(
      Eigen::VectorXd::Constant(1, m0), rho2, v);
  rbhc::RandomStream rng(606, 0);
  for (int rep = 0; rep < 10; ++rep) {
    const int n = static_cast<int>(rng.uniform_int(1, 7));
    Eigen::VectorXd x(n);
    for (int i = 0; i < n; ++i) x[i] = 2.0 * rng.normal();
    ObsStats stats = rbhc::stats_from_point(prior, x.row(0));
    for (int i = 1; i < n; ++i)
      stats = rbhc::merge_stats(stats, rbhc::stats_from_point(prior, x.row(i)));
    CHECK(rbhc::log_marginal(prior, stats) ==
          doctest::Approx(joint_normal_logpdf(x, m0, v, rho2)).epsilon(1e-11));
  }
}

TEST_CASE("two-point posterior matches the closed form") {
  // With concentration alpha, the first merge's posterior is
  // p_pair / (p_pair + alpha p1 p2).
  const double v = 1.0, rho2 = 4.0, alpha = 2.0;
  const ConjugatePrior prior = ConjugatePrior::make_gaussian_known_var(
      Eigen::VectorXd::Zero(1), rho2, v);
  Eigen::MatrixXd points(2, 1);
  points << 0.4, -1.1;

  BhcOptions opts;
  opts.alpha = alpha;
  const BhcResult result = rbhc::bhc_cluster(points, prior, opts);
  REQUIRE(result.forest.merges.size() == 1);

  const double lp1 = joint_normal_logpdf(points.row(0).transpose(), 0, v, rho2);
  const double lp2 = joint_normal_logpdf(points.row(1).transpose(), 0, v, rho2);
  Eigen::VectorXd both(2);
  both << points(0, 0), points(1, 0);
  const double lp12 = joint_normal_logpdf(both, 0, v, rho2);
  const double expected =
      1.0 / (1.0 + alpha * std::exp(lp1 + lp2 - lp12));
  CHECK(result.merge_posteriors[0] ==
        doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("tree potentials satisfy their recursions at every node") {
  struct Case {
    ConjugatePrior prior;
    Eigen::MatrixXd points;
  };
  const std::vector<Case> cases = {
      {ConjugatePrior::make_gamma_poisson(2, 2.0, 0.5),
       poisson_points(16, 2, 4.0, 41)},
      {ConjugatePrior::make_dirichlet_multinomial(
           Eigen::VectorXd::Constant(3, 1.5), 5),
       multinomial_points(16, 3, 5, 42)},
      {ConjugatePrior::make_gaussian_known_var(Eigen::VectorXd::Zero(2), 3.0,
                                               1.0),
       normal_points(16, 2, 43)},
  };
  const double alpha = 1.3;

  for (const Case& c : cases) {
    BhcOptions opts;
    opts.alpha = alpha;
    const BhcResult result = rbhc::bhc_cluster(c.points, c.prior, opts);
    const std::int64_t n = result.forest.leaf_count;
    REQUIRE(static_cast<std::int64_t>(result.nodes.size()) == 2 * n - 1);

    // Recompute each node's pooled observation stats independently.
    std::vector<ObsStats> stats;
    stats.reserve(result.nodes.size());
    for (std::int64_t i = 0; i < n; ++i)
      stats.push_back(rbhc::stats_from_point(c.prior, c.points.row(i)));
    for (std::size_t i = static_cast<std::size_t>(n); i < result.nodes.size();
         ++i) {
      const rbhc::BhcNodeInfo& node = result.nodes[i];
      stats.push_back(
          rbhc::merge_stats(stats[static_cast<std::size_t>(node.left)],
                            stats[static_cast<std::size_t>(node.right)]));
    }

    const double log_alpha = std::log(alpha);
    for (std::size_t i = 0; i < result.nodes.size(); ++i) {
      const rbhc::BhcNodeInfo& node = result.nodes[i];
      if (node.left < 0) {
        CHECK(node.size == 1);
        CHECK(node.log_gamma == doctest::Approx(log_alpha).epsilon(1e-14));
        continue;
      }
      const rbhc::BhcNodeInfo& l =
          result.nodes[static_cast<std::size_t>(node.left)];
      const rbhc::BhcNodeInfo& r =
          result.nodes[static_cast<std::size_t>(node.right)];
      CHECK(node.size == l.size + r.size);

      // gamma_c = alpha Gamma(|c|) + gamma_l gamma_r.
      const double log_alpha_gamma =
          log_alpha + std::lgamma(static_cast<double>(node.size));
      CHECK(node.log_gamma ==
            doctest::Approx(rbhc::log_sum_exp(log_alpha_gamma,
                                              l.log_gamma + r.log_gamma))
                .epsilon(1e-9));

      // phi_h = alpha Gamma(|c|) * pooled marginal.
      CHECK(node.log_phi_h ==
            doctest::Approx(log_alpha_gamma +
                            rbhc::log_marginal(c.prior, stats[i]))
                .epsilon(1e-9));

      // phi_tree = phi_h + phi_tree(left) phi_tree(right).
      CHECK(node.log_phi_tree ==
            doctest::Approx(rbhc::log_sum_exp(
                                node.log_phi_h,
                                l.log_phi_tree + r.log_phi_tree))
                .epsilon(1e-9));

      // The stored posterior is consistent with the odds decomposition.
      CHECK(node.log_odds ==
            doctest::Approx(l.log_phi_tree + r.log_phi_tree - node.log_phi_h)
                .epsilon(1e-9));
      CHECK(node.posterior > 0.0);
      CHECK(node.posterior < 1.0);
      CHECK(node.posterior ==
            doctest::Approx(rbhc::stable_inv_logit(node.log_odds))
                .epsilon(1e-12));
    }

    // Forest heights carry the merge log-odds.
    for (std::size_t i = 0; i < result.forest.merges.size(); ++i) {
      CHECK(result.forest.merges[i].height ==
            result.nodes[static_cast<std::size_t>(n) + i].log_odds);
    }
  }
}

TEST_CASE("posterior cut separates well-separated blobs") {
  rbhc::RandomStream rng(99, 0);
  Eigen::MatrixXd points(16, 1);
  for (int i = 0; i < 8; ++i) points(i, 0) = 0.1 * rng.normal();
  for (int i = 8; i < 16; ++i) points(i, 0) = 50.0 + 0.1 * rng.normal();

  const ConjugatePrior prior = ConjugatePrior::make_gaussian_known_var(
      Eigen::VectorXd::Zero(1), 1000.0, 1.0);
  const BhcResult result = rbhc::bhc_cluster(points, prior, BhcOptions{});

  // The root joins the two blobs; one cluster is a terrible explanation.
  CHECK(result.nodes.back().posterior < 0.5);
  CHECK(result.cut.num_clusters == 2);
  for (int i = 0; i < 8; ++i) CHECK(result.cut.labels[0] == result.cut.labels[i]);
  for (int i = 8; i < 16; ++i)
    CHECK(result.cut.labels[8] == result.cut.labels[i]);
  CHECK(result.cut.labels[0] != result.cut.labels[8]);
}

TEST_CASE("asymptotic probe: Bayesian and geometric decisions coincide") {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const Eigen::MatrixXd points = normal_points(10, 2, seed);

    // A threshold inside the observed range of pairwise merge costs makes
    // both decision outcomes reachable.
    const rbhc::FamilyDescriptor fam =
        rbhc::FamilyDescriptor::make_gaussian_spherical(2);
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    for (int i = 0; i < 10; ++i) {
      for (int j = i + 1; j < 10; ++j) {
        const double d = rbhc::dissimilarity(
            fam, rbhc::summary_from_point(fam, points.row(i).transpose(), i),
            rbhc::summary_from_point(fam, points.row(j).transpose(), j));
        lo = std::min(lo, d);
        hi = std::max(hi, d);
      }
    }
    const double lambda = 0.5 * (lo + hi);

    const rbhc::ProbeResult probe =
        rbhc::asymptotic_agreement_probe(points, 1.0, lambda, 1e4, 10.0);
    CHECK(probe.pairs == 45);
    CHECK(probe.agreements == probe.pairs);
    CHECK(probe.fraction == doctest::Approx(1.0));
    CHECK(probe.argmin_match);
  }
}

TEST_CASE("prior validation") {
  CHECK_THROWS_AS(ConjugatePrior::make_gamma_poisson(1, -1.0, 1.0).validate(),
                  std::invalid_argument);
  CHECK_THROWS_AS(ConjugatePrior::make_gaussian_known_var(
                      Eigen::VectorXd::Zero(1), 0.0, 1.0)
                      .validate(),
                  std::invalid_argument);
  BhcOptions opts;
  opts.alpha = 0.0;
  const Eigen::MatrixXd points = normal_points(4, 1, 7);
  const ConjugatePrior prior = ConjugatePrior::make_gaussian_known_var(
      Eigen::VectorXd::Zero(1), 1.0, 1.0);
  CHECK_THROWS_AS((void)rbhc::bhc_cluster(points, prior, opts),
                  std::invalid_argument);
}
