// Apache License, Version 2.0, refer to LICENSE.txt

#include <algorithm>
#include <cmath>
#include <map>
#include <vector>

#include "doctest.h"
#include "rbhc/agglomerate.hpp"
#include "rbhc/eval.hpp"
#include "rbhc/rng.hpp"

namespace {

/// Contingency-table implementation of the chance-adjusted pair-counting
/// score, written independently of the library version.
double brute_force_ari(const std::vector<int>& a, const std::vector<int>& b) {
  REQUIRE(a.size() == b.size());
  const double n = static_cast<double>(a.size());
  std::map<std::pair<int, int>, double> cells;
  std::map<int, double> row_sum, col_sum;
  for (std::size_t i = 0; i < a.size(); ++i) {
    cells[{a[i], b[i]}] += 1.0;
    row_sum[a[i]] += 1.0;
    col_sum[b[i]] += 1.0;
  }
  auto comb2 = [](double m) { return m * (m - 1.0) / 2.0; };
  double index = 0.0, rows = 0.0, cols = 0.0;
  for (const auto& [key, v] : cells) index += comb2(v);
  for (const auto& [key, v] : row_sum) rows += comb2(v);
  for (const auto& [key, v] : col_sum) cols += comb2(v);
  const double expected = rows * cols / comb2(n);
  const double max_index = 0.5 * (rows + cols);
  if (max_index == expected) return 1.0;
  return (index - expected) / (max_index - expected);
}

std::vector<int> random_labels(rbhc::RandomStream& rng, int n, int k) {
  std::vector<int> labels(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i)
    labels[static_cast<std::size_t>(i)] =
        static_cast<int>(rng.uniform_int(0, k - 1));
  return labels;
}

Eigen::MatrixXd random_points(int n, int dim, std::uint64_t seed) {
  rbhc::RandomStream rng(seed, 0);
  Eigen::MatrixXd points(n, dim);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < dim; ++j) points(i, j) = rng.normal();
  return points;
}

}  // namespace

TEST_CASE("pair-counting score oracle agreement") {
  rbhc::RandomStream rng(314, 0);
  for (int rep = 0; rep < 40; ++rep) {
    const int n = static_cast<int>(rng.uniform_int(2, 50));
    const int ka = static_cast<int>(rng.uniform_int(1, 6));
    const int kb = static_cast<int>(rng.uniform_int(1, 6));
    const std::vector<int> a = random_labels(rng, n, ka);
    const std::vector<int> b = random_labels(rng, n, kb);
    CHECK(rbhc::adjusted_rand_index(a, b) ==
          doctest::Approx(brute_force_ari(a, b)).epsilon(1e-12));
  }
}

TEST_CASE("pair-counting score special values and symmetries") {
  const std::vector<int> a = {0, 0, 1, 1, 2, 2};
  CHECK(rbhc::adjusted_rand_index(a, a) == doctest::Approx(1.0));

  // Renaming labels changes nothing.
  const std::vector<int> renamed = {7, 7, -2, -2, 40, 40};
  CHECK(rbhc::adjusted_rand_index(a, renamed) == doctest::Approx(1.0));

  // Symmetry.
  const std::vector<int> b = {0, 1, 0, 1, 0, 1};
  CHECK(rbhc::adjusted_rand_index(a, b) ==
        doctest::Approx(rbhc::adjusted_rand_index(b, a)).epsilon(1e-15));

  // Degenerate agreement: both sides one block (denominator vanishes).
  const std::vector<int> ones_a = {3, 3, 3};
  const std::vector<int> ones_b = {5, 5, 5};
  CHECK(rbhc::adjusted_rand_index(ones_a, ones_b) == doctest::Approx(1.0));

  CHECK_THROWS_AS(
      (void)rbhc::adjusted_rand_index(a, std::vector<int>{0, 1}),
      std::invalid_argument);
}

TEST_CASE("benchmark trials are deterministic and sane") {
  const rbhc::TrialReport r1 =
      rbhc::reducibility_trial(rbhc::Family::poisson, 20, 100, 1.0, 5, 17);
  const rbhc::TrialReport r2 =
      rbhc::reducibility_trial(rbhc::Family::poisson, 20, 100, 1.0, 5, 17);
  CHECK(r1.d_exact == r2.d_exact);
  CHECK(r1.d_approx == r2.d_approx);
  CHECK(r1.reducible == r2.reducible);
  CHECK(r1.d_exact > 0.0);
  CHECK(r1.rel_error >= 0.0);
  CHECK(r1.rel_error <= 2.0);
  // The reported pair is the minimal one.
  const double dmin =
      std::min({r1.d_star_01, r1.d_star_02, r1.d_star_12});
  CHECK(r1.d_exact == doctest::Approx(dmin));
}

TEST_CASE("small aggregated run reproduces the per-trial mean") {
  const rbhc::ReducibilitySummary summary =
      rbhc::run_reducibility(rbhc::Family::poisson, 400, 1.0, 7);
  CHECK(summary.trials == 400);
  CHECK(summary.violations == 0);  // the one-dimensional case never violates
  CHECK(summary.domain_errors == 0);

  rbhc::KahanSum acc;
  for (int t = 0; t < 400; ++t)
    acc.add(rbhc::reducibility_trial(rbhc::Family::poisson, 20, 100, 1.0, 7,
                                     static_cast<std::uint64_t>(t))
                .rel_error);
  CHECK(summary.mean_rel_error ==
        doctest::Approx(acc.value() / 400.0).epsilon(1e-12));
}

TEST_CASE("error-decay sweep emits every cell deterministically") {
  const std::vector<double> betas = {1.0, 4.0};
  const std::vector<std::int64_t> sizes = {40, 80};
  const auto cells = rbhc::error_decay_sweep(rbhc::Family::gaussian_full,
                                             betas, sizes, 50, 3);
  REQUIRE(cells.size() == 4);
  for (const rbhc::SweepCell& cell : cells) {
    CHECK(cell.trials == 50);
    CHECK(cell.mean_rel_error > 0.0);
  }
  const auto again = rbhc::error_decay_sweep(rbhc::Family::gaussian_full,
                                             betas, sizes, 50, 3);
  for (std::size_t i = 0; i < cells.size(); ++i)
    CHECK(cells[i].mean_rel_error == again[i].mean_rel_error);
}

TEST_CASE("tree cutting removes the most expensive merges") {
  // Chain 0-1-2-3 with increasing merge heights: cutting at k splits off
  // the latest merges first.
  rbhc::Forest forest;
  forest.leaf_count = 4;
  forest.merges = {{0, 1, 0.1, 2}, {2, 3, 0.2, 2}, {4, 5, 0.9, 4}};
  forest.roots = {6};

  const rbhc::Partition two = rbhc::cut_tree(forest, 2);
  CHECK(two.num_clusters == 2);
  CHECK(two.labels[0] == two.labels[1]);
  CHECK(two.labels[2] == two.labels[3]);
  CHECK(two.labels[0] != two.labels[2]);

  const rbhc::Partition one = rbhc::cut_tree(forest, 1);
  CHECK(one.num_clusters == 1);
  const rbhc::Partition four = rbhc::cut_tree(forest, 4);
  CHECK(four.num_clusters == 4);
}

TEST_CASE("classic linkage baselines on a hand-checked example") {
  // 1-D points 0, 1, 10, 12: single and complete linkage both pair
  // {0,1} and {10,12} at k=2.
  Eigen::MatrixXd points(4, 1);
  points << 0.0, 1.0, 10.0, 12.0;
  for (rbhc::LinkageRule rule :
       {rbhc::LinkageRule::single, rbhc::LinkageRule::complete,
        rbhc::LinkageRule::ward}) {
    const rbhc::Partition p = rbhc::baseline_cluster(points, rule, 2);
    CHECK(p.num_clusters == 2);
    CHECK(p.labels[0] == p.labels[1]);
    CHECK(p.labels[2] == p.labels[3]);
    CHECK(p.labels[0] != p.labels[2]);
  }

  // Single vs complete disagree on the classic chain: 0, 2, 3, 5.5.
  Eigen::MatrixXd chain(4, 1);
  chain << 0.0, 2.0, 3.0, 5.5;
  const rbhc::Partition single =
      rbhc::baseline_cluster(chain, rbhc::LinkageRule::single, 2);
  // Single linkage keeps the chain {0,2,3} together: gap 2.5 > 1.
  CHECK(single.labels[0] == single.labels[1]);
  CHECK(single.labels[1] == single.labels[2]);
  CHECK(single.labels[0] != single.labels[3]);
}

TEST_CASE("ward baseline reproduces the spherical merge structure") {
  // The classic minimum-variance criterion orders merges identically to
  // the spherical unit-variance merge cost, so partitions coincide at
  // every level.
  const Eigen::MatrixXd points = random_points(48, 2, 4242);
  const rbhc::Forest ward = rbhc::baseline_tree(points, rbhc::LinkageRule::ward);
  const rbhc::Forest sph = rbhc::greedy_cluster(
      points, rbhc::FamilyDescriptor::make_gaussian_spherical(2),
      std::numeric_limits<double>::infinity());
  REQUIRE(ward.merges.size() == sph.merges.size());
  for (int k : {2, 3, 5, 10}) {
    const rbhc::Partition a = rbhc::cut_tree(ward, k);
    const rbhc::Partition b = rbhc::cut_tree(sph, k);
    CHECK(a.num_clusters == k);
    CHECK(rbhc::adjusted_rand_index(a, b) == doctest::Approx(1.0));
  }
}
