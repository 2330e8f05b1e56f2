// Apache License, Version 2.0, refer to LICENSE.txt

#include <cmath>
#include <set>

#include "doctest.h"
#include "rbhc/synth.hpp"

using rbhc::Dataset;
using rbhc::Family;
using rbhc::SynthSpec;

TEST_CASE("generated datasets have the declared shape and labels") {
  SynthSpec spec;
  spec.family = Family::gaussian_full;
  spec.n = 300;
  spec.k = 5;
  spec.dim = 3;
  spec.seed = 11;
  const Dataset ds = rbhc::generate(spec);
  CHECK(ds.points.rows() == 300);
  CHECK(ds.points.cols() == 3);
  REQUIRE(ds.labels.size() == 300);
  std::set<int> seen(ds.labels.begin(), ds.labels.end());
  for (int label : ds.labels) {
    CHECK(label >= 0);
    CHECK(label < 5);
  }
  CHECK(seen.size() > 1);
  CHECK(ds.points.allFinite());
}

TEST_CASE("generation is a pure function of the seed") {
  SynthSpec spec;
  spec.family = Family::poisson;
  spec.n = 120;
  spec.k = 4;
  spec.dim = 1;
  spec.seed = 99;
  const Dataset a = rbhc::generate(spec);
  const Dataset b = rbhc::generate(spec);
  CHECK((a.points.array() == b.points.array()).all());
  CHECK(a.labels == b.labels);
  spec.seed = 100;
  const Dataset c = rbhc::generate(spec);
  CHECK(a.points != c.points);
}

TEST_CASE("multinomial rows sum to the trial count at any scale") {
  SynthSpec spec;
  spec.family = Family::multinomial;
  spec.n = 80;
  spec.k = 3;
  spec.dim = 6;
  spec.trials = 10;
  spec.seed = 5;
  for (double beta : {1.0, 4.0}) {
    spec.beta = beta;
    const Dataset ds = rbhc::generate(spec);
    for (int i = 0; i < ds.points.rows(); ++i) {
      CHECK(ds.points.row(i).sum() == doctest::Approx(10.0).epsilon(1e-9));
      CHECK(ds.points.row(i).minCoeff() >= 0.0);
    }
    if (beta == 1.0) {
      // Unscaled draws are integral counts.
      for (int i = 0; i < ds.points.rows(); ++i)
        for (int j = 0; j < ds.points.cols(); ++j)
          CHECK(std::abs(ds.points(i, j) - std::round(ds.points(i, j))) <
                1e-12);
    }
  }
}

TEST_CASE("the scale factor shrinks within-component spread") {
  SynthSpec spec;
  spec.family = Family::gaussian_full;
  spec.n = 2000;
  spec.k = 1;  // a single component isolates the observation noise
  spec.dim = 3;
  spec.seed = 17;

  auto spread = [](const Dataset& ds) {
    const Eigen::RowVectorXd mean = ds.points.colwise().mean();
    const Eigen::MatrixXd centered = ds.points.rowwise() - mean;
    return centered.squaredNorm() / static_cast<double>(ds.points.rows());
  };

  spec.beta = 1.0;
  const double base = spread(rbhc::generate(spec));
  spec.beta = 100.0;
  const double shrunk = spread(rbhc::generate(spec));
  CHECK(base / shrunk == doctest::Approx(100.0).epsilon(0.35));
}

TEST_CASE("poisson scaling keeps the mean and shrinks the variance") {
  SynthSpec spec;
  spec.family = Family::poisson;
  spec.n = 4000;
  spec.k = 1;
  spec.dim = 1;
  spec.seed = 23;

  spec.beta = 1.0;
  const Dataset a = rbhc::generate(spec);
  spec.beta = 16.0;
  const Dataset b = rbhc::generate(spec);
  const double mean_a = a.points.col(0).mean();
  const double mean_b = b.points.col(0).mean();
  // Both approximate the same component mean (same seed draws it).
  CHECK(mean_a == doctest::Approx(mean_b).epsilon(0.1));
  const double var_a =
      (a.points.col(0).array() - mean_a).square().mean();
  const double var_b =
      (b.points.col(0).array() - mean_b).square().mean();
  CHECK(var_a / var_b == doctest::Approx(16.0).epsilon(0.35));
  // Scaled counts need not be integers.
  bool non_integral = false;
  for (int i = 0; i < b.points.rows(); ++i) {
    if (std::abs(b.points(i, 0) - std::round(b.points(i, 0))) > 1e-9)
      non_integral = true;
  }
  CHECK(non_integral);
}

TEST_CASE("wishart draws have the right mean") {
  rbhc::RandomStream rng(31, 0);
  const int d = 3;
  Eigen::MatrixXd scale(d, d);
  scale << 2.0, 0.3, 0.0, 0.3, 1.5, -0.2, 0.0, -0.2, 1.0;
  const double df = 7.0;
  Eigen::MatrixXd mean = Eigen::MatrixXd::Zero(d, d);
  const int reps = 4000;
  for (int i = 0; i < reps; ++i)
    mean += rbhc::detail::wishart(rng, df, scale);
  mean /= static_cast<double>(reps);
  CHECK((mean - df * scale).norm() / (df * scale).norm() < 0.05);
}

TEST_CASE("triplet samples follow the benchmark protocol") {
  for (Family family :
       {Family::poisson, Family::multinomial, Family::gaussian_full}) {
    const rbhc::TripletSample a =
        rbhc::reducibility_triplet(family, 20, 100, 1.0, 7, 3);
    const rbhc::TripletSample b =
        rbhc::reducibility_triplet(family, 20, 100, 1.0, 7, 3);
    std::set<std::int64_t> members;
    for (int c = 0; c < 3; ++c) {
      CHECK(a.summaries[c].size >= 20);
      CHECK(a.summaries[c].size <= 100);
      CHECK((a.summaries[c].mean_stat.array() == b.summaries[c].mean_stat.array()).all());
      for (std::int64_t id : a.summaries[c].members) members.insert(id);
    }
    // Disjoint membership across the three clusters.
    CHECK(static_cast<std::int64_t>(members.size()) ==
          a.summaries[0].size + a.summaries[1].size + a.summaries[2].size);
    CHECK(a.component_mean_stat.size() == a.fam.stat_dim());

    const rbhc::TripletSample c =
        rbhc::reducibility_triplet(family, 20, 100, 1.0, 7, 4);
    CHECK(a.summaries[0].mean_stat != c.summaries[0].mean_stat);
  }
}

TEST_CASE("spec validation") {
  SynthSpec spec;
  spec.n = 0;
  CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
  spec = SynthSpec{};
  spec.k = 0;
  CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
  spec = SynthSpec{};
  spec.beta = 0.0;
  CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
}
