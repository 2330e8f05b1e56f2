// Apache License, Version 2.0, refer to LICENSE.txt

#include <cmath>

#include "doctest.h"
#include "rbhc/expfam.hpp"
#include "rbhc/rng.hpp"

using rbhc::Family;
using rbhc::FamilyDescriptor;
using rbhc::SmoothingMode;
using rbhc::SuffStat;

namespace {

FamilyDescriptor unsmoothed_poisson() {
  FamilyDescriptor fam = FamilyDescriptor::make_poisson();
  fam.smoothing = {};
  fam.validate();
  return fam;
}

FamilyDescriptor unsmoothed_multinomial(int dim, int trials) {
  FamilyDescriptor fam = FamilyDescriptor::make_multinomial(dim, trials);
  fam.smoothing = {};
  fam.validate();
  return fam;
}

SuffStat vec1(double x) {
  SuffStat t(1);
  t << x;
  return t;
}

/// Draws a sufficient statistic safely inside the family's domain.
SuffStat interior_point(const FamilyDescriptor& fam, rbhc::RandomStream& rng) {
  if (fam.family == Family::gaussian_full) {
    const int d = fam.dim;
    Eigen::VectorXd mean(d);
    for (int j = 0; j < d; ++j) mean[j] = rng.normal();
    Eigen::MatrixXd a(d, d);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) a(i, j) = rng.normal();
    const Eigen::MatrixXd second =
        mean * mean.transpose() + a * a.transpose() +
        0.5 * Eigen::MatrixXd::Identity(d, d);
    SuffStat t(d + d * d);
    t.head(d) = mean;
    for (int r = 0; r < d; ++r)
      for (int c = 0; c < d; ++c) t[d + r * d + c] = second(r, c);
    return t;
  }
  SuffStat t(fam.dim);
  if (fam.family == Family::multinomial) {
    std::vector<double> conc(static_cast<std::size_t>(fam.dim), 1.0);
    const std::vector<double> w = rng.dirichlet(conc);
    for (int j = 0; j < fam.dim; ++j) t[j] = w[j] * fam.trials;
  } else if (fam.family == Family::poisson) {
    for (int j = 0; j < fam.dim; ++j) t[j] = 0.5 + 5.0 * rng.u01();
  } else {
    for (int j = 0; j < fam.dim; ++j) t[j] = rng.normal();
  }
  return t;
}

}  // namespace

TEST_CASE("poisson generator closed forms") {
  // phi(x) = x log x - x, elementwise.
  CHECK(rbhc::generator(unsmoothed_poisson(), vec1(3.0)) ==
        doctest::Approx(3.0 * std::log(3.0) - 3.0).epsilon(1e-14));

  // Shift smoothing by 0.01 keeps the boundary finite: phi(0 + 0.01).
  const FamilyDescriptor smoothed = FamilyDescriptor::make_poisson();
  CHECK(rbhc::generator(smoothed, vec1(0.0)) ==
        doctest::Approx(0.01 * std::log(0.01) - 0.01).epsilon(1e-14));
  CHECK(rbhc::generator(smoothed, vec1(3.0)) ==
        doctest::Approx(3.01 * std::log(3.01) - 3.01).epsilon(1e-14));
}

TEST_CASE("multinomial generator closed forms") {
  // phi(x) = sum_j x_j log(x_j / m); blend smoothing evaluates at
  // 0.9 x + 0.1 (m/d) 1.
  const FamilyDescriptor fam = FamilyDescriptor::make_multinomial(2, 2);
  SuffStat t(2);
  t << 2.0, 0.0;
  const double expected = 1.9 * std::log(1.9 / 2.0) + 0.1 * std::log(0.1 / 2.0);
  CHECK(rbhc::generator(fam, t) == doctest::Approx(expected).epsilon(1e-14));

  // Without smoothing the same point is degenerate: 0 log 0 -> 0 by limit,
  // and the interior value is exact.
  SuffStat interior(2);
  interior << 1.5, 0.5;
  const double phi =
      1.5 * std::log(1.5 / 2.0) + 0.5 * std::log(0.5 / 2.0);
  CHECK(rbhc::generator(unsmoothed_multinomial(2, 2), interior) ==
        doctest::Approx(phi).epsilon(1e-14));
}

TEST_CASE("spherical gaussian generator is the scaled squared norm") {
  const FamilyDescriptor fam = FamilyDescriptor::make_gaussian_spherical(2, 2.0);
  SuffStat t(2);
  t << 2.0, 0.0;
  // ||t||^2 / (2 sigma^2) = 4 / 4.
  CHECK(rbhc::generator(fam, t) == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("full gaussian generator is the log-volume of the scatter") {
  FamilyDescriptor fam = FamilyDescriptor::make_gaussian_full(2);
  fam.smoothing = {};
  fam.validate();
  SuffStat t(6);
  // mean (1, 0), second moment I + mean mean^T: scatter = I, logdet = 0.
  t << 1.0, 0.0, 2.0, 0.0, 0.0, 1.0;
  CHECK(rbhc::generator(fam, t) == doctest::Approx(0.0).scale(1.0).epsilon(1e-14));

  // Degenerate scatter with no smoothing leaves the domain.
  SuffStat bad(6);
  bad << 1.0, 0.0, 1.0, 0.0, 0.0, 0.0;  // second moment == mean mean^T
  CHECK_THROWS_AS((void)rbhc::generator(fam, bad),
                  rbhc::singular_generator_error);

  // The factory default shifts the scatter by 0.01 I, making it finite.
  const FamilyDescriptor smoothed = FamilyDescriptor::make_gaussian_full(2);
  CHECK(rbhc::generator(smoothed, bad) ==
        doctest::Approx(-0.5 * 2.0 * std::log(0.01)).epsilon(1e-12));
}

TEST_CASE("sufficient statistics") {
  const FamilyDescriptor sph = FamilyDescriptor::make_gaussian_spherical(2);
  Eigen::VectorXd x(2);
  x << 1.0, 2.0;
  CHECK(rbhc::sufficient_stat(sph, x) == x);

  const FamilyDescriptor full = FamilyDescriptor::make_gaussian_full(2);
  const SuffStat t = rbhc::sufficient_stat(full, x);
  REQUIRE(t.size() == 6);
  CHECK(t[0] == 1.0);
  CHECK(t[1] == 2.0);
  CHECK(t[2] == 1.0);  // xx^T row-major: 1, 2 / 2, 4
  CHECK(t[3] == 2.0);
  CHECK(t[4] == 2.0);
  CHECK(t[5] == 4.0);

  const FamilyDescriptor mult = FamilyDescriptor::make_multinomial(2, 3);
  Eigen::VectorXd counts(2);
  counts << 2.0, 1.0;
  CHECK(rbhc::sufficient_stat(mult, counts) == counts);
  Eigen::VectorXd wrong_sum(2);
  wrong_sum << 2.0, 2.0;
  CHECK_THROWS_AS((void)rbhc::sufficient_stat(mult, wrong_sum),
                  std::invalid_argument);

  const FamilyDescriptor pois = unsmoothed_poisson();
  CHECK_THROWS_AS((void)rbhc::sufficient_stat(pois, vec1(-1.0)),
                  std::invalid_argument);

  // Counts live on a single axis; a wider descriptor is rejected outright.
  FamilyDescriptor wide = FamilyDescriptor::make_poisson();
  wide.dim = 2;
  wide.smoothing.anchor = Eigen::VectorXd::Ones(2);
  CHECK_THROWS_AS(wide.validate(), std::invalid_argument);

  Eigen::VectorXd wrong_dim(3);
  wrong_dim << 1.0, 2.0, 3.0;
  CHECK_THROWS_AS((void)rbhc::sufficient_stat(sph, wrong_dim),
                  std::invalid_argument);
}

TEST_CASE("smoothed_point applies the configured map") {
  const FamilyDescriptor mult = FamilyDescriptor::make_multinomial(2, 2);
  SuffStat t(2);
  t << 2.0, 0.0;
  const SuffStat s = rbhc::smoothed_point(mult, t);
  CHECK(s[0] == doctest::Approx(1.9));
  CHECK(s[1] == doctest::Approx(0.1));

  const FamilyDescriptor pois = FamilyDescriptor::make_poisson();
  CHECK(rbhc::smoothed_point(pois, vec1(2.0))[0] == doctest::Approx(2.01));

  const FamilyDescriptor sph = FamilyDescriptor::make_gaussian_spherical(2);
  SuffStat u(2);
  u << -1.0, 4.0;
  CHECK(rbhc::smoothed_point(sph, u) == u);  // no smoothing by default
}

TEST_CASE("closed-form hessians") {
  // poisson: diag(1/t).
  CHECK(rbhc::generator_hessian(unsmoothed_poisson(), vec1(2.0))(0, 0) ==
        doctest::Approx(0.5).epsilon(1e-14));

  // spherical, sigma^2 = 1: identity.
  const FamilyDescriptor sph = FamilyDescriptor::make_gaussian_spherical(3);
  SuffStat t(3);
  t << 0.3, -2.0, 5.0;
  const Eigen::MatrixXd h = rbhc::generator_hessian(sph, t);
  CHECK((h - Eigen::MatrixXd::Identity(3, 3)).norm() ==
        doctest::Approx(0.0).scale(1.0).epsilon(1e-14));
}

TEST_CASE("gradient and hessian match finite differences") {
  rbhc::RandomStream rng(2024, 0);
  const std::vector<FamilyDescriptor> fams = {
      FamilyDescriptor::make_gaussian_spherical(3, 0.7),
      FamilyDescriptor::make_poisson(),
      FamilyDescriptor::make_multinomial(4, 6),
      FamilyDescriptor::make_gaussian_full(2),
  };
  for (const FamilyDescriptor& fam : fams) {
    for (int rep = 0; rep < 5; ++rep) {
      const SuffStat t = interior_point(fam, rng);
      const int n = fam.stat_dim();
      const Eigen::VectorXd grad = rbhc::generator_grad(fam, t);
      const Eigen::MatrixXd hess = rbhc::generator_hessian(fam, t);
      REQUIRE(grad.size() == n);
      REQUIRE(hess.rows() == n);
      REQUIRE(hess.cols() == n);
      CHECK((hess - hess.transpose()).norm() ==
            doctest::Approx(0.0).scale(1.0).epsilon(1e-12));

      const double h = 1e-5;
      for (int j = 0; j < n; ++j) {
        SuffStat tp = t, tm = t;
        tp[j] += h;
        tm[j] -= h;
        const double fd =
            (rbhc::generator(fam, tp) - rbhc::generator(fam, tm)) / (2.0 * h);
        CHECK(grad[j] ==
              doctest::Approx(fd).epsilon(1e-4).scale(std::abs(fd) + 1.0));

        const Eigen::VectorXd gp = rbhc::generator_grad(fam, tp);
        const Eigen::VectorXd gm = rbhc::generator_grad(fam, tm);
        for (int i = 0; i < n; ++i) {
          const double fd2 = (gp[i] - gm[i]) / (2.0 * h);
          CHECK(hess(i, j) ==
                doctest::Approx(fd2).epsilon(1e-4).scale(std::abs(fd2) + 1.0));
        }
      }
    }
  }
}

TEST_CASE("descriptor validation rejects nonsense") {
  FamilyDescriptor fam = FamilyDescriptor::make_gaussian_spherical(2);
  fam.sigma2 = -1.0;
  CHECK_THROWS_AS(fam.validate(), std::invalid_argument);

  FamilyDescriptor mult = FamilyDescriptor::make_multinomial(3, 5);
  mult.trials = 0;
  CHECK_THROWS_AS(mult.validate(), std::invalid_argument);

  FamilyDescriptor pois = FamilyDescriptor::make_poisson();
  pois.dim = 0;
  CHECK_THROWS_AS(pois.validate(), std::invalid_argument);
}
