// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <Eigen/Dense>

#include "rbhc/common.hpp"

namespace rbhc {

/// Expectation-space sufficient statistic. Length is family dependent:
/// dim for the identity-statistic families, dim + dim^2 for the full
/// Gaussian, whose trailing block is the flattened (row-major, symmetric)
/// second-moment matrix.
using SuffStat = Eigen::VectorXd;

enum class Family {
  gaussian_spherical,
  gaussian_full,
  poisson,
  multinomial,
};

enum class SmoothingMode { none, convex_blend, shift };

/// Boundary smoothing for the convex generator. convex_blend evaluates
/// phi((1-w) t + w anchor); shift evaluates phi(t + w anchor) and is only
/// meaningful when the domain is a convex cone.
struct SmoothingConfig {
  SmoothingMode mode = SmoothingMode::none;
  double weight = 0.0;
  Eigen::VectorXd anchor;
};

const char* family_name(Family family);

/// Everything needed to evaluate one family's generator: the family, its
/// dimensions and parameters, the smoothing rule, and the scale factor
/// beta (variance divisor; carried for the synthetic-data and harness
/// paths, the generator itself is evaluated unscaled).
struct FamilyDescriptor {
  Family family = Family::gaussian_spherical;
  int dim = 1;
  double sigma2 = 1.0;  // gaussian_spherical likelihood variance
  int trials = 1;       // multinomial trial count m
  SmoothingConfig smoothing;
  double beta = 1.0;

  [[nodiscard]] int stat_dim() const {
    return family == Family::gaussian_full ? dim + dim * dim : dim;
  }

  /// Throws std::invalid_argument on inconsistent configuration.
  void validate() const;

  // Factories apply each family's default smoothing.
  static FamilyDescriptor make_gaussian_spherical(int dim, double sigma2 = 1.0,
                                                  double beta = 1.0);
  static FamilyDescriptor make_poisson(double beta = 1.0);
  static FamilyDescriptor make_multinomial(int dim, int trials,
                                           double beta = 1.0);
  static FamilyDescriptor make_gaussian_full(int dim, double beta = 1.0);
};

/// Maps a raw observation to its sufficient statistic. Validates the
/// observation against the family's support (counts must be non-negative
/// integers; multinomial rows must sum to the trial count).
SuffStat sufficient_stat(const FamilyDescriptor& fam,
                         const Eigen::VectorXd& x);

/// The point the generator is actually evaluated at once smoothing is
/// applied. Identity when smoothing is disabled.
SuffStat smoothed_point(const FamilyDescriptor& fam, const SuffStat& t);

/// Convex generator phi evaluated at t (smoothing applied internally).
/// Throws singular_generator_error outside the smoothed domain.
double generator(const FamilyDescriptor& fam, const SuffStat& t);

/// Gradient of the smoothed generator with respect to t (chain rule over
/// the smoothing map included).
Eigen::VectorXd generator_grad(const FamilyDescriptor& fam, const SuffStat& t);

/// Hessian of the smoothed generator with respect to t; exactly symmetric
/// by construction. Closed forms for all four families.
Eigen::MatrixXd generator_hessian(const FamilyDescriptor& fam,
                                  const SuffStat& t);

}  // namespace rbhc
