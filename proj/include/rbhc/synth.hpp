// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "rbhc/cluster.hpp"
#include "rbhc/rng.hpp"

namespace rbhc {

struct Dataset {
  Eigen::MatrixXd points;  // one row per observation
  std::vector<int> labels; // generating component of each row
};

/// Mixture-data recipe. Component parameters are drawn from the family's
/// hyperprior, then each observation picks a component uniformly at random.
struct SynthSpec {
  Family family = Family::gaussian_full;
  std::int64_t n = 1000;
  int k = 6;    // mixture components
  int dim = 3;  // poisson: independent dimensions; multinomial: categories
  int trials = 10;  // multinomial row sum m

  // Hyperpriors. Poisson means are Gamma(shape, rate) (mean shape/rate);
  // multinomial probabilities are Dir(dirichlet_conc * 1); full-Gaussian
  // components draw a precision from a Wishart(wishart_df, Psi) with
  // Psi = A A^T + dim * I (A unit normal), and a mean from
  // N(0, (mean_precision * precision)^{-1}).
  double gamma_shape = 2.0;
  double gamma_rate = 0.05;
  double dirichlet_conc = 0.5;
  double mean_precision = 0.08;
  double wishart_df = 6.0;

  // Variance scale: observation noise shrinks as 1/beta around the
  // component mean (counts are sampled at inflated intensity and rescaled,
  // so non-integer values appear whenever beta != 1).
  double beta = 1.0;

  std::uint64_t seed = 0;

  void validate() const;

  /// The clustering-side family descriptor matching this recipe.
  [[nodiscard]] FamilyDescriptor descriptor() const;
};

Dataset generate(const SynthSpec& spec);

/// Three clusters of independent draws from one mixture component, plus the
/// exact mean sufficient statistic of that component (the natural expansion
/// point for the quadratic approximation). Hyperpriors follow the same
/// recipes as SynthSpec at their default settings; cluster sizes are
/// uniform on [size_min, size_max]. Member ids of the three summaries are
/// disjoint. Fully determined by (seed, trial).
struct TripletSample {
  FamilyDescriptor fam;
  std::array<ClusterSummary, 3> summaries;
  SuffStat component_mean_stat;
};

TripletSample reducibility_triplet(Family family, std::int64_t size_min,
                                   std::int64_t size_max, double beta,
                                   std::uint64_t seed, std::uint64_t trial);

namespace detail {

/// Wishart(df, scale) draw (Bartlett construction; expectation df * scale).
Eigen::MatrixXd wishart(RandomStream& rng, double df,
                        const Eigen::MatrixXd& scale);

}  // namespace detail

}  // namespace rbhc
