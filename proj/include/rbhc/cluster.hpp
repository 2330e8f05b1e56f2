// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "rbhc/expfam.hpp"

namespace rbhc {

/// Sufficient summary of a cluster: its size, the mean of its members'
/// sufficient statistics, and the sorted member ids. Merging two summaries
/// is exact because size * mean_stat is additive.
struct ClusterSummary {
  std::int64_t size = 0;
  SuffStat mean_stat;
  std::vector<std::int64_t> members;

  [[nodiscard]] std::int64_t min_member() const { return members.front(); }
};

/// Singleton summary for observation x with the given id.
ClusterSummary summary_from_point(const FamilyDescriptor& fam,
                                  const Eigen::VectorXd& x, std::int64_t id);

/// Summary from a precomputed mean statistic (used by the synthetic
/// harness, which aggregates draws without materializing the points).
ClusterSummary summary_from_mean(std::int64_t size, SuffStat mean_stat,
                                 std::vector<std::int64_t> members);

/// Exact size-weighted merge. Throws std::invalid_argument if the member
/// sets overlap or either summary is empty.
ClusterSummary merge_summaries(const ClusterSummary& a,
                               const ClusterSummary& b);

/// Jensen-gap dissimilarity
///   d(a, b) = |a| phi(ta) + |b| phi(tb) - (|a|+|b|) phi(merged mean).
/// Non-negative for a convex generator; tiny negative round-off is clamped
/// to zero. Symmetric bit-for-bit (arguments are ordered canonically).
double dissimilarity(const FamilyDescriptor& fam, const ClusterSummary& a,
                     const ClusterSummary& b);

/// Same quantity assembled as a weighted sum of Bregman divergences to the
/// merged mean: |a| B(ta, tm) + |b| B(tb, tm). Agrees with dissimilarity()
/// up to round-off; kept separate as an algebraic cross-check.
double dissimilarity_bregman_form(const FamilyDescriptor& fam,
                                  const ClusterSummary& a,
                                  const ClusterSummary& b);

/// Second-order (Ward-like) approximation
///   (|a||b| / 2(|a|+|b|)) (ta - tb)^T hess(mu) (ta - tb),
/// expanded at mu (merged mean when omitted). Exact for the spherical
/// Gaussian family.
double approx_dissimilarity(const FamilyDescriptor& fam,
                            const ClusterSummary& a, const ClusterSummary& b,
                            const std::optional<SuffStat>& mu = std::nullopt);

/// Ward-style Lance-Williams update for the quadratic approximation at a
/// fixed expansion point: the approximate dissimilarity between (a u b) and
/// c from the three pairwise values.
double lance_williams_update(double d_ab, double d_ac, double d_bc,
                             std::int64_t n_a, std::int64_t n_b,
                             std::int64_t n_c);

namespace detail {

/// Engine fast path. Computes the merged mean into `scratch` and returns
/// the clamped dissimilarity using cached size-weighted potentials
/// F = size * phi(mean_stat). One generator evaluation per call.
double dissimilarity_cached(const FamilyDescriptor& fam,
                            const ClusterSummary& a, const ClusterSummary& b,
                            double f_a, double f_b, SuffStat& scratch);

/// Shared clamp: tiny negative round-off (relative to the magnitude of the
/// potential terms) snaps to zero; anything materially negative throws.
double clamp_dissimilarity(double d, double magnitude);

}  // namespace detail

}  // namespace rbhc
