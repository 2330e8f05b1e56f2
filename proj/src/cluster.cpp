// Apache License, Version 2.0, refer to LICENSE.txt

#include "rbhc/cluster.hpp"

#include <algorithm>
#include <cmath>

namespace rbhc {
namespace {

void check_summary(const FamilyDescriptor& fam, const ClusterSummary& s) {
  if (s.size <= 0 || s.members.empty()) {
    throw std::invalid_argument("cluster summary is empty");
  }
  if (s.mean_stat.size() != fam.stat_dim()) {
    throw std::invalid_argument("cluster summary has wrong statistic length");
  }
}

// Canonical argument order: the summary containing the smallest member id
// comes first. Makes every pairwise quantity bit-for-bit symmetric.
std::pair<const ClusterSummary*, const ClusterSummary*> ordered(
    const ClusterSummary& a, const ClusterSummary& b) {
  if (a.min_member() <= b.min_member()) return {&a, &b};
  return {&b, &a};
}

void merged_mean_into(const ClusterSummary& lo, const ClusterSummary& hi,
                      SuffStat& out) {
  const double w =
      static_cast<double>(hi.size) / static_cast<double>(lo.size + hi.size);
  out = lo.mean_stat + w * (hi.mean_stat - lo.mean_stat);
}

}  // namespace

ClusterSummary summary_from_point(const FamilyDescriptor& fam,
                                  const Eigen::VectorXd& x, std::int64_t id) {
  ClusterSummary s;
  s.size = 1;
  s.mean_stat = sufficient_stat(fam, x);
  s.members = {id};
  return s;
}

ClusterSummary summary_from_mean(std::int64_t size, SuffStat mean_stat,
                                 std::vector<std::int64_t> members) {
  if (size <= 0) throw std::invalid_argument("summary size must be positive");
  if (members.empty()) throw std::invalid_argument("summary needs members");
  std::sort(members.begin(), members.end());
  ClusterSummary s;
  s.size = size;
  s.mean_stat = std::move(mean_stat);
  s.members = std::move(members);
  return s;
}

ClusterSummary merge_summaries(const ClusterSummary& a,
                               const ClusterSummary& b) {
  if (a.size <= 0 || b.size <= 0 || a.members.empty() || b.members.empty()) {
    throw std::invalid_argument("cannot merge empty summaries");
  }
  if (a.mean_stat.size() != b.mean_stat.size()) {
    throw std::invalid_argument("summaries have mismatched statistics");
  }
  auto [lo, hi] = ordered(a, b);
  ClusterSummary out;
  out.size = lo->size + hi->size;
  merged_mean_into(*lo, *hi, out.mean_stat);
  out.members.resize(lo->members.size() + hi->members.size());
  std::merge(lo->members.begin(), lo->members.end(), hi->members.begin(),
             hi->members.end(), out.members.begin());
  for (std::size_t i = 1; i < out.members.size(); ++i) {
    if (out.members[i] == out.members[i - 1]) {
      throw std::invalid_argument("summaries share member ids");
    }
  }
  return out;
}

namespace detail {

double clamp_dissimilarity(double d, double magnitude) {
  if (d >= 0.0) return d;
  const double tol = 1e-12 * std::max(1.0, magnitude);
  if (d >= -tol) return 0.0;
  throw std::runtime_error(
      "dissimilarity is negative beyond round-off; generator not convex?");
}

double dissimilarity_cached(const FamilyDescriptor& fam,
                            const ClusterSummary& a, const ClusterSummary& b,
                            double f_a, double f_b, SuffStat& scratch) {
  auto [lo, hi] = ordered(a, b);
  const double f_lo = (lo == &a) ? f_a : f_b;
  const double f_hi = (lo == &a) ? f_b : f_a;
  merged_mean_into(*lo, *hi, scratch);
  const double f_merged =
      static_cast<double>(lo->size + hi->size) * generator(fam, scratch);
  const double d = f_lo + f_hi - f_merged;
  return clamp_dissimilarity(
      d, std::abs(f_lo) + std::abs(f_hi) + std::abs(f_merged));
}

}  // namespace detail

double dissimilarity(const FamilyDescriptor& fam, const ClusterSummary& a,
                     const ClusterSummary& b) {
  check_summary(fam, a);
  check_summary(fam, b);
  SuffStat scratch;
  const double f_a = static_cast<double>(a.size) * generator(fam, a.mean_stat);
  const double f_b = static_cast<double>(b.size) * generator(fam, b.mean_stat);
  return detail::dissimilarity_cached(fam, a, b, f_a, f_b, scratch);
}

double dissimilarity_bregman_form(const FamilyDescriptor& fam,
                                  const ClusterSummary& a,
                                  const ClusterSummary& b) {
  check_summary(fam, a);
  check_summary(fam, b);
  auto [lo, hi] = ordered(a, b);
  SuffStat merged;
  merged_mean_into(*lo, *hi, merged);
  const double phi_m = generator(fam, merged);
  const Eigen::VectorXd grad_m = generator_grad(fam, merged);
  auto bregman = [&](const ClusterSummary& s) {
    return generator(fam, s.mean_stat) - phi_m -
           grad_m.dot(s.mean_stat - merged);
  };
  const double d = static_cast<double>(lo->size) * bregman(*lo) +
                   static_cast<double>(hi->size) * bregman(*hi);
  const double scale = (std::abs(phi_m) + 1.0) *
                       static_cast<double>(lo->size + hi->size);
  return detail::clamp_dissimilarity(d, scale);
}

double approx_dissimilarity(const FamilyDescriptor& fam,
                            const ClusterSummary& a, const ClusterSummary& b,
                            const std::optional<SuffStat>& mu) {
  check_summary(fam, a);
  check_summary(fam, b);
  auto [lo, hi] = ordered(a, b);
  SuffStat point;
  if (mu.has_value()) {
    if (mu->size() != fam.stat_dim()) {
      throw std::invalid_argument("expansion point has wrong length");
    }
    point = *mu;
  } else {
    merged_mean_into(*lo, *hi, point);
  }
  const SuffStat z = lo->mean_stat - hi->mean_stat;
  const double n_lo = static_cast<double>(lo->size);
  const double n_hi = static_cast<double>(hi->size);
  const double weight = n_lo * n_hi / (2.0 * (n_lo + n_hi));

  double quad;
  if (fam.family == Family::gaussian_full) {
    // Assembles z^T H z from d x d pieces instead of the (d + d^2)^2
    // Hessian; algebraically identical to the generic path below.
    const int d = fam.dim;
    const SuffStat u = smoothed_point(fam, point);
    const Eigen::VectorXd ub = u.head(d);
    Eigen::MatrixXd uT =
        Eigen::Map<const Eigen::MatrixXd>(u.data() + d, d, d).transpose();
    uT = 0.5 * (uT + uT.transpose());
    Eigen::LLT<Eigen::MatrixXd> llt(uT - ub * ub.transpose());
    if (llt.info() != Eigen::Success) {
      throw singular_generator_error(
          "full-gaussian scatter block is not positive definite");
    }
    const Eigen::MatrixXd w = llt.solve(Eigen::MatrixXd::Identity(d, d));
    const Eigen::VectorXd v = w * ub;
    const Eigen::VectorXd zb = z.head(d);
    Eigen::MatrixXd zT =
        Eigen::Map<const Eigen::MatrixXd>(z.data() + d, d, d).transpose();
    zT = 0.5 * (zT + zT.transpose());
    const Eigen::MatrixXd wz = w * zT;
    const double chain =
        fam.smoothing.mode == SmoothingMode::convex_blend
            ? (1.0 - fam.smoothing.weight) * (1.0 - fam.smoothing.weight)
            : 1.0;
    quad = chain * ((1.0 + ub.dot(v)) * zb.dot(w * zb) +
                    std::pow(v.dot(zb), 2) - 2.0 * zb.dot(w * (zT * v)) +
                    0.5 * (wz * wz).trace());
  } else {
    const Eigen::MatrixXd h = generator_hessian(fam, point);
    quad = z.dot(h * z);
  }
  return detail::clamp_dissimilarity(weight * quad, std::abs(weight * quad));
}

double lance_williams_update(double d_ab, double d_ac, double d_bc,
                             std::int64_t n_a, std::int64_t n_b,
                             std::int64_t n_c) {
  if (n_a <= 0 || n_b <= 0 || n_c <= 0) {
    throw std::invalid_argument("cluster sizes must be positive");
  }
  const double na = static_cast<double>(n_a);
  const double nb = static_cast<double>(n_b);
  const double nc = static_cast<double>(n_c);
  return ((na + nc) * d_ac + (nb + nc) * d_bc - nc * d_ab) / (na + nb + nc);
}

}  // namespace rbhc
