// Apache License, Version 2.0, refer to LICENSE.txt

#include "rbhc/lambda_select.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "rbhc/common.hpp"
#include "rbhc/rng.hpp"

namespace rbhc {
namespace {

/// Squared Euclidean distance from every point to its nearest chosen
/// center, updated incrementally during seeding.
void update_min_dist(const Eigen::MatrixXd& points,
                     const Eigen::RowVectorXd& center,
                     Eigen::VectorXd& min_d2) {
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    const double d2 = (points.row(i) - center).squaredNorm();
    if (d2 < min_d2[i]) min_d2[i] = d2;
  }
}

Eigen::MatrixXd seed_centers(const Eigen::MatrixXd& points, int k,
                             RandomStream& rng) {
  const Eigen::Index n = points.rows();
  Eigen::MatrixXd centers(k, points.cols());
  const std::int64_t first = rng.uniform_int(0, n - 1);
  centers.row(0) = points.row(first);
  Eigen::VectorXd min_d2 =
      Eigen::VectorXd::Constant(n, std::numeric_limits<double>::infinity());
  update_min_dist(points, centers.row(0), min_d2);

  for (int c = 1; c < k; ++c) {
    const double total = min_d2.sum();
    Eigen::Index pick;
    if (total > 0.0) {
      // Weighted draw proportional to squared distance.
      const double r = rng.u01() * total;
      double acc = 0.0;
      pick = n - 1;
      for (Eigen::Index i = 0; i < n; ++i) {
        acc += min_d2[i];
        if (r < acc) {
          pick = i;
          break;
        }
      }
    } else {
      pick = rng.uniform_int(0, n - 1);  // all points already covered
    }
    centers.row(c) = points.row(pick);
    update_min_dist(points, centers.row(c), min_d2);
  }
  return centers;
}

}  // namespace

KMeansResult kmeans(const Eigen::MatrixXd& points, int k, std::uint64_t seed,
                    int max_iters, double tol) {
  const Eigen::Index n = points.rows();
  if (k < 1) throw std::invalid_argument("k must be >= 1");
  if (n < k) throw std::invalid_argument("k exceeds the number of points");
  if (max_iters < 1) throw std::invalid_argument("need at least 1 iteration");

  RandomStream rng(seed, 0);
  KMeansResult res;
  res.centers = seed_centers(points, k, rng);
  res.assignment.assign(static_cast<std::size_t>(n), -1);
  res.counts.assign(static_cast<std::size_t>(k), 0);

  std::vector<int> prev(static_cast<std::size_t>(n), -2);
  for (int iter = 0; iter < max_iters; ++iter) {
    res.iterations = iter + 1;

    // Assignment step; ties go to the lowest center index.
    for (Eigen::Index i = 0; i < n; ++i) {
      double best = std::numeric_limits<double>::infinity();
      int pick = 0;
      for (int c = 0; c < k; ++c) {
        const double d2 = (points.row(i) - res.centers.row(c)).squaredNorm();
        if (d2 < best) {
          best = d2;
          pick = c;
        }
      }
      res.assignment[static_cast<std::size_t>(i)] = pick;
    }
    std::fill(res.counts.begin(), res.counts.end(), 0);
    for (Eigen::Index i = 0; i < n; ++i) {
      ++res.counts[static_cast<std::size_t>(
          res.assignment[static_cast<std::size_t>(i)])];
    }

    // Reseed empty clusters to the point farthest from its own center.
    for (int c = 0; c < k; ++c) {
      if (res.counts[static_cast<std::size_t>(c)] > 0) continue;
      double worst = -1.0;
      Eigen::Index far = 0;
      for (Eigen::Index i = 0; i < n; ++i) {
        const int a = res.assignment[static_cast<std::size_t>(i)];
        if (res.counts[static_cast<std::size_t>(a)] <= 1) continue;
        const double d2 = (points.row(i) - res.centers.row(a)).squaredNorm();
        if (d2 > worst) {
          worst = d2;
          far = i;
        }
      }
      if (worst < 0.0) continue;  // nothing movable (n == k duplicates)
      const int old = res.assignment[static_cast<std::size_t>(far)];
      --res.counts[static_cast<std::size_t>(old)];
      res.centers.row(c) = points.row(far);
      res.assignment[static_cast<std::size_t>(far)] = c;
      ++res.counts[static_cast<std::size_t>(c)];
    }

    if (res.assignment == prev) break;  // fully converged
    prev = res.assignment;

    // Update step.
    Eigen::MatrixXd next = Eigen::MatrixXd::Zero(k, points.cols());
    for (Eigen::Index i = 0; i < n; ++i) {
      next.row(res.assignment[static_cast<std::size_t>(i)]) += points.row(i);
    }
    double movement = 0.0;
    for (int c = 0; c < k; ++c) {
      if (res.counts[static_cast<std::size_t>(c)] > 0) {
        next.row(c) /=
            static_cast<double>(res.counts[static_cast<std::size_t>(c)]);
      } else {
        next.row(c) = res.centers.row(c);
      }
      movement = std::max(movement,
                          (next.row(c) - res.centers.row(c)).norm());
    }
    res.centers = next;
    if (movement < tol) break;
  }
  return res;
}

namespace {

/// Embeds a k-means center (a point in observation space, generally
/// non-integral for count families) as a mean sufficient statistic.
SuffStat center_stat(const FamilyDescriptor& fam, const Eigen::RowVectorXd& c) {
  if (fam.family != Family::gaussian_full) return c.transpose();
  const int d = fam.dim;
  SuffStat t(fam.stat_dim());
  t.head(d) = c.transpose();
  for (int r = 0; r < d; ++r) {
    for (int s = 0; s < d; ++s) t[d + r * d + s] = c[r] * c[s];
  }
  return t;
}

}  // namespace

double select_lambda(const Eigen::MatrixXd& points,
                     const FamilyDescriptor& fam, const LambdaConfig& cfg) {
  fam.validate();
  if (cfg.k_tilde < 1 || cfg.multiplier < 1) {
    throw std::invalid_argument("k_tilde and multiplier must be >= 1");
  }
  const int k = cfg.multiplier * cfg.k_tilde;
  if (k < 2) {
    throw std::invalid_argument("threshold heuristic needs at least 2 centers");
  }
  if (points.rows() < k) {
    throw std::invalid_argument("fewer points than requested centers");
  }

  const KMeansResult km =
      kmeans(points, k, cfg.seed, cfg.kmeans_iters, cfg.kmeans_tol);

  std::vector<ClusterSummary> centers;
  centers.reserve(static_cast<std::size_t>(k));
  for (int c = 0; c < k; ++c) {
    const std::int64_t size =
        cfg.weight == CenterWeight::population
            ? std::max<std::int64_t>(1, km.counts[static_cast<std::size_t>(c)])
            : 1;
    centers.push_back(summary_from_mean(size, center_stat(fam, km.centers.row(c)),
                                        {static_cast<std::int64_t>(c)}));
  }

  KahanSum sum;
  for (int i = 0; i < k; ++i) {
    for (int j = i + 1; j < k; ++j) {
      sum.add(dissimilarity(fam, centers[static_cast<std::size_t>(i)],
                            centers[static_cast<std::size_t>(j)]));
    }
  }
  const double pairs = 0.5 * static_cast<double>(k) * static_cast<double>(k - 1);
  return sum.value() / pairs;
}

}  // namespace rbhc
