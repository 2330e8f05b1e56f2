// Apache License, Version 2.0, refer to LICENSE.txt

#include "rbhc/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <unordered_map>

#include "rbhc/common.hpp"

namespace rbhc {

namespace {

double comb2(double x) { return 0.5 * x * (x - 1.0); }

std::vector<int> compact_labels(const std::vector<int>& labels, int* k_out) {
  std::unordered_map<int, int> remap;
  std::vector<int> out(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    auto [it, inserted] =
        remap.emplace(labels[i], static_cast<int>(remap.size()));
    out[i] = it->second;
  }
  *k_out = static_cast<int>(remap.size());
  return out;
}

}  // namespace

double adjusted_rand_index(const std::vector<int>& a,
                           const std::vector<int>& b) {
  if (a.size() != b.size()) {
    throw std::invalid_argument("labelings cover different item sets");
  }
  if (a.empty()) throw std::invalid_argument("empty labelings");
  int ka = 0;
  int kb = 0;
  const std::vector<int> la = compact_labels(a, &ka);
  const std::vector<int> lb = compact_labels(b, &kb);

  std::vector<std::int64_t> table(static_cast<std::size_t>(ka) *
                                  static_cast<std::size_t>(kb));
  std::vector<std::int64_t> row(static_cast<std::size_t>(ka), 0);
  std::vector<std::int64_t> col(static_cast<std::size_t>(kb), 0);
  for (std::size_t i = 0; i < la.size(); ++i) {
    ++table[static_cast<std::size_t>(la[i]) * static_cast<std::size_t>(kb) +
            static_cast<std::size_t>(lb[i])];
    ++row[static_cast<std::size_t>(la[i])];
    ++col[static_cast<std::size_t>(lb[i])];
  }

  double index = 0.0;
  for (const std::int64_t nij : table) index += comb2(static_cast<double>(nij));
  double sum_a = 0.0;
  for (const std::int64_t ni : row) sum_a += comb2(static_cast<double>(ni));
  double sum_b = 0.0;
  for (const std::int64_t nj : col) sum_b += comb2(static_cast<double>(nj));
  const double total = comb2(static_cast<double>(la.size()));

  const double expected = sum_a * sum_b / total;
  const double max_index = 0.5 * (sum_a + sum_b);
  const double denom = max_index - expected;
  if (denom == 0.0) return 1.0;
  return (index - expected) / denom;
}

double adjusted_rand_index(const Partition& a, const Partition& b) {
  return adjusted_rand_index(a.labels, b.labels);
}

TrialReport reducibility_trial(Family family, std::int64_t size_min,
                               std::int64_t size_max, double beta,
                               std::uint64_t seed, std::uint64_t trial) {
  TrialReport rep;
  try {
    const TripletSample sample =
        reducibility_triplet(family, size_min, size_max, beta, seed, trial);
    const auto& s = sample.summaries;
    rep.d_star_01 = dissimilarity(sample.fam, s[0], s[1]);
    rep.d_star_02 = dissimilarity(sample.fam, s[0], s[2]);
    rep.d_star_12 = dissimilarity(sample.fam, s[1], s[2]);

    // Minimal pair (i, j); remaining cluster r. Ties resolve in the fixed
    // order (0,1), (0,2), (1,2).
    int i = 0;
    int j = 1;
    int r = 2;
    double d_min = rep.d_star_01;
    if (rep.d_star_02 < d_min) {
      d_min = rep.d_star_02;
      i = 0;
      j = 2;
      r = 1;
    }
    if (rep.d_star_12 < d_min) {
      d_min = rep.d_star_12;
      i = 1;
      j = 2;
      r = 0;
    }
    const double cross_i = dissimilarity(
        sample.fam, s[static_cast<std::size_t>(i)], s[static_cast<std::size_t>(r)]);
    const double cross_j = dissimilarity(
        sample.fam, s[static_cast<std::size_t>(j)], s[static_cast<std::size_t>(r)]);
    const ClusterSummary merged = merge_summaries(
        s[static_cast<std::size_t>(i)], s[static_cast<std::size_t>(j)]);
    rep.merged_check = dissimilarity(sample.fam, merged,
                                     s[static_cast<std::size_t>(r)]);
    rep.reducible = rep.merged_check >= std::min(cross_i, cross_j);

    rep.d_exact = d_min;
    rep.d_approx = approx_dissimilarity(sample.fam,
                                        s[static_cast<std::size_t>(i)],
                                        s[static_cast<std::size_t>(j)],
                                        sample.component_mean_stat);
    const double denom = rep.d_exact + rep.d_approx;
    rep.rel_error = denom > 0.0
                        ? 2.0 * std::abs(rep.d_exact - rep.d_approx) / denom
                        : 0.0;
  } catch (const singular_generator_error&) {
    rep.domain_error = true;
  }
  return rep;
}

namespace {

struct BlockTotals {
  std::int64_t violations = 0;
  std::int64_t domain_errors = 0;
  std::int64_t valid = 0;
  KahanSum d_exact;
  KahanSum d_approx;
  KahanSum rel_error;
};

/// Runs trials [begin, end) against stream ids offset + t and accumulates
/// per-block totals; blocks reduce in index order afterwards, so the final
/// sums are independent of the thread count.
ReducibilitySummary aggregate_trials(Family family, std::int64_t trials,
                                     std::int64_t size_min,
                                     std::int64_t size_max, double beta,
                                     std::uint64_t seed,
                                     std::uint64_t stream_offset) {
  constexpr std::int64_t kBlock = 64;
  const std::int64_t blocks = trials > 0 ? (trials + kBlock - 1) / kBlock : 0;
  std::vector<BlockTotals> totals(static_cast<std::size_t>(blocks));

  parallel_blocks(trials, kBlock,
                  [&](std::int64_t block, std::int64_t begin, std::int64_t end) {
                    BlockTotals& tot = totals[static_cast<std::size_t>(block)];
                    for (std::int64_t t = begin; t < end; ++t) {
                      const TrialReport rep = reducibility_trial(
                          family, size_min, size_max, beta, seed,
                          stream_offset + static_cast<std::uint64_t>(t));
                      if (rep.domain_error) {
                        ++tot.domain_errors;
                        continue;
                      }
                      ++tot.valid;
                      if (!rep.reducible) ++tot.violations;
                      tot.d_exact.add(rep.d_exact);
                      tot.d_approx.add(rep.d_approx);
                      tot.rel_error.add(rep.rel_error);
                    }
                  });

  ReducibilitySummary out;
  out.family = family;
  out.trials = trials;
  KahanSum d_exact;
  KahanSum d_approx;
  KahanSum rel_error;
  std::int64_t valid = 0;
  for (const BlockTotals& tot : totals) {
    out.violations += tot.violations;
    out.domain_errors += tot.domain_errors;
    valid += tot.valid;
    d_exact.add(tot.d_exact.value());
    d_approx.add(tot.d_approx.value());
    rel_error.add(tot.rel_error.value());
  }
  if (valid > 0) {
    out.mean_d_exact = d_exact.value() / static_cast<double>(valid);
    out.mean_d_approx = d_approx.value() / static_cast<double>(valid);
    out.mean_rel_error = rel_error.value() / static_cast<double>(valid);
  }
  return out;
}

}  // namespace

ReducibilitySummary run_reducibility(Family family, std::int64_t trials,
                                     double beta, std::uint64_t seed) {
  if (trials < 0) throw std::invalid_argument("negative trial count");
  return aggregate_trials(family, trials, 20, 100, beta, seed, 0);
}

std::vector<SweepCell> error_decay_sweep(Family family,
                                         const std::vector<double>& beta_grid,
                                         const std::vector<std::int64_t>& max_size_grid,
                                         std::int64_t trials_per_cell,
                                         std::uint64_t seed) {
  if (trials_per_cell < 0) throw std::invalid_argument("negative trial count");
  std::vector<SweepCell> cells;
  for (std::size_t si = 0; si < max_size_grid.size(); ++si) {
    const std::int64_t n_max = max_size_grid[si];
    if (n_max < 1) throw std::invalid_argument("max cluster size must be >= 1");
    const std::int64_t n_min = std::min<std::int64_t>(20, n_max);
    // Stream ids depend on the size cell and trial only — never on beta —
    // so Gaussian cells share their draws across the beta grid.
    const std::uint64_t offset =
        static_cast<std::uint64_t>(si) * static_cast<std::uint64_t>(trials_per_cell);
    for (const double beta : beta_grid) {
      if (!(beta > 0.0)) throw std::invalid_argument("beta must be > 0");
      const ReducibilitySummary sum = aggregate_trials(
          family, trials_per_cell, n_min, n_max, beta, seed, offset);
      SweepCell cell;
      cell.beta = beta;
      cell.max_size = n_max;
      cell.trials = trials_per_cell;
      cell.domain_errors = sum.domain_errors;
      cell.mean_rel_error = sum.mean_rel_error;
      cells.push_back(cell);
    }
  }
  return cells;
}

const char* linkage_name(LinkageRule rule) {
  switch (rule) {
    case LinkageRule::single: return "single";
    case LinkageRule::complete: return "complete";
    case LinkageRule::ward: return "ward";
  }
  throw std::logic_error("unknown linkage rule");
}

namespace {

double linkage_update(LinkageRule rule, double d_ab, double d_ac, double d_bc,
                      double n_a, double n_b, double n_c) {
  switch (rule) {
    case LinkageRule::single: return std::min(d_ac, d_bc);
    case LinkageRule::complete: return std::max(d_ac, d_bc);
    case LinkageRule::ward:
      return ((n_a + n_c) * d_ac + (n_b + n_c) * d_bc - n_c * d_ab) /
             (n_a + n_b + n_c);
  }
  throw std::logic_error("unknown linkage rule");
}

}  // namespace

Forest baseline_tree(const Eigen::MatrixXd& points, LinkageRule rule) {
  const std::int64_t n = points.rows();
  if (n < 1) throw std::invalid_argument("clustering needs at least one point");

  // Distance matrix over point slots; a merged cluster reuses the smaller
  // slot and the other slot dies. Ward stores squared Euclidean distances,
  // single/complete store plain Euclidean ones.
  Eigen::MatrixXd dist(n, n);
  for (std::int64_t i = 0; i < n; ++i) {
    dist(i, i) = 0.0;
    for (std::int64_t j = i + 1; j < n; ++j) {
      const double sq = (points.row(i) - points.row(j)).squaredNorm();
      const double d = rule == LinkageRule::ward ? sq : std::sqrt(sq);
      dist(i, j) = d;
      dist(j, i) = d;
    }
  }

  std::vector<bool> alive(static_cast<std::size_t>(n), true);
  std::vector<double> size(static_cast<std::size_t>(n), 1.0);
  std::vector<std::int64_t> node_of(static_cast<std::size_t>(n));
  for (std::int64_t i = 0; i < n; ++i) node_of[static_cast<std::size_t>(i)] = i;

  Forest forest;
  forest.leaf_count = n;
  std::int64_t next_id = n;

  std::vector<std::int64_t> chain;
  std::int64_t remaining = n;
  while (remaining > 1) {
    if (chain.empty()) {
      for (std::int64_t i = 0; i < n; ++i) {
        if (alive[static_cast<std::size_t>(i)]) {
          chain.push_back(i);
          break;
        }
      }
    }
    const std::int64_t a = chain.back();
    double best_d = std::numeric_limits<double>::infinity();
    std::int64_t best = -1;
    for (std::int64_t i = 0; i < n; ++i) {
      if (i == a || !alive[static_cast<std::size_t>(i)]) continue;
      const double d = dist(a, i);
      if (d < best_d || (d == best_d && i < best)) {
        best_d = d;
        best = i;
      }
    }
    if (chain.size() >= 2 && best == chain[chain.size() - 2]) {
      const std::int64_t b = best;
      chain.pop_back();
      chain.pop_back();
      const std::int64_t keep = std::min(a, b);
      const std::int64_t drop = std::max(a, b);
      const std::int64_t left =
          std::min(node_of[static_cast<std::size_t>(a)],
                   node_of[static_cast<std::size_t>(b)]);
      const std::int64_t right =
          std::max(node_of[static_cast<std::size_t>(a)],
                   node_of[static_cast<std::size_t>(b)]);
      const double n_a = size[static_cast<std::size_t>(keep)];
      const double n_b = size[static_cast<std::size_t>(drop)];
      for (std::int64_t i = 0; i < n; ++i) {
        if (!alive[static_cast<std::size_t>(i)] || i == keep || i == drop) {
          continue;
        }
        const double updated = linkage_update(
            rule, best_d, dist(keep, i), dist(drop, i), n_a, n_b,
            size[static_cast<std::size_t>(i)]);
        dist(keep, i) = updated;
        dist(i, keep) = updated;
      }
      alive[static_cast<std::size_t>(drop)] = false;
      size[static_cast<std::size_t>(keep)] = n_a + n_b;
      node_of[static_cast<std::size_t>(keep)] = next_id;
      forest.merges.push_back(MergeRecord{left, right, best_d,
                                          static_cast<std::int64_t>(n_a + n_b)});
      ++next_id;
      --remaining;
      continue;
    }
    chain.push_back(best);
  }
  forest.roots = {next_id > n ? next_id - 1 : 0};
  return forest;
}

Partition cut_tree(const Forest& forest, int k) {
  const std::int64_t n = forest.leaf_count;
  const std::int64_t m = static_cast<std::int64_t>(forest.merges.size());
  if (k < 1 || static_cast<std::int64_t>(k) > n) {
    throw std::invalid_argument("cluster count out of range");
  }
  const std::int64_t cuts = static_cast<std::int64_t>(k) - 1;
  if (cuts > m) {
    throw std::invalid_argument("tree has too few merges for this cut");
  }

  // Remove the `cuts` highest merges; among equal heights the later merge
  // goes first, which keeps the removed set closed under the parent
  // relation whenever heights are monotone along root paths.
  std::vector<std::int64_t> order(static_cast<std::size_t>(m));
  for (std::int64_t i = 0; i < m; ++i) order[static_cast<std::size_t>(i)] = i;
  std::sort(order.begin(), order.end(), [&](std::int64_t x, std::int64_t y) {
    const double hx = forest.merges[static_cast<std::size_t>(x)].height;
    const double hy = forest.merges[static_cast<std::size_t>(y)].height;
    if (hx != hy) return hx > hy;
    return x > y;
  });
  std::vector<bool> cut(static_cast<std::size_t>(m), false);
  for (std::int64_t i = 0; i < cuts; ++i) {
    cut[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])] = true;
  }

  const std::int64_t total = n + m;
  std::vector<std::int64_t> parent(static_cast<std::size_t>(total), -1);
  for (std::int64_t i = 0; i < m; ++i) {
    if (cut[static_cast<std::size_t>(i)]) continue;
    const MergeRecord& rec = forest.merges[static_cast<std::size_t>(i)];
    parent[static_cast<std::size_t>(rec.left)] = n + i;
    parent[static_cast<std::size_t>(rec.right)] = n + i;
  }

  std::vector<std::int64_t> root_of(static_cast<std::size_t>(total));
  for (std::int64_t id = total - 1; id >= 0; --id) {
    const std::int64_t p = parent[static_cast<std::size_t>(id)];
    root_of[static_cast<std::size_t>(id)] =
        p == -1 ? id : root_of[static_cast<std::size_t>(p)];
  }

  // Label clusters by ascending root id over the leaves' roots.
  std::vector<std::int64_t> roots;
  for (std::int64_t i = 0; i < n; ++i) {
    roots.push_back(root_of[static_cast<std::size_t>(i)]);
  }
  std::sort(roots.begin(), roots.end());
  roots.erase(std::unique(roots.begin(), roots.end()), roots.end());

  Partition part;
  part.num_clusters = static_cast<int>(roots.size());
  part.labels.resize(static_cast<std::size_t>(n));
  for (std::int64_t i = 0; i < n; ++i) {
    const std::int64_t r = root_of[static_cast<std::size_t>(i)];
    const auto it = std::lower_bound(roots.begin(), roots.end(), r);
    part.labels[static_cast<std::size_t>(i)] =
        static_cast<int>(it - roots.begin());
  }
  return part;
}

Partition baseline_cluster(const Eigen::MatrixXd& points, LinkageRule rule,
                           int k) {
  return cut_tree(baseline_tree(points, rule), k);
}

}  // namespace rbhc
