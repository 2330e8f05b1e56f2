// Apache License, Version 2.0, refer to LICENSE.txt

#include "rbhc/bhc.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <stdexcept>
#include <tuple>
#include <utility>

#include "rbhc/common.hpp"
#include "rbhc/expfam.hpp"

namespace rbhc {
namespace {

bool is_count(double x) {
  return x >= 0.0 && std::abs(x - std::round(x)) <= 1e-9;
}

double log_factorial(double x) { return std::lgamma(x + 1.0); }

}  // namespace

const char* prior_model_name(PriorModel model) {
  switch (model) {
    case PriorModel::gamma_poisson: return "gamma-poisson";
    case PriorModel::dirichlet_multinomial: return "dirichlet-multinomial";
    case PriorModel::gaussian_known_var: return "gaussian-known-var";
  }
  throw std::logic_error("unknown prior model");
}

void ConjugatePrior::validate() const {
  if (dim < 1) throw std::invalid_argument("prior dimension must be >= 1");
  switch (model) {
    case PriorModel::gamma_poisson:
      if (!(shape > 0.0) || !(rate > 0.0)) {
        throw std::invalid_argument("gamma prior needs shape > 0 and rate > 0");
      }
      break;
    case PriorModel::dirichlet_multinomial:
      if (concentration.size() != dim || dim < 2) {
        throw std::invalid_argument(
            "dirichlet prior needs a concentration entry per category (>= 2)");
      }
      if ((concentration.array() <= 0.0).any()) {
        throw std::invalid_argument("dirichlet concentrations must be > 0");
      }
      if (trials < 1) throw std::invalid_argument("trials must be >= 1");
      break;
    case PriorModel::gaussian_known_var:
      if (prior_mean.size() != dim) {
        throw std::invalid_argument("prior mean must match the dimension");
      }
      if (!(obs_variance > 0.0) || !(prior_variance > 0.0)) {
        throw std::invalid_argument("variances must be > 0");
      }
      break;
  }
}

ConjugatePrior ConjugatePrior::make_gamma_poisson(int dim, double shape,
                                                  double rate) {
  ConjugatePrior p;
  p.model = PriorModel::gamma_poisson;
  p.dim = dim;
  p.shape = shape;
  p.rate = rate;
  p.validate();
  return p;
}

ConjugatePrior ConjugatePrior::make_dirichlet_multinomial(
    Eigen::VectorXd concentration, std::int64_t trials) {
  ConjugatePrior p;
  p.model = PriorModel::dirichlet_multinomial;
  p.dim = static_cast<int>(concentration.size());
  p.concentration = std::move(concentration);
  p.trials = trials;
  p.validate();
  return p;
}

ConjugatePrior ConjugatePrior::make_gaussian_known_var(
    Eigen::VectorXd prior_mean, double prior_variance, double obs_variance) {
  ConjugatePrior p;
  p.model = PriorModel::gaussian_known_var;
  p.dim = static_cast<int>(prior_mean.size());
  p.prior_mean = std::move(prior_mean);
  p.prior_variance = prior_variance;
  p.obs_variance = obs_variance;
  p.validate();
  return p;
}

ObsStats stats_from_point(const ConjugatePrior& prior,
                          const Eigen::Ref<const Eigen::RowVectorXd>& x) {
  prior.validate();
  if (x.size() != prior.dim) {
    throw std::invalid_argument("observation dimension mismatch");
  }
  if (!x.allFinite()) throw std::invalid_argument("non-finite observation");

  ObsStats s;
  s.count = 1;
  s.sum = x.transpose();
  switch (prior.model) {
    case PriorModel::gamma_poisson: {
      double coef = 0.0;
      for (Eigen::Index j = 0; j < x.size(); ++j) {
        if (!is_count(x[j])) {
          throw std::invalid_argument("poisson observations must be counts");
        }
        coef -= log_factorial(x[j]);
      }
      s.log_coef = coef;
      break;
    }
    case PriorModel::dirichlet_multinomial: {
      double total = 0.0;
      double coef = log_factorial(static_cast<double>(prior.trials));
      for (Eigen::Index j = 0; j < x.size(); ++j) {
        if (!is_count(x[j])) {
          throw std::invalid_argument("multinomial observations must be counts");
        }
        total += x[j];
        coef -= log_factorial(x[j]);
      }
      if (std::abs(total - static_cast<double>(prior.trials)) > 1e-9) {
        throw std::invalid_argument(
            "multinomial observation must sum to the trial count");
      }
      s.log_coef = coef;
      break;
    }
    case PriorModel::gaussian_known_var:
      s.sum_sq = x.array().square().matrix().transpose();
      break;
  }
  return s;
}

ObsStats merge_stats(const ObsStats& a, const ObsStats& b) {
  if (a.sum.size() != b.sum.size() || a.sum_sq.size() != b.sum_sq.size()) {
    throw std::invalid_argument("cannot merge statistics of different shapes");
  }
  ObsStats s;
  s.count = a.count + b.count;
  s.sum = a.sum + b.sum;
  if (a.sum_sq.size() > 0) s.sum_sq = a.sum_sq + b.sum_sq;
  s.log_coef = a.log_coef + b.log_coef;
  return s;
}

double log_marginal(const ConjugatePrior& prior, const ObsStats& stats) {
  if (stats.count < 1) throw std::invalid_argument("empty cluster");
  const double n = static_cast<double>(stats.count);
  switch (prior.model) {
    case PriorModel::gamma_poisson: {
      // Independent per dimension: Gamma(shape, rate) prior on the mean of
      // Poisson counts with per-dimension sum S integrates to
      //   rate^shape / Gamma(shape) * Gamma(shape + S) / (rate + n)^(shape+S)
      // times the product of 1/x! base measures (in log_coef).
      double lp = stats.log_coef;
      for (Eigen::Index j = 0; j < stats.sum.size(); ++j) {
        const double s = stats.sum[j];
        lp += prior.shape * std::log(prior.rate) - std::lgamma(prior.shape) +
              std::lgamma(prior.shape + s) -
              (prior.shape + s) * std::log(prior.rate + n);
      }
      return lp;
    }
    case PriorModel::dirichlet_multinomial: {
      const double alpha0 = prior.concentration.sum();
      const double total = stats.sum.sum();
      double lp = stats.log_coef + std::lgamma(alpha0) -
                  std::lgamma(alpha0 + total);
      for (Eigen::Index j = 0; j < stats.sum.size(); ++j) {
        lp += std::lgamma(prior.concentration[j] + stats.sum[j]) -
              std::lgamma(prior.concentration[j]);
      }
      return lp;
    }
    case PriorModel::gaussian_known_var: {
      // Independent dimensions. With v the observation variance and rho2
      // the prior variance of the mean, completing the square gives
      //   A = n/v + 1/rho2,  B = S/v + m0/rho2,  C = Q/v + m0^2/rho2,
      //   log p = -(n/2) log(2 pi v) - (1/2) log(2 pi rho2)
      //           + (1/2) log(2 pi / A) - (C - B^2/A) / 2     per dimension.
      const double v = prior.obs_variance;
      const double rho2 = prior.prior_variance;
      const double a = n / v + 1.0 / rho2;
      double lp = 0.0;
      for (Eigen::Index j = 0; j < stats.sum.size(); ++j) {
        const double m0 = prior.prior_mean[j];
        const double b = stats.sum[j] / v + m0 / rho2;
        const double c = stats.sum_sq[j] / v + m0 * m0 / rho2;
        lp += -0.5 * n * std::log(2.0 * M_PI * v) -
              0.5 * std::log(2.0 * M_PI * rho2) +
              0.5 * std::log(2.0 * M_PI / a) - 0.5 * (c - b * b / a);
      }
      return lp;
    }
  }
  throw std::logic_error("unknown prior model");
}

namespace {

struct BhcNodeState {
  ObsStats stats;
  BhcNodeInfo info;
  bool alive = false;
};

/// Log odds against merging a and b into one node:
///   log(phi_t(a) phi_t(b)) - log(phi_h(a u b)).
double pair_log_odds(const ConjugatePrior& prior, double log_alpha,
                     const BhcNodeState& a, const BhcNodeState& b,
                     ObsStats* merged_out) {
  ObsStats merged = merge_stats(a.stats, b.stats);
  const double lphi_h = log_alpha +
                        std::lgamma(static_cast<double>(merged.count)) +
                        log_marginal(prior, merged);
  const double odds = a.info.log_phi_tree + b.info.log_phi_tree - lphi_h;
  if (merged_out != nullptr) *merged_out = std::move(merged);
  return odds;
}

void cut_node(const std::vector<BhcNodeInfo>& nodes, std::int64_t id,
              std::vector<std::int64_t>* cluster_roots) {
  const BhcNodeInfo& node = nodes[static_cast<std::size_t>(id)];
  if (node.left >= 0 && node.posterior < 0.5) {
    cut_node(nodes, node.left, cluster_roots);
    cut_node(nodes, node.right, cluster_roots);
  } else {
    cluster_roots->push_back(id);
  }
}

void fill_leaf_labels(const std::vector<BhcNodeInfo>& nodes, std::int64_t id,
                      int label, std::vector<int>* labels) {
  const BhcNodeInfo& node = nodes[static_cast<std::size_t>(id)];
  if (node.left < 0) {
    (*labels)[static_cast<std::size_t>(id)] = label;
  } else {
    fill_leaf_labels(nodes, node.left, label, labels);
    fill_leaf_labels(nodes, node.right, label, labels);
  }
}

}  // namespace

BhcResult bhc_cluster(const Eigen::MatrixXd& points,
                      const ConjugatePrior& prior, const BhcOptions& opts) {
  prior.validate();
  if (!(opts.alpha > 0.0)) {
    throw std::invalid_argument("concentration alpha must be > 0");
  }
  const std::int64_t n = points.rows();
  if (n < 1) throw std::invalid_argument("clustering needs at least one point");
  const double log_alpha = std::log(opts.alpha);

  std::vector<BhcNodeState> nodes(static_cast<std::size_t>(2 * n - 1));
  std::vector<std::int64_t> live;
  live.reserve(static_cast<std::size_t>(n));
  for (std::int64_t i = 0; i < n; ++i) {
    BhcNodeState& node = nodes[static_cast<std::size_t>(i)];
    node.stats = stats_from_point(prior, points.row(i));
    node.info.size = 1;
    node.info.log_gamma = log_alpha;
    node.info.log_phi_h = log_alpha + log_marginal(prior, node.stats);
    node.info.log_phi_tree = node.info.log_phi_h;
    node.alive = true;
    live.push_back(i);
  }

  BhcResult result;
  result.forest.leaf_count = n;
  result.forest.merges.reserve(static_cast<std::size_t>(n - 1));
  result.merge_posteriors.reserve(static_cast<std::size_t>(n - 1));

  // Min-heap over (log odds, min id, max id): the best merge is the one
  // with the lowest odds against it; ties go to the smallest id pair.
  using Entry = std::tuple<double, std::int64_t, std::int64_t>;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<Entry>> heap;
  for (std::size_t ii = 0; ii < live.size(); ++ii) {
    for (std::size_t jj = ii + 1; jj < live.size(); ++jj) {
      heap.emplace(pair_log_odds(prior, log_alpha,
                                 nodes[static_cast<std::size_t>(live[ii])],
                                 nodes[static_cast<std::size_t>(live[jj])],
                                 nullptr),
                   live[ii], live[jj]);
    }
  }

  std::int64_t next_id = n;
  std::int64_t live_count = n;
  while (live_count > 1) {
    if (heap.empty()) throw std::logic_error("merge queue exhausted early");
    const auto [odds, a, b] = heap.top();
    heap.pop();
    BhcNodeState& na = nodes[static_cast<std::size_t>(a)];
    BhcNodeState& nb = nodes[static_cast<std::size_t>(b)];
    if (!na.alive || !nb.alive) continue;

    const std::int64_t id = next_id++;
    BhcNodeState& merged = nodes[static_cast<std::size_t>(id)];
    merged.stats = merge_stats(na.stats, nb.stats);
    merged.info.left = a;
    merged.info.right = b;
    merged.info.size = na.info.size + nb.info.size;
    const double lg_pi_num =
        log_alpha + std::lgamma(static_cast<double>(merged.info.size));
    merged.info.log_gamma =
        log_sum_exp(lg_pi_num, na.info.log_gamma + nb.info.log_gamma);
    merged.info.log_phi_h = lg_pi_num + log_marginal(prior, merged.stats);
    merged.info.log_phi_tree = log_sum_exp(
        merged.info.log_phi_h, na.info.log_phi_tree + nb.info.log_phi_tree);
    merged.info.log_odds =
        na.info.log_phi_tree + nb.info.log_phi_tree - merged.info.log_phi_h;
    merged.info.posterior = stable_inv_logit(merged.info.log_odds);
    merged.alive = true;
    na.alive = false;
    nb.alive = false;
    --live_count;

    result.forest.merges.push_back(
        MergeRecord{a, b, merged.info.log_odds, merged.info.size});
    result.merge_posteriors.push_back(merged.info.posterior);

    for (std::int64_t other = 0; other < id; ++other) {
      if (!nodes[static_cast<std::size_t>(other)].alive) continue;
      heap.emplace(pair_log_odds(prior, log_alpha, merged,
                                 nodes[static_cast<std::size_t>(other)],
                                 nullptr),
                   other, id);
    }
  }

  const std::int64_t root = next_id - 1 >= n ? next_id - 1 : 0;
  result.forest.roots = {root};

  result.nodes.resize(nodes.size());
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    result.nodes[i] = nodes[i].info;
  }

  // Top-down cut: descend while the merged-hypothesis posterior is < 1/2.
  std::vector<std::int64_t> cluster_roots;
  cut_node(result.nodes, root, &cluster_roots);
  std::sort(cluster_roots.begin(), cluster_roots.end());
  result.cut.num_clusters = static_cast<int>(cluster_roots.size());
  result.cut.labels.assign(static_cast<std::size_t>(n), -1);
  for (std::size_t k = 0; k < cluster_roots.size(); ++k) {
    fill_leaf_labels(result.nodes, cluster_roots[k], static_cast<int>(k),
                     &result.cut.labels);
  }
  return result;
}

ProbeResult asymptotic_agreement_probe(const Eigen::MatrixXd& points,
                                       double sigma2, double lambda,
                                       double beta, double rho2) {
  if (!(sigma2 > 0.0) || !(beta > 0.0) || !(rho2 > 0.0)) {
    throw std::invalid_argument("sigma2, beta and rho2 must be > 0");
  }
  if (std::isnan(lambda)) throw std::invalid_argument("lambda must not be NaN");
  const std::int64_t n = points.rows();
  const int d = static_cast<int>(points.cols());
  if (n < 2) throw std::invalid_argument("probe needs at least two points");

  const FamilyDescriptor geom = FamilyDescriptor::make_gaussian_spherical(
      d, sigma2);
  const ConjugatePrior prior = ConjugatePrior::make_gaussian_known_var(
      Eigen::VectorXd::Zero(d), rho2, sigma2 / beta);
  // log alpha = -(d/2) log beta - beta * lambda
  const double log_alpha = -0.5 * d * std::log(beta) - beta * lambda;

  std::vector<ObsStats> stats;
  std::vector<double> lmarg(static_cast<std::size_t>(n));
  std::vector<ClusterSummary> summaries;
  stats.reserve(static_cast<std::size_t>(n));
  summaries.reserve(static_cast<std::size_t>(n));
  for (std::int64_t i = 0; i < n; ++i) {
    stats.push_back(stats_from_point(prior, points.row(i)));
    lmarg[static_cast<std::size_t>(i)] = log_marginal(prior, stats.back());
    summaries.push_back(summary_from_point(geom, points.row(i), i));
  }

  ProbeResult out;
  double best_geom = std::numeric_limits<double>::infinity();
  double best_odds = std::numeric_limits<double>::infinity();
  std::pair<std::int64_t, std::int64_t> argmin_geom{-1, -1};
  std::pair<std::int64_t, std::int64_t> argmin_odds{-1, -1};
  for (std::int64_t i = 0; i < n; ++i) {
    for (std::int64_t j = i + 1; j < n; ++j) {
      const double geom_d =
          dissimilarity(geom, summaries[static_cast<std::size_t>(i)],
                        summaries[static_cast<std::size_t>(j)]);
      const bool geometric_merge = geom_d < lambda;

      // For a singleton pair, phi_t(i) phi_t(j) = alpha^2 p(x_i) p(x_j) and
      // phi_h = alpha p({x_i, x_j}), so
      //   log odds = log alpha + log p(x_i) + log p(x_j) - log p({x_i, x_j}).
      const ObsStats pair = merge_stats(stats[static_cast<std::size_t>(i)],
                                        stats[static_cast<std::size_t>(j)]);
      const double log_odds = log_alpha + lmarg[static_cast<std::size_t>(i)] +
                              lmarg[static_cast<std::size_t>(j)] -
                              log_marginal(prior, pair);
      const bool bayes_merge = log_odds < 0.0;

      ++out.pairs;
      if (bayes_merge == geometric_merge) ++out.agreements;
      if (geom_d < best_geom) {
        best_geom = geom_d;
        argmin_geom = {i, j};
      }
      if (log_odds < best_odds) {
        best_odds = log_odds;
        argmin_odds = {i, j};
      }
    }
  }
  out.fraction = out.pairs == 0
                     ? 1.0
                     : static_cast<double>(out.agreements) /
                           static_cast<double>(out.pairs);
  out.argmin_match = argmin_geom == argmin_odds;
  return out;
}

}  // namespace rbhc
