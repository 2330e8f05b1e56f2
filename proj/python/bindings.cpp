// Apache License, Version 2.0, refer to LICENSE.txt

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "rbhc/agglomerate.hpp"
#include "rbhc/bhc.hpp"
#include "rbhc/eval.hpp"
#include "rbhc/expfam.hpp"
#include "rbhc/lambda_select.hpp"
#include "rbhc/synth.hpp"

namespace py = pybind11;

namespace {

rbhc::Family parse_family(const std::string& name) {
  if (name == "gaussian-spherical") return rbhc::Family::gaussian_spherical;
  if (name == "gaussian-full" || name == "gaussian") {
    return rbhc::Family::gaussian_full;
  }
  if (name == "poisson") return rbhc::Family::poisson;
  if (name == "multinomial") return rbhc::Family::multinomial;
  throw std::invalid_argument(
      "unknown family '" + name +
      "' (expected gaussian-spherical, gaussian-full, poisson, or "
      "multinomial)");
}

rbhc::FamilyDescriptor make_descriptor(const std::string& name, int dim,
                                       double sigma2, int trials,
                                       double beta) {
  switch (parse_family(name)) {
    case rbhc::Family::gaussian_spherical:
      return rbhc::FamilyDescriptor::make_gaussian_spherical(dim, sigma2,
                                                             beta);
    case rbhc::Family::gaussian_full:
      return rbhc::FamilyDescriptor::make_gaussian_full(dim, beta);
    case rbhc::Family::multinomial:
      return rbhc::FamilyDescriptor::make_multinomial(dim, trials, beta);
    case rbhc::Family::poisson:
      if (dim != 1) {
        throw std::invalid_argument(
            "poisson expects one-dimensional count data (got " +
            std::to_string(dim) + " columns)");
      }
      return rbhc::FamilyDescriptor::make_poisson(beta);
  }
  throw std::logic_error("unreachable family");
}

Eigen::MatrixXd merges_matrix(const rbhc::Forest& forest) {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(forest.merges.size()), 4);
  for (std::size_t i = 0; i < forest.merges.size(); ++i) {
    const rbhc::MergeRecord& rec = forest.merges[i];
    const auto row = static_cast<Eigen::Index>(i);
    m(row, 0) = static_cast<double>(rec.left);
    m(row, 1) = static_cast<double>(rec.right);
    m(row, 2) = rec.height;
    m(row, 3) = static_cast<double>(rec.new_size);
  }
  return m;
}

py::dict forest_dict(const rbhc::Forest& forest, const rbhc::Partition& part) {
  py::dict out;
  out["merges"] = merges_matrix(forest);
  out["roots"] = forest.roots;
  out["labels"] = part.labels;
  out["num_clusters"] = part.num_clusters;
  return out;
}

py::dict py_cluster(const Eigen::MatrixXd& points, const std::string& family,
                    double lambda, const std::string& algo, double sigma2,
                    int trials, double beta, std::optional<int> num_clusters) {
  const rbhc::FamilyDescriptor fam = make_descriptor(
      family, static_cast<int>(points.cols()), sigma2, trials, beta);
  rbhc::Forest forest;
  if (algo == "greedy") {
    forest = rbhc::greedy_cluster(points, fam, lambda);
  } else if (algo == "nnchain") {
    forest = rbhc::nnchain_cluster(points, fam, lambda);
  } else {
    throw std::invalid_argument("algo must be 'greedy' or 'nnchain'");
  }
  const rbhc::Partition part = num_clusters.has_value()
                                   ? rbhc::cut_tree(forest, *num_clusters)
                                   : rbhc::extract_partition(forest);
  return forest_dict(forest, part);
}

double py_select_lambda(const Eigen::MatrixXd& points,
                        const std::string& family, int k_tilde, int multiplier,
                        const std::string& weight, std::uint64_t seed,
                        double sigma2, int trials, double beta) {
  const rbhc::FamilyDescriptor fam = make_descriptor(
      family, static_cast<int>(points.cols()), sigma2, trials, beta);
  rbhc::LambdaConfig cfg;
  cfg.k_tilde = k_tilde;
  cfg.multiplier = multiplier;
  cfg.seed = seed;
  if (weight == "population") {
    cfg.weight = rbhc::CenterWeight::population;
  } else if (weight == "singleton") {
    cfg.weight = rbhc::CenterWeight::singleton;
  } else {
    throw std::invalid_argument("weight must be 'population' or 'singleton'");
  }
  return rbhc::select_lambda(points, fam, cfg);
}

py::dict py_bhc(const Eigen::MatrixXd& points, const std::string& model,
                double alpha, double shape, double rate, double concentration,
                std::int64_t trials, double obs_variance,
                double prior_variance,
                std::optional<Eigen::VectorXd> prior_mean) {
  const int dim = static_cast<int>(points.cols());
  rbhc::ConjugatePrior prior;
  if (model == "gamma-poisson") {
    prior = rbhc::ConjugatePrior::make_gamma_poisson(dim, shape, rate);
  } else if (model == "dirichlet-multinomial") {
    prior = rbhc::ConjugatePrior::make_dirichlet_multinomial(
        Eigen::VectorXd::Constant(dim, concentration), trials);
  } else if (model == "gaussian-known-var") {
    Eigen::VectorXd mean;
    if (prior_mean.has_value()) {
      mean = *prior_mean;
      if (mean.size() == 1 && dim > 1) {
        mean = Eigen::VectorXd::Constant(dim, mean[0]);
      }
      if (mean.size() != dim) {
        throw std::invalid_argument("prior_mean length does not match data");
      }
    } else {
      mean = points.colwise().mean().transpose();
    }
    prior = rbhc::ConjugatePrior::make_gaussian_known_var(mean, prior_variance,
                                                          obs_variance);
  } else {
    throw std::invalid_argument(
        "model must be 'gamma-poisson', 'dirichlet-multinomial', or "
        "'gaussian-known-var'");
  }

  rbhc::BhcOptions opts;
  opts.alpha = alpha;
  const rbhc::BhcResult res = rbhc::bhc_cluster(points, prior, opts);
  py::dict out = forest_dict(res.forest, res.cut);
  out["merge_posteriors"] = res.merge_posteriors;
  return out;
}

py::dict py_reducibility(const std::string& family, std::int64_t trials,
                         double beta, std::uint64_t seed) {
  const rbhc::ReducibilitySummary s =
      rbhc::run_reducibility(parse_family(family), trials, beta, seed);
  py::dict out;
  out["family"] = std::string(rbhc::family_name(s.family));
  out["trials"] = s.trials;
  out["violations"] = s.violations;
  out["domain_errors"] = s.domain_errors;
  out["mean_d_exact"] = s.mean_d_exact;
  out["mean_d_approx"] = s.mean_d_approx;
  out["mean_rel_error"] = s.mean_rel_error;
  return out;
}

py::tuple py_generate(const std::string& family, std::int64_t n, int k,
                      int dim, int trials, double beta, std::uint64_t seed,
                      double gamma_shape, double gamma_rate,
                      double dirichlet_conc, double mean_precision,
                      double wishart_df) {
  rbhc::SynthSpec spec;
  spec.family = parse_family(family);
  spec.n = n;
  spec.k = k;
  spec.dim = dim;
  spec.trials = trials;
  spec.beta = beta;
  spec.seed = seed;
  spec.gamma_shape = gamma_shape;
  spec.gamma_rate = gamma_rate;
  spec.dirichlet_conc = dirichlet_conc;
  spec.mean_precision = mean_precision;
  spec.wishart_df = wishart_df;
  const rbhc::Dataset ds = rbhc::generate(spec);
  return py::make_tuple(ds.points, ds.labels);
}

double py_ari(const std::vector<int>& a, const std::vector<int>& b) {
  return rbhc::adjusted_rand_index(a, b);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() =
      "Hierarchical clustering on exponential-family (Bregman) "
      "dissimilarities: threshold agglomeration, Bayesian merge "
      "posteriors, and the synthetic-data / evaluation harness.";

  m.def("cluster", &py_cluster, py::arg("points"), py::arg("family"),
        py::kw_only(),
        py::arg("lam") = std::numeric_limits<double>::infinity(),
        py::arg("algo") = "nnchain", py::arg("sigma2") = 1.0,
        py::arg("trials") = 1, py::arg("beta") = 1.0,
        py::arg("num_clusters") = py::none(),
        "Agglomerate points under the family's dissimilarity until the "
        "merge threshold `lam` is reached. Returns a dict with the merge "
        "table (left, right, height, new_size), the forest roots, and the "
        "flat labels (threshold partition, or a k-cluster cut when "
        "`num_clusters` is given).");

  m.def("select_lambda", &py_select_lambda, py::arg("points"),
        py::arg("family"), py::arg("k_tilde"), py::kw_only(),
        py::arg("multiplier") = 4, py::arg("weight") = "population",
        py::arg("seed") = 0, py::arg("sigma2") = 1.0, py::arg("trials") = 1,
        py::arg("beta") = 1.0,
        "Merge-threshold heuristic: over-segment with k-means at "
        "multiplier * k_tilde centers and average the pairwise center "
        "dissimilarities.");

  m.def("bhc", &py_bhc, py::arg("points"), py::arg("model"), py::kw_only(),
        py::arg("alpha") = 1.0, py::arg("shape") = 2.0, py::arg("rate") = 0.05,
        py::arg("concentration") = 1.0, py::arg("trials") = 1,
        py::arg("obs_variance") = 1.0, py::arg("prior_variance") = 1.0,
        py::arg("prior_mean") = py::none(),
        "Bayesian agglomeration under a conjugate observation model. "
        "Returns the merge table with per-merge posteriors and the "
        "partition from cutting where the merge posterior drops below "
        "1/2. For 'gaussian-known-var', `prior_mean` defaults to the "
        "empirical column mean.");

  m.def("adjusted_rand_index", &py_ari, py::arg("a"), py::arg("b"),
        "Hubert-Arabie adjusted Rand index between two labelings.");

  m.def("reducibility", &py_reducibility, py::arg("family"), py::kw_only(),
        py::arg("trials") = 1000, py::arg("beta") = 1.0, py::arg("seed") = 1,
        "Monte-Carlo reducibility check: violation counts and "
        "quadratic-approximation error for the family's dissimilarity.");

  m.def("generate", &py_generate, py::arg("family"), py::kw_only(),
        py::arg("n") = 1000, py::arg("k") = 6, py::arg("dim") = 3,
        py::arg("trials") = 10, py::arg("beta") = 1.0, py::arg("seed") = 0,
        py::arg("gamma_shape") = 2.0, py::arg("gamma_rate") = 0.05,
        py::arg("dirichlet_conc") = 0.5, py::arg("mean_precision") = 0.08,
        py::arg("wishart_df") = 6.0,
        "Sample a labeled mixture dataset; returns (points, labels).");
}
