// Apache License, Version 2.0, refer to LICENSE.txt

#include <cerrno>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "rbhc/agglomerate.hpp"
#include "rbhc/bhc.hpp"
#include "rbhc/eval.hpp"
#include "rbhc/expfam.hpp"
#include "rbhc/io.hpp"
#include "rbhc/lambda_select.hpp"
#include "rbhc/synth.hpp"

namespace {

constexpr int kUsageError = 2;

/// Configuration mistakes that CLI11 cannot catch on its own (bad family
/// names, malformed --lambda strings, ...). Reported as usage errors.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

rbhc::Family parse_family(const std::string& name) {
  if (name == "gaussian-spherical") return rbhc::Family::gaussian_spherical;
  if (name == "gaussian-full" || name == "gaussian")
    return rbhc::Family::gaussian_full;
  if (name == "poisson") return rbhc::Family::poisson;
  if (name == "multinomial") return rbhc::Family::multinomial;
  throw UsageError("unknown family '" + name +
                   "' (expected gaussian-spherical, gaussian-full, poisson, "
                   "or multinomial)");
}

/// Builds the descriptor for `dim`-column data, applying each family's
/// default smoothing rule.
rbhc::FamilyDescriptor make_descriptor(rbhc::Family family, int dim,
                                       double sigma2, int trials,
                                       double beta) {
  switch (family) {
    case rbhc::Family::gaussian_spherical:
      return rbhc::FamilyDescriptor::make_gaussian_spherical(dim, sigma2,
                                                             beta);
    case rbhc::Family::gaussian_full:
      return rbhc::FamilyDescriptor::make_gaussian_full(dim, beta);
    case rbhc::Family::poisson:
      if (dim != 1) {
        throw UsageError("poisson expects one-dimensional count data (got " +
                         std::to_string(dim) + " columns)");
      }
      return rbhc::FamilyDescriptor::make_poisson(beta);
    case rbhc::Family::multinomial:
      return rbhc::FamilyDescriptor::make_multinomial(dim, trials, beta);
  }
  throw UsageError("unknown family code");
}

struct LambdaSpec {
  bool automatic = false;
  int k_tilde = 0;
  double value = std::numeric_limits<double>::infinity();
};

/// --lambda accepts a nonnegative float, "inf"/"infinity", or "auto:<k>".
LambdaSpec parse_lambda(const std::string& text) {
  LambdaSpec spec;
  if (text == "inf" || text == "infinity") return spec;
  if (text.rfind("auto:", 0) == 0) {
    const std::string arg = text.substr(5);
    errno = 0;
    char* end = nullptr;
    const long k = std::strtol(arg.c_str(), &end, 10);
    if (arg.empty() || end != arg.c_str() + arg.size() || errno == ERANGE ||
        k < 1) {
      throw UsageError("--lambda auto:<k_tilde> requires an integer >= 1, got '" +
                       text + "'");
    }
    spec.automatic = true;
    spec.k_tilde = static_cast<int>(k);
    return spec;
  }
  errno = 0;
  char* end = nullptr;
  const double v = std::strtod(text.c_str(), &end);
  if (text.empty() || end != text.c_str() + text.size() || errno == ERANGE ||
      std::isnan(v) || v < 0.0) {
    throw UsageError("--lambda expects a nonnegative number, 'inf', or "
                     "'auto:<k_tilde>', got '" + text + "'");
  }
  spec.value = v;
  return spec;
}

/// Reads a dataset, auto-detecting an optional column named "label".
rbhc::LoadedDataset read_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "' for reading");
  std::string header;
  std::getline(in, header);
  in.close();
  std::stringstream ss(header);
  std::string field;
  bool has_label = false;
  while (std::getline(ss, field, ',')) {
    const auto begin = field.find_first_not_of(" \t\r\n");
    const auto end = field.find_last_not_of(" \t\r\n");
    if (begin != std::string::npos &&
        field.substr(begin, end - begin + 1) == "label") {
      has_label = true;
      break;
    }
  }
  if (has_label) return rbhc::read_dataset_csv(path, std::string("label"));
  return rbhc::read_dataset_csv(path);
}

std::string sibling_path(const std::string& anchor, const char* name) {
  return (std::filesystem::path(anchor).parent_path() / name).string();
}

std::vector<int> labels_for_ari(const std::string& path) {
  const rbhc::LoadedDataset ds = read_dataset(path);
  if (ds.has_labels) return ds.labels;
  if (ds.points.cols() == 1) {
    std::vector<int> labels(static_cast<std::size_t>(ds.points.rows()));
    for (Eigen::Index i = 0; i < ds.points.rows(); ++i) {
      const double v = ds.points(i, 0);
      const double r = std::round(v);
      if (std::abs(v - r) > 1e-9) {
        throw std::runtime_error("'" + path +
                                 "' row " + std::to_string(i + 2) +
                                 ": label is not an integer");
      }
      labels[static_cast<std::size_t>(i)] = static_cast<int>(r);
    }
    return labels;
  }
  throw std::runtime_error("'" + path +
                           "' needs a 'label' column (or a single column of "
                           "integer labels)");
}

std::vector<double> parse_double_list(const std::string& text,
                                      const char* flag) {
  std::vector<double> values;
  std::stringstream ss(text);
  std::string field;
  while (std::getline(ss, field, ',')) {
    errno = 0;
    char* end = nullptr;
    const double v = std::strtod(field.c_str(), &end);
    if (field.empty() || end != field.c_str() + field.size() ||
        errno == ERANGE || !std::isfinite(v)) {
      throw UsageError(std::string(flag) + ": bad number '" + field + "'");
    }
    values.push_back(v);
  }
  if (values.empty()) throw UsageError(std::string(flag) + ": empty list");
  return values;
}

std::vector<std::int64_t> parse_int_list(const std::string& text,
                                         const char* flag) {
  std::vector<std::int64_t> values;
  for (double v : parse_double_list(text, flag)) {
    const double r = std::round(v);
    if (std::abs(v - r) > 1e-9 || r < 1) {
      throw UsageError(std::string(flag) + ": expected positive integers");
    }
    values.push_back(static_cast<std::int64_t>(r));
  }
  return values;
}

nlohmann::json report_json(const rbhc::ReducibilitySummary& summary) {
  nlohmann::json j;
  j["family"] = rbhc::family_name(summary.family);
  j["trials"] = summary.trials;
  j["violations"] = summary.violations;
  j["domain_errors"] = summary.domain_errors;
  j["mean_d_exact"] = summary.mean_d_exact;
  j["mean_d_approx"] = summary.mean_d_approx;
  j["mean_rel_error"] = summary.mean_rel_error;
  return j;
}

// ---------------------------------------------------------------------------
// Subcommand option blocks.

struct ClusterOpts {
  std::string input;
  std::string out = "tree.json";
  std::string partition_out;  // default: sibling partition.csv of --out
  std::string linkage_out;    // optional
  std::string family;
  std::string algo = "nnchain";
  std::string lambda = "inf";
  std::string center_weight = "population";
  double sigma2 = 1.0;
  int trials = 1;
  double beta = 1.0;
  std::uint64_t seed = 0;
};

int run_cluster(const ClusterOpts& opt) {
  const rbhc::Family family = parse_family(opt.family);
  const LambdaSpec lambda_spec = parse_lambda(opt.lambda);
  const rbhc::LoadedDataset ds = read_dataset(opt.input);
  const rbhc::FamilyDescriptor fam =
      make_descriptor(family, static_cast<int>(ds.points.cols()), opt.sigma2,
                      opt.trials, opt.beta);

  double lambda = lambda_spec.value;
  if (lambda_spec.automatic) {
    rbhc::LambdaConfig cfg;
    cfg.k_tilde = lambda_spec.k_tilde;
    cfg.weight = opt.center_weight == "singleton"
                     ? rbhc::CenterWeight::singleton
                     : rbhc::CenterWeight::population;
    cfg.seed = opt.seed;
    lambda = rbhc::select_lambda(ds.points, fam, cfg);
    if (lambda == 0.0) {
      std::cerr << "warning: selected lambda is 0 (all k-means centers "
                   "coincide); no merges will happen\n";
    }
  }

  const rbhc::Forest forest = opt.algo == "greedy"
                                  ? rbhc::greedy_cluster(ds.points, fam, lambda)
                                  : rbhc::nnchain_cluster(ds.points, fam, lambda);
  const rbhc::Partition part = rbhc::extract_partition(forest);

  rbhc::write_forest_json(opt.out, forest);
  const std::string partition_path =
      opt.partition_out.empty() ? sibling_path(opt.out, "partition.csv")
                                : opt.partition_out;
  rbhc::write_partition_csv(partition_path, part);
  if (!opt.linkage_out.empty()) rbhc::write_linkage_csv(opt.linkage_out, forest);

  std::cout << "n=" << forest.leaf_count << " merges=" << forest.merges.size()
            << " clusters=" << part.num_clusters
            << " lambda=" << rbhc::format_double(lambda) << "\n";
  return 0;
}

struct BhcOpts {
  std::string input;
  std::string out = "tree.json";
  std::string partition_out;
  std::string prior;
  double alpha = 1.0;
  double shape = 2.0;
  double rate = 0.05;
  double concentration = 1.0;
  std::int64_t trials = 1;
  double obs_variance = 1.0;
  double prior_variance = 1.0;
  std::vector<double> prior_mean;  // empty: use the empirical mean
};

int run_bhc(const BhcOpts& opt) {
  const rbhc::LoadedDataset ds = read_dataset(opt.input);
  const int dim = static_cast<int>(ds.points.cols());

  rbhc::ConjugatePrior prior;
  if (opt.prior == "gamma-poisson") {
    prior = rbhc::ConjugatePrior::make_gamma_poisson(dim, opt.shape, opt.rate);
  } else if (opt.prior == "dirichlet-multinomial") {
    prior = rbhc::ConjugatePrior::make_dirichlet_multinomial(
        Eigen::VectorXd::Constant(dim, opt.concentration), opt.trials);
  } else if (opt.prior == "gaussian-known-var") {
    Eigen::VectorXd mean;
    if (opt.prior_mean.empty()) {
      mean = ds.points.colwise().mean();
    } else if (opt.prior_mean.size() == 1) {
      mean = Eigen::VectorXd::Constant(dim, opt.prior_mean[0]);
    } else if (static_cast<int>(opt.prior_mean.size()) == dim) {
      mean = Eigen::Map<const Eigen::VectorXd>(opt.prior_mean.data(), dim);
    } else {
      throw UsageError("--prior-mean needs 1 or dim values");
    }
    prior = rbhc::ConjugatePrior::make_gaussian_known_var(
        mean, opt.prior_variance, opt.obs_variance);
  } else {
    throw UsageError("unknown prior '" + opt.prior +
                     "' (expected gamma-poisson, dirichlet-multinomial, or "
                     "gaussian-known-var)");
  }

  rbhc::BhcOptions options;
  options.alpha = opt.alpha;
  const rbhc::BhcResult result = rbhc::bhc_cluster(ds.points, prior, options);

  rbhc::write_forest_json(opt.out, result.forest, &result.merge_posteriors);
  const std::string partition_path =
      opt.partition_out.empty() ? sibling_path(opt.out, "partition.csv")
                                : opt.partition_out;
  rbhc::write_partition_csv(partition_path, result.cut);

  std::cout << "n=" << result.forest.leaf_count
            << " clusters=" << result.cut.num_clusters << "\n";
  return 0;
}

struct SynthOpts {
  std::string family;
  std::string out = "data.csv";
  rbhc::SynthSpec spec;
};

int run_synth(const SynthOpts& opt) {
  rbhc::SynthSpec spec = opt.spec;
  spec.family = parse_family(opt.family);
  spec.validate();
  const rbhc::Dataset ds = rbhc::generate(spec);
  rbhc::write_dataset_csv(opt.out, ds.points, &ds.labels);
  std::cout << "n=" << ds.points.rows() << " dim=" << ds.points.cols()
            << " k=" << spec.k << " -> " << opt.out << "\n";
  return 0;
}

struct ReducibilityOpts {
  std::string family;
  std::string out;  // optional JSON path; report always printed
  std::int64_t trials = 10000;
  double beta = 1.0;
  std::uint64_t seed = 1;
};

int run_reducibility_cmd(const ReducibilityOpts& opt) {
  const rbhc::Family family = parse_family(opt.family);
  const rbhc::ReducibilitySummary summary =
      rbhc::run_reducibility(family, opt.trials, opt.beta, opt.seed);
  const nlohmann::json j = report_json(summary);
  std::cout << j.dump(2) << "\n";
  if (!opt.out.empty()) rbhc::write_text_atomic(opt.out, j.dump(2) + "\n");
  return 0;
}

struct SweepOpts {
  std::string family = "gaussian-full";
  std::string out = "sweep.csv";
  std::string beta_grid = "1,2,4,8,16";
  std::string max_size_grid = "100";
  std::int64_t trials_per_cell = 2000;
  std::uint64_t seed = 0;
};

int run_sweep(const SweepOpts& opt) {
  const rbhc::Family family = parse_family(opt.family);
  const std::vector<double> betas = parse_double_list(opt.beta_grid, "--beta-grid");
  const std::vector<std::int64_t> sizes =
      parse_int_list(opt.max_size_grid, "--max-size-grid");
  const std::vector<rbhc::SweepCell> cells = rbhc::error_decay_sweep(
      family, betas, sizes, opt.trials_per_cell, opt.seed);

  std::string csv = "beta,max_size,trials,domain_errors,mean_rel_error\n";
  for (const rbhc::SweepCell& cell : cells) {
    csv += rbhc::format_double(cell.beta) + "," + std::to_string(cell.max_size) +
           "," + std::to_string(cell.trials) + "," +
           std::to_string(cell.domain_errors) + "," +
           rbhc::format_double(cell.mean_rel_error) + "\n";
  }
  rbhc::write_text_atomic(opt.out, csv);
  std::cout << csv;
  return 0;
}

struct EvalAriOpts {
  std::string pred;
  std::string truth;
  std::string out;  // optional JSON path
};

int run_eval_ari(const EvalAriOpts& opt) {
  const std::vector<int> pred = labels_for_ari(opt.pred);
  const std::vector<int> truth = labels_for_ari(opt.truth);
  const double ari = rbhc::adjusted_rand_index(pred, truth);
  std::cout << rbhc::format_double(ari) << "\n";
  if (!opt.out.empty()) {
    nlohmann::json j;
    j["ari"] = ari;
    rbhc::write_text_atomic(opt.out, j.dump(2) + "\n");
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Hierarchical clustering over exponential-family data: greedy and "
      "nearest-neighbor-chain agglomeration under the Bregman dissimilarity, "
      "exact Bayesian tree building, synthetic benchmarks, and evaluation.\n"
      "Environment: RBHC_THREADS overrides the worker thread count."};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Print help for every subcommand");

  const std::vector<std::string> family_choices = {
      "gaussian-spherical", "gaussian-full", "gaussian", "poisson",
      "multinomial"};

  ClusterOpts cluster;
  CLI::App* cmd_cluster =
      app.add_subcommand("cluster", "Agglomerate a CSV dataset into a forest");
  cmd_cluster->add_option("--input", cluster.input, "Dataset CSV (header row; optional 'label' column)")
      ->required()->check(CLI::ExistingFile);
  cmd_cluster->add_option("--family", cluster.family, "Observation family")
      ->required()->check(CLI::IsMember(family_choices));
  cmd_cluster->add_option("--sigma2", cluster.sigma2, "Spherical-Gaussian variance");
  cmd_cluster->add_option("--trials", cluster.trials, "Multinomial row sum m");
  cmd_cluster->add_option("--beta", cluster.beta, "Variance scale factor");
  cmd_cluster->add_option("--algo", cluster.algo, "Agglomeration driver")
      ->check(CLI::IsMember({"greedy", "nnchain"}));
  cmd_cluster->add_option("--lambda", cluster.lambda,
                          "Merge threshold: number, 'inf', or 'auto:<k_tilde>'");
  cmd_cluster->add_option("--lambda-center-weight", cluster.center_weight,
                          "Sizes given to k-means centers in the lambda heuristic")
      ->check(CLI::IsMember({"population", "singleton"}));
  cmd_cluster->add_option("--seed", cluster.seed, "RNG seed (lambda heuristic)");
  cmd_cluster->add_option("--out", cluster.out, "Forest JSON path");
  cmd_cluster->add_option("--partition-out", cluster.partition_out,
                          "Partition CSV path (default: partition.csv next to --out)");
  cmd_cluster->add_option("--linkage-out", cluster.linkage_out,
                          "Optional linkage-style CSV path");

  BhcOpts bhc;
  CLI::App* cmd_bhc = app.add_subcommand(
      "bhc", "Exact Bayesian hierarchical clustering with a conjugate prior");
  cmd_bhc->add_option("--input", bhc.input, "Dataset CSV")
      ->required()->check(CLI::ExistingFile);
  cmd_bhc->add_option("--prior", bhc.prior,
                      "gamma-poisson | dirichlet-multinomial | gaussian-known-var")
      ->required();
  cmd_bhc->add_option("--alpha", bhc.alpha, "Partition-prior concentration");
  cmd_bhc->add_option("--shape", bhc.shape, "Gamma prior shape");
  cmd_bhc->add_option("--rate", bhc.rate, "Gamma prior rate");
  cmd_bhc->add_option("--concentration", bhc.concentration,
                      "Dirichlet concentration (uniform)");
  cmd_bhc->add_option("--trials", bhc.trials, "Multinomial row sum m");
  cmd_bhc->add_option("--obs-variance", bhc.obs_variance,
                      "Known observation variance");
  cmd_bhc->add_option("--prior-variance", bhc.prior_variance,
                      "Gaussian mean-prior variance");
  cmd_bhc->add_option("--prior-mean", bhc.prior_mean,
                      "Gaussian mean-prior location (default: empirical mean)");
  cmd_bhc->add_option("--out", bhc.out, "Forest JSON path (with merge_posterior)");
  cmd_bhc->add_option("--partition-out", bhc.partition_out,
                      "Partition CSV path (default: partition.csv next to --out)");

  SynthOpts synth;
  CLI::App* cmd_synth =
      app.add_subcommand("synth", "Generate a labeled mixture dataset CSV");
  cmd_synth->add_option("--family", synth.family, "Observation family")
      ->required()->check(CLI::IsMember(family_choices));
  cmd_synth->add_option("--n", synth.spec.n, "Number of rows");
  cmd_synth->add_option("--k", synth.spec.k, "Mixture components");
  cmd_synth->add_option("--dim", synth.spec.dim, "Dimensions / categories");
  cmd_synth->add_option("--trials", synth.spec.trials, "Multinomial row sum m");
  cmd_synth->add_option("--gamma-shape", synth.spec.gamma_shape, "Poisson-mean prior shape");
  cmd_synth->add_option("--gamma-rate", synth.spec.gamma_rate, "Poisson-mean prior rate");
  cmd_synth->add_option("--dirichlet-conc", synth.spec.dirichlet_conc,
                        "Multinomial probability concentration");
  cmd_synth->add_option("--mean-precision", synth.spec.mean_precision,
                        "Gaussian mean-precision multiplier");
  cmd_synth->add_option("--wishart-df", synth.spec.wishart_df,
                        "Gaussian precision degrees of freedom");
  cmd_synth->add_option("--beta", synth.spec.beta, "Variance scale factor");
  cmd_synth->add_option("--seed", synth.spec.seed, "RNG seed");
  cmd_synth->add_option("--out", synth.out, "Output CSV path");

  ReducibilityOpts red;
  CLI::App* cmd_red = app.add_subcommand(
      "reducibility", "Monte-Carlo chain-safety check of the dissimilarity");
  cmd_red->add_option("--family", red.family, "poisson | multinomial | gaussian")
      ->required()->check(CLI::IsMember(family_choices));
  cmd_red->add_option("--trials", red.trials, "Trial count");
  cmd_red->add_option("--beta", red.beta, "Variance scale factor");
  cmd_red->add_option("--seed", red.seed, "RNG seed");
  cmd_red->add_option("--out", red.out, "Optional report JSON path");

  SweepOpts sweep;
  CLI::App* cmd_sweep = app.add_subcommand(
      "sweep", "Approximation-error decay over beta and cluster-size grids");
  cmd_sweep->add_option("--family", sweep.family, "Observation family")
      ->check(CLI::IsMember(family_choices));
  cmd_sweep->add_option("--beta-grid", sweep.beta_grid, "Comma-separated betas");
  cmd_sweep->add_option("--max-size-grid", sweep.max_size_grid,
                        "Comma-separated maximum cluster sizes");
  cmd_sweep->add_option("--trials-per-cell", sweep.trials_per_cell, "Trials per cell");
  cmd_sweep->add_option("--seed", sweep.seed, "RNG seed");
  cmd_sweep->add_option("--out", sweep.out, "Per-cell CSV path");

  EvalAriOpts ari;
  CLI::App* cmd_ari = app.add_subcommand(
      "eval-ari", "Adjusted Rand index between two labelings");
  cmd_ari->add_option("--pred", ari.pred, "Partition CSV or labeled dataset")
      ->required()->check(CLI::ExistingFile);
  cmd_ari->add_option("--truth", ari.truth, "Partition CSV or labeled dataset")
      ->required()->check(CLI::ExistingFile);
  cmd_ari->add_option("--out", ari.out, "Optional report JSON path");

  try {
    app.parse(argc, argv);
    if (cmd_cluster->parsed()) return run_cluster(cluster);
    if (cmd_bhc->parsed()) return run_bhc(bhc);
    if (cmd_synth->parsed()) return run_synth(synth);
    if (cmd_red->parsed()) return run_reducibility_cmd(red);
    if (cmd_sweep->parsed()) return run_sweep(sweep);
    if (cmd_ari->parsed()) return run_eval_ari(ari);
    return kUsageError;
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsageError;
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsageError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
