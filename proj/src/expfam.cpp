// Apache License, Version 2.0, refer to LICENSE.txt

#include "rbhc/expfam.hpp"

#include <cmath>

namespace rbhc {
namespace {

constexpr double kIntegerTol = 1e-9;

bool is_count(double x) {
  return x >= 0.0 && std::abs(x - std::round(x)) <= kIntegerTol;
}

// x log x with the continuous extension at zero; negative arguments are a
// domain violation.
double xlogx(double x) {
  if (x < 0.0) {
    throw singular_generator_error("generator argument outside domain");
  }
  return x == 0.0 ? 0.0 : x * std::log(x);
}

void check_stat_dim(const FamilyDescriptor& fam, const SuffStat& t) {
  if (t.size() != fam.stat_dim()) {
    throw std::invalid_argument("sufficient statistic has wrong length");
  }
}

// Splits a full-Gaussian statistic into its mean block and the symmetrized
// second-moment block. The generator treats the matrix block as symmetric;
// off-symmetric perturbations (e.g. finite-difference probes) see the
// average of the two mirrored entries.
struct FullGaussianView {
  Eigen::VectorXd b;
  Eigen::MatrixXd T;
};

FullGaussianView split_full(const FamilyDescriptor& fam, const SuffStat& u) {
  const int d = fam.dim;
  FullGaussianView v;
  v.b = u.head(d);
  Eigen::MatrixXd raw =
      Eigen::Map<const Eigen::MatrixXd>(u.data() + d, d, d).transpose();
  v.T = 0.5 * (raw + raw.transpose());
  return v;
}

// Cholesky of S = T - b b^T; throws if S is not positive definite.
Eigen::LLT<Eigen::MatrixXd> scatter_llt(const FullGaussianView& v) {
  Eigen::MatrixXd S = v.T - v.b * v.b.transpose();
  Eigen::LLT<Eigen::MatrixXd> llt(S);
  if (llt.info() != Eigen::Success) {
    throw singular_generator_error(
        "full-gaussian scatter block is not positive definite");
  }
  return llt;
}

double smoothing_chain_factor(const FamilyDescriptor& fam) {
  return fam.smoothing.mode == SmoothingMode::convex_blend
             ? 1.0 - fam.smoothing.weight
             : 1.0;
}

}  // namespace

const char* family_name(Family family) {
  switch (family) {
    case Family::gaussian_spherical:
      return "gaussian_spherical";
    case Family::gaussian_full:
      return "gaussian_full";
    case Family::poisson:
      return "poisson";
    case Family::multinomial:
      return "multinomial";
  }
  return "unknown";
}

void FamilyDescriptor::validate() const {
  if (dim < 1) throw std::invalid_argument("dim must be >= 1");
  if (family == Family::poisson && dim != 1) {
    throw std::invalid_argument("poisson family is one-dimensional");
  }
  if (family == Family::gaussian_spherical && !(sigma2 > 0.0)) {
    throw std::invalid_argument("sigma2 must be positive");
  }
  if (family == Family::multinomial && trials < 1) {
    throw std::invalid_argument("multinomial trial count must be >= 1");
  }
  if (!(beta > 0.0)) throw std::invalid_argument("beta must be positive");
  if (smoothing.mode != SmoothingMode::none) {
    if (!(smoothing.weight > 0.0 && smoothing.weight < 1.0)) {
      throw std::invalid_argument("smoothing weight must lie in (0, 1)");
    }
    if (smoothing.anchor.size() != stat_dim()) {
      throw std::invalid_argument("smoothing anchor has wrong length");
    }
  }
}

FamilyDescriptor FamilyDescriptor::make_gaussian_spherical(int dim,
                                                           double sigma2,
                                                           double beta) {
  FamilyDescriptor fam;
  fam.family = Family::gaussian_spherical;
  fam.dim = dim;
  fam.sigma2 = sigma2;
  fam.beta = beta;
  fam.validate();
  return fam;
}

FamilyDescriptor FamilyDescriptor::make_poisson(double beta) {
  FamilyDescriptor fam;
  fam.family = Family::poisson;
  fam.dim = 1;
  fam.beta = beta;
  fam.smoothing.mode = SmoothingMode::shift;
  fam.smoothing.weight = 0.01;
  fam.smoothing.anchor = Eigen::VectorXd::Ones(1);
  fam.validate();
  return fam;
}

FamilyDescriptor FamilyDescriptor::make_multinomial(int dim, int trials,
                                                    double beta) {
  FamilyDescriptor fam;
  fam.family = Family::multinomial;
  fam.dim = dim;
  fam.trials = trials;
  fam.beta = beta;
  fam.smoothing.mode = SmoothingMode::convex_blend;
  fam.smoothing.weight = 0.1;
  fam.smoothing.anchor = Eigen::VectorXd::Constant(
      dim, static_cast<double>(trials) / static_cast<double>(dim));
  fam.validate();
  return fam;
}

FamilyDescriptor FamilyDescriptor::make_gaussian_full(int dim, double beta) {
  FamilyDescriptor fam;
  fam.family = Family::gaussian_full;
  fam.dim = dim;
  fam.beta = beta;
  fam.smoothing.mode = SmoothingMode::shift;
  fam.smoothing.weight = 0.01;
  // Anchor is (0, I): the shift regularizes only the second-moment block.
  Eigen::VectorXd anchor = Eigen::VectorXd::Zero(fam.stat_dim());
  for (int j = 0; j < dim; ++j) anchor[dim + j * dim + j] = 1.0;
  fam.smoothing.anchor = anchor;
  fam.validate();
  return fam;
}

SuffStat sufficient_stat(const FamilyDescriptor& fam,
                         const Eigen::VectorXd& x) {
  fam.validate();
  if (x.size() != fam.dim) {
    throw std::invalid_argument("observation has wrong dimension");
  }
  if (!x.allFinite()) {
    throw std::invalid_argument("observation contains non-finite values");
  }
  switch (fam.family) {
    case Family::gaussian_spherical:
      return x;
    case Family::poisson:
      if (!is_count(x[0])) {
        throw std::invalid_argument(
            "poisson observation must be a non-negative integer");
      }
      return x;
    case Family::multinomial: {
      double sum = 0.0;
      for (int j = 0; j < fam.dim; ++j) {
        if (!is_count(x[j])) {
          throw std::invalid_argument(
              "multinomial observation must hold non-negative integers");
        }
        sum += x[j];
      }
      if (std::abs(sum - fam.trials) > kIntegerTol) {
        throw std::invalid_argument(
            "multinomial observation must sum to the trial count");
      }
      return x;
    }
    case Family::gaussian_full: {
      SuffStat t(fam.stat_dim());
      t.head(fam.dim) = x;
      Eigen::Map<Eigen::MatrixXd>(t.data() + fam.dim, fam.dim, fam.dim) =
          (x * x.transpose()).transpose();
      return t;
    }
  }
  throw std::logic_error("unreachable");
}

SuffStat smoothed_point(const FamilyDescriptor& fam, const SuffStat& t) {
  check_stat_dim(fam, t);
  switch (fam.smoothing.mode) {
    case SmoothingMode::none:
      return t;
    case SmoothingMode::convex_blend:
      return (1.0 - fam.smoothing.weight) * t +
             fam.smoothing.weight * fam.smoothing.anchor;
    case SmoothingMode::shift:
      return t + fam.smoothing.weight * fam.smoothing.anchor;
  }
  throw std::logic_error("unreachable");
}

double generator(const FamilyDescriptor& fam, const SuffStat& t) {
  const SuffStat u = smoothed_point(fam, t);
  switch (fam.family) {
    case Family::gaussian_spherical:
      return u.squaredNorm() / (2.0 * fam.sigma2);
    case Family::poisson:
      return xlogx(u[0]) - u[0];
    case Family::multinomial: {
      const double log_m = std::log(static_cast<double>(fam.trials));
      double acc = 0.0;
      double total = 0.0;
      for (int j = 0; j < fam.dim; ++j) {
        acc += xlogx(u[j]);
        total += u[j];
      }
      return acc - total * log_m;
    }
    case Family::gaussian_full: {
      const FullGaussianView v = split_full(fam, u);
      const auto llt = scatter_llt(v);
      // -1/2 log det S via the Cholesky diagonal.
      double half_log_det = 0.0;
      for (int j = 0; j < fam.dim; ++j) {
        half_log_det += std::log(llt.matrixL()(j, j));
      }
      return -half_log_det;
    }
  }
  throw std::logic_error("unreachable");
}

Eigen::VectorXd generator_grad(const FamilyDescriptor& fam,
                               const SuffStat& t) {
  const SuffStat u = smoothed_point(fam, t);
  const double chain = smoothing_chain_factor(fam);
  switch (fam.family) {
    case Family::gaussian_spherical:
      return (chain / fam.sigma2) * u;
    case Family::poisson:
      if (u[0] <= 0.0) {
        throw singular_generator_error("generator gradient needs t > 0");
      }
      return Eigen::VectorXd::Constant(1, chain * std::log(u[0]));
    case Family::multinomial: {
      const double log_m = std::log(static_cast<double>(fam.trials));
      Eigen::VectorXd g(fam.dim);
      for (int j = 0; j < fam.dim; ++j) {
        if (u[j] <= 0.0) {
          throw singular_generator_error("generator gradient needs t > 0");
        }
        g[j] = chain * (std::log(u[j]) - log_m + 1.0);
      }
      return g;
    }
    case Family::gaussian_full: {
      const int d = fam.dim;
      const FullGaussianView v = split_full(fam, u);
      const auto llt = scatter_llt(v);
      const Eigen::MatrixXd W =
          llt.solve(Eigen::MatrixXd::Identity(d, d));  // S^{-1}
      Eigen::VectorXd g(fam.stat_dim());
      g.head(d) = chain * (W * v.b);
      Eigen::Map<Eigen::MatrixXd>(g.data() + d, d, d) =
          (-0.5 * chain * W).transpose();
      return g;
    }
  }
  throw std::logic_error("unreachable");
}

Eigen::MatrixXd generator_hessian(const FamilyDescriptor& fam,
                                  const SuffStat& t) {
  const SuffStat u = smoothed_point(fam, t);
  const double chain = smoothing_chain_factor(fam);
  const double chain2 = chain * chain;
  switch (fam.family) {
    case Family::gaussian_spherical:
      return (chain2 / fam.sigma2) *
             Eigen::MatrixXd::Identity(fam.dim, fam.dim);
    case Family::poisson:
      if (u[0] <= 0.0) {
        throw singular_generator_error("generator hessian needs t > 0");
      }
      return Eigen::MatrixXd::Constant(1, 1, chain2 / u[0]);
    case Family::multinomial: {
      Eigen::MatrixXd h = Eigen::MatrixXd::Zero(fam.dim, fam.dim);
      for (int j = 0; j < fam.dim; ++j) {
        if (u[j] <= 0.0) {
          throw singular_generator_error("generator hessian needs t > 0");
        }
        h(j, j) = chain2 / u[j];
      }
      return h;
    }
    case Family::gaussian_full: {
      // Hessian of -1/2 log det(sym(T) - b b^T) on the flattened
      // coordinates, with the matrix block read through its symmetric part.
      // With W = S^{-1} and v = W b:
      //   d^2/db db     = (1 + b.v) W + v v^T
      //   d^2/db dT_lm  = -(W_il v_m + W_im v_l) / 2
      //   d^2/dT dT     = (W_kl W_jm + W_jl W_km) / 4
      const int d = fam.dim;
      const int n = fam.stat_dim();
      const FullGaussianView view = split_full(fam, u);
      const auto llt = scatter_llt(view);
      const Eigen::MatrixXd W = llt.solve(Eigen::MatrixXd::Identity(d, d));
      const Eigen::VectorXd v = W * view.b;
      const double bv = view.b.dot(v);

      Eigen::MatrixXd h(n, n);
      h.topLeftCorner(d, d) = (1.0 + bv) * W + v * v.transpose();
      for (int i = 0; i < d; ++i) {
        for (int l = 0; l < d; ++l) {
          for (int m = 0; m < d; ++m) {
            h(i, d + l * d + m) = -0.5 * (W(i, l) * v[m] + W(i, m) * v[l]);
          }
        }
      }
      h.bottomLeftCorner(n - d, d) = h.topRightCorner(d, n - d).transpose();
      for (int j = 0; j < d; ++j) {
        for (int k = 0; k < d; ++k) {
          for (int l = 0; l < d; ++l) {
            for (int m = 0; m < d; ++m) {
              h(d + j * d + k, d + l * d + m) =
                  0.25 * (W(k, l) * W(j, m) + W(j, l) * W(k, m));
            }
          }
        }
      }
      h *= chain2;
      return 0.5 * (h + h.transpose());  // kill rounding asymmetry
    }
  }
  throw std::logic_error("unreachable");
}

}  // namespace rbhc
