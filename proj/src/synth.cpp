// Apache License, Version 2.0, refer to LICENSE.txt

#include "rbhc/synth.hpp"

#include <cmath>
#include <stdexcept>

#include <Eigen/Cholesky>

namespace rbhc {
namespace detail {

Eigen::MatrixXd wishart(RandomStream& rng, double df,
                        const Eigen::MatrixXd& scale) {
  const Eigen::Index d = scale.rows();
  if (scale.cols() != d) throw std::invalid_argument("scale must be square");
  if (!(df > static_cast<double>(d) - 1.0)) {
    throw std::invalid_argument("wishart degrees of freedom too small");
  }
  Eigen::LLT<Eigen::MatrixXd> llt(scale);
  if (llt.info() != Eigen::Success) {
    throw std::invalid_argument("wishart scale must be positive definite");
  }
  // Bartlett: scale = L L^T; draw lower-triangular B with chi distributed
  // diagonal and standard normal subdiagonal; the draw is (L B)(L B)^T.
  Eigen::MatrixXd b = Eigen::MatrixXd::Zero(d, d);
  for (Eigen::Index i = 0; i < d; ++i) {
    b(i, i) = std::sqrt(rng.chi_squared(df - static_cast<double>(i)));
    for (Eigen::Index j = 0; j < i; ++j) b(i, j) = rng.normal();
  }
  const Eigen::MatrixXd lb = llt.matrixL() * b;
  return lb * lb.transpose();
}

}  // namespace detail

namespace {

/// Multinomial counts: `trials` categorical draws against the CDF of prob.
Eigen::VectorXd multinomial_draw(RandomStream& rng,
                                 const std::vector<double>& prob,
                                 std::int64_t trials) {
  Eigen::VectorXd counts = Eigen::VectorXd::Zero(
      static_cast<Eigen::Index>(prob.size()));
  for (std::int64_t t = 0; t < trials; ++t) {
    const double u = rng.u01();
    double acc = 0.0;
    Eigen::Index pick = static_cast<Eigen::Index>(prob.size()) - 1;
    for (std::size_t j = 0; j < prob.size(); ++j) {
      acc += prob[j];
      if (u < acc) {
        pick = static_cast<Eigen::Index>(j);
        break;
      }
    }
    counts[pick] += 1.0;
  }
  return counts;
}

std::int64_t scaled_trials(std::int64_t trials, double beta) {
  const auto m = static_cast<std::int64_t>(std::llround(beta * static_cast<double>(trials)));
  return std::max<std::int64_t>(1, m);
}

/// One full-Gaussian mixture component: mean, precision Cholesky factor
/// (for sampling), and covariance (for the exact mean statistic).
struct GaussianComponent {
  Eigen::VectorXd mean;
  Eigen::MatrixXd precision_chol_lower;  // precision = C C^T
  Eigen::MatrixXd covariance;
};

GaussianComponent draw_gaussian_component(RandomStream& rng,
                                          const Eigen::MatrixXd& psi,
                                          double df, double mean_precision) {
  const Eigen::Index d = psi.rows();
  GaussianComponent comp;
  const Eigen::MatrixXd lambda = detail::wishart(rng, df, psi);
  Eigen::LLT<Eigen::MatrixXd> llt(lambda);
  if (llt.info() != Eigen::Success) {
    throw std::runtime_error("wishart draw lost positive definiteness");
  }
  comp.precision_chol_lower = llt.matrixL();
  comp.covariance = llt.solve(Eigen::MatrixXd::Identity(d, d));
  // mean ~ N(0, (r * lambda)^{-1}): solve C^T mu = z / sqrt(r).
  Eigen::VectorXd z(d);
  for (Eigen::Index j = 0; j < d; ++j) z[j] = rng.normal();
  comp.mean = comp.precision_chol_lower.transpose()
                  .triangularView<Eigen::Upper>()
                  .solve(z) /
              std::sqrt(mean_precision);
  return comp;
}

Eigen::VectorXd gaussian_draw(RandomStream& rng, const GaussianComponent& comp,
                              double beta) {
  const Eigen::Index d = comp.mean.size();
  Eigen::VectorXd z(d);
  for (Eigen::Index j = 0; j < d; ++j) z[j] = rng.normal();
  // x ~ N(mean, covariance / beta): solve C^T y = z, then scale.
  const Eigen::VectorXd y = comp.precision_chol_lower.transpose()
                                .triangularView<Eigen::Upper>()
                                .solve(z);
  return comp.mean + y / std::sqrt(beta);
}

Eigen::MatrixXd shared_psi(RandomStream& rng, int dim) {
  Eigen::MatrixXd a(dim, dim);
  for (int i = 0; i < dim; ++i) {
    for (int j = 0; j < dim; ++j) a(i, j) = rng.normal();
  }
  return a * a.transpose() +
         static_cast<double>(dim) * Eigen::MatrixXd::Identity(dim, dim);
}

}  // namespace

void SynthSpec::validate() const {
  if (n < 1 || k < 1 || n < k) {
    throw std::invalid_argument("need n >= k >= 1");
  }
  if (dim < 1) throw std::invalid_argument("dimension must be >= 1");
  if (!(beta > 0.0)) throw std::invalid_argument("beta must be > 0");
  if (!(gamma_shape > 0.0) || !(gamma_rate > 0.0)) {
    throw std::invalid_argument("gamma hyperparameters must be > 0");
  }
  if (!(dirichlet_conc > 0.0)) {
    throw std::invalid_argument("dirichlet concentration must be > 0");
  }
  if (!(mean_precision > 0.0)) {
    throw std::invalid_argument("mean precision must be > 0");
  }
  if (family == Family::poisson && dim != 1) {
    throw std::invalid_argument("poisson datasets are one-dimensional");
  }
  if (family == Family::multinomial) {
    if (dim < 2) throw std::invalid_argument("multinomial needs dim >= 2");
    if (trials < 1) throw std::invalid_argument("trials must be >= 1");
  }
  if (family == Family::gaussian_full &&
      !(wishart_df > static_cast<double>(dim) - 1.0)) {
    throw std::invalid_argument("wishart_df must exceed dim - 1");
  }
}

FamilyDescriptor SynthSpec::descriptor() const {
  validate();
  switch (family) {
    case Family::gaussian_spherical:
      return FamilyDescriptor::make_gaussian_spherical(dim, 1.0, beta);
    case Family::poisson:
      return FamilyDescriptor::make_poisson(beta);
    case Family::multinomial:
      return FamilyDescriptor::make_multinomial(dim, static_cast<int>(trials),
                                                beta);
    case Family::gaussian_full:
      return FamilyDescriptor::make_gaussian_full(dim, beta);
  }
  throw std::logic_error("unknown family");
}

Dataset generate(const SynthSpec& spec) {
  spec.validate();
  RandomStream rng(spec.seed, 0);

  Dataset data;
  data.labels.resize(static_cast<std::size_t>(spec.n));

  switch (spec.family) {
    case Family::gaussian_spherical: {
      // Spherical components: unit-variance noparametric hyperprior makes
      // little sense, so means are drawn from N(0, (mean_precision)^{-1} I).
      std::vector<Eigen::VectorXd> means;
      const double spread = 1.0 / std::sqrt(spec.mean_precision);
      for (int c = 0; c < spec.k; ++c) {
        Eigen::VectorXd mu(spec.dim);
        for (int j = 0; j < spec.dim; ++j) mu[j] = spread * rng.normal();
        means.push_back(std::move(mu));
      }
      data.points.resize(spec.n, spec.dim);
      const double sd = 1.0 / std::sqrt(spec.beta);
      for (std::int64_t i = 0; i < spec.n; ++i) {
        const int c = static_cast<int>(rng.uniform_int(0, spec.k - 1));
        data.labels[static_cast<std::size_t>(i)] = c;
        for (int j = 0; j < spec.dim; ++j) {
          data.points(i, j) = means[static_cast<std::size_t>(c)][j] +
                              sd * rng.normal();
        }
      }
      break;
    }
    case Family::poisson: {
      std::vector<Eigen::VectorXd> rates;
      for (int c = 0; c < spec.k; ++c) {
        Eigen::VectorXd rho(spec.dim);
        for (int j = 0; j < spec.dim; ++j) {
          rho[j] = rng.gamma(spec.gamma_shape, spec.gamma_rate);
        }
        rates.push_back(std::move(rho));
      }
      data.points.resize(spec.n, spec.dim);
      for (std::int64_t i = 0; i < spec.n; ++i) {
        const int c = static_cast<int>(rng.uniform_int(0, spec.k - 1));
        data.labels[static_cast<std::size_t>(i)] = c;
        for (int j = 0; j < spec.dim; ++j) {
          const double lam = spec.beta * rates[static_cast<std::size_t>(c)][j];
          data.points(i, j) =
              static_cast<double>(rng.poisson(lam)) / spec.beta;
        }
      }
      break;
    }
    case Family::multinomial: {
      std::vector<std::vector<double>> probs;
      const std::vector<double> conc(static_cast<std::size_t>(spec.dim),
                                     spec.dirichlet_conc);
      for (int c = 0; c < spec.k; ++c) probs.push_back(rng.dirichlet(conc));
      const std::int64_t m_scaled = scaled_trials(spec.trials, spec.beta);
      const double rescale =
          static_cast<double>(spec.trials) / static_cast<double>(m_scaled);
      data.points.resize(spec.n, spec.dim);
      for (std::int64_t i = 0; i < spec.n; ++i) {
        const int c = static_cast<int>(rng.uniform_int(0, spec.k - 1));
        data.labels[static_cast<std::size_t>(i)] = c;
        data.points.row(i) =
            rescale *
            multinomial_draw(rng, probs[static_cast<std::size_t>(c)], m_scaled)
                .transpose();
      }
      break;
    }
    case Family::gaussian_full: {
      const Eigen::MatrixXd psi = shared_psi(rng, spec.dim);
      std::vector<GaussianComponent> comps;
      for (int c = 0; c < spec.k; ++c) {
        comps.push_back(draw_gaussian_component(rng, psi, spec.wishart_df,
                                                spec.mean_precision));
      }
      data.points.resize(spec.n, spec.dim);
      for (std::int64_t i = 0; i < spec.n; ++i) {
        const int c = static_cast<int>(rng.uniform_int(0, spec.k - 1));
        data.labels[static_cast<std::size_t>(i)] = c;
        data.points.row(i) =
            gaussian_draw(rng, comps[static_cast<std::size_t>(c)], spec.beta)
                .transpose();
      }
      break;
    }
  }
  return data;
}

TripletSample reducibility_triplet(Family family, std::int64_t size_min,
                                   std::int64_t size_max, double beta,
                                   std::uint64_t seed, std::uint64_t trial) {
  if (size_min < 1 || size_max < size_min) {
    throw std::invalid_argument("cluster size range is empty");
  }
  if (!(beta > 0.0)) throw std::invalid_argument("beta must be > 0");
  RandomStream rng(seed, trial);

  TripletSample out;
  std::array<std::int64_t, 3> sizes{};

  switch (family) {
    case Family::poisson: {
      out.fam = FamilyDescriptor::make_poisson(beta);
      const double rho = rng.gamma(2.0, 0.05);
      for (auto& s : sizes) s = rng.uniform_int(size_min, size_max);
      std::int64_t next_member = 0;
      for (int c = 0; c < 3; ++c) {
        KahanSum sum;
        for (std::int64_t i = 0; i < sizes[static_cast<std::size_t>(c)]; ++i) {
          sum.add(static_cast<double>(rng.poisson(beta * rho)) / beta);
        }
        SuffStat mean(1);
        mean[0] = sum.value() / static_cast<double>(sizes[static_cast<std::size_t>(c)]);
        std::vector<std::int64_t> members(
            static_cast<std::size_t>(sizes[static_cast<std::size_t>(c)]));
        for (auto& id : members) id = next_member++;
        out.summaries[static_cast<std::size_t>(c)] = summary_from_mean(
            sizes[static_cast<std::size_t>(c)], mean, std::move(members));
      }
      out.component_mean_stat = SuffStat::Constant(1, rho);
      break;
    }
    case Family::multinomial: {
      const int d = 10;
      const std::int64_t m = 5;
      out.fam = FamilyDescriptor::make_multinomial(d, static_cast<int>(m), beta);
      const std::vector<double> conc(static_cast<std::size_t>(d), 5.0);
      const std::vector<double> q = rng.dirichlet(conc);
      const std::int64_t m_scaled = scaled_trials(m, beta);
      const double rescale = static_cast<double>(m) / static_cast<double>(m_scaled);
      for (auto& s : sizes) s = rng.uniform_int(size_min, size_max);
      std::int64_t next_member = 0;
      for (int c = 0; c < 3; ++c) {
        Eigen::VectorXd sum = Eigen::VectorXd::Zero(d);
        for (std::int64_t i = 0; i < sizes[static_cast<std::size_t>(c)]; ++i) {
          sum += rescale * multinomial_draw(rng, q, m_scaled);
        }
        std::vector<std::int64_t> members(
            static_cast<std::size_t>(sizes[static_cast<std::size_t>(c)]));
        for (auto& id : members) id = next_member++;
        out.summaries[static_cast<std::size_t>(c)] = summary_from_mean(
            sizes[static_cast<std::size_t>(c)],
            sum / static_cast<double>(sizes[static_cast<std::size_t>(c)]),
            std::move(members));
      }
      out.component_mean_stat = SuffStat(d);
      for (int j = 0; j < d; ++j) {
        out.component_mean_stat[j] =
            static_cast<double>(m) * q[static_cast<std::size_t>(j)];
      }
      break;
    }
    case Family::gaussian_full: {
      const int d = 10;
      out.fam = FamilyDescriptor::make_gaussian_full(d, beta);
      const Eigen::MatrixXd psi = shared_psi(rng, d);
      const GaussianComponent comp = draw_gaussian_component(
          rng, psi, static_cast<double>(d) + 2.0, 0.08);
      for (auto& s : sizes) s = rng.uniform_int(size_min, size_max);
      std::int64_t next_member = 0;
      const int stat_dim = d + d * d;
      for (int c = 0; c < 3; ++c) {
        Eigen::VectorXd sum = Eigen::VectorXd::Zero(stat_dim);
        for (std::int64_t i = 0; i < sizes[static_cast<std::size_t>(c)]; ++i) {
          const Eigen::VectorXd x = gaussian_draw(rng, comp, beta);
          sum.head(d) += x;
          for (int r = 0; r < d; ++r) {
            for (int s2 = 0; s2 < d; ++s2) {
              sum[d + r * d + s2] += x[r] * x[s2];
            }
          }
        }
        std::vector<std::int64_t> members(
            static_cast<std::size_t>(sizes[static_cast<std::size_t>(c)]));
        for (auto& id : members) id = next_member++;
        out.summaries[static_cast<std::size_t>(c)] = summary_from_mean(
            sizes[static_cast<std::size_t>(c)],
            sum / static_cast<double>(sizes[static_cast<std::size_t>(c)]),
            std::move(members));
      }
      // E[(x, x x^T)] = (mean, mean mean^T + covariance / beta).
      out.component_mean_stat = SuffStat(stat_dim);
      out.component_mean_stat.head(d) = comp.mean;
      const Eigen::MatrixXd second =
          comp.mean * comp.mean.transpose() + comp.covariance / beta;
      for (int r = 0; r < d; ++r) {
        for (int s2 = 0; s2 < d; ++s2) {
          out.component_mean_stat[d + r * d + s2] = second(r, s2);
        }
      }
      break;
    }
    case Family::gaussian_spherical: {
      out.fam = FamilyDescriptor::make_gaussian_spherical(2, 1.0, beta);
      Eigen::VectorXd mu(2);
      mu[0] = rng.normal();
      mu[1] = rng.normal();
      for (auto& s : sizes) s = rng.uniform_int(size_min, size_max);
      std::int64_t next_member = 0;
      for (int c = 0; c < 3; ++c) {
        Eigen::VectorXd sum = Eigen::VectorXd::Zero(2);
        for (std::int64_t i = 0; i < sizes[static_cast<std::size_t>(c)]; ++i) {
          for (int j = 0; j < 2; ++j) {
            sum[j] += mu[j] + rng.normal() / std::sqrt(beta);
          }
        }
        std::vector<std::int64_t> members(
            static_cast<std::size_t>(sizes[static_cast<std::size_t>(c)]));
        for (auto& id : members) id = next_member++;
        out.summaries[static_cast<std::size_t>(c)] = summary_from_mean(
            sizes[static_cast<std::size_t>(c)],
            sum / static_cast<double>(sizes[static_cast<std::size_t>(c)]),
            std::move(members));
      }
      out.component_mean_stat = mu;
      break;
    }
  }
  return out;
}

}  // namespace rbhc
