// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

namespace rbhc {

// Counter-based generator (Philox4x32-10). Every (seed, stream) pair is an
// independent deterministic sequence, so Monte Carlo trials can be keyed by
// trial index and run in any order or in parallel without coupling.
class Philox4x32 {
 public:
  Philox4x32(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t s = seed + 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = s;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    z ^= z >> 31;
    key_[0] = static_cast<std::uint32_t>(z);
    key_[1] = static_cast<std::uint32_t>(z >> 32);
    ctr_[0] = 0;
    ctr_[1] = 0;
    ctr_[2] = static_cast<std::uint32_t>(stream);
    ctr_[3] = static_cast<std::uint32_t>(stream >> 32);
  }

  std::uint32_t next_u32() {
    if (have_ == 0) refill();
    return out_[--have_];
  }

 private:
  void refill() {
    std::array<std::uint32_t, 4> x = ctr_;
    std::uint32_t k0 = key_[0];
    std::uint32_t k1 = key_[1];
    for (int round = 0; round < 10; ++round) {
      const std::uint64_t p0 = 0xD2511F53ULL * x[0];
      const std::uint64_t p1 = 0xCD9E8D57ULL * x[2];
      const std::uint32_t hi0 = static_cast<std::uint32_t>(p0 >> 32);
      const std::uint32_t lo0 = static_cast<std::uint32_t>(p0);
      const std::uint32_t hi1 = static_cast<std::uint32_t>(p1 >> 32);
      const std::uint32_t lo1 = static_cast<std::uint32_t>(p1);
      x = {hi1 ^ x[1] ^ k0, lo1, hi0 ^ x[3] ^ k1, lo0};
      k0 += 0x9E3779B9U;
      k1 += 0xBB67AE85U;
    }
    out_ = x;
    have_ = 4;
    if (++ctr_[0] == 0) ++ctr_[1];  // 64-bit draw counter; streams sit in ctr[2..3]
  }

  std::array<std::uint32_t, 2> key_{};
  std::array<std::uint32_t, 4> ctr_{};
  std::array<std::uint32_t, 4> out_{};
  int have_ = 0;
};

/// Deterministic scalar sampler over one (seed, stream) Philox sequence.
class RandomStream {
 public:
  RandomStream(std::uint64_t seed, std::uint64_t stream) : eng_(seed, stream) {}

  std::uint64_t next_u64() {
    const std::uint64_t hi = eng_.next_u32();
    return (hi << 32) | eng_.next_u32();
  }

  /// Uniform on [0, 1).
  double u01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform on (0, 1].
  double u01_positive() { return 1.0 - u01(); }

  /// Uniform integer on [lo, hi], inclusive.
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
    if (lo > hi) throw std::invalid_argument("uniform_int: empty range");
    const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
    if (span == 0) return static_cast<std::int64_t>(next_u64());  // full range
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % span;
    std::uint64_t x;
    do {
      x = next_u64();
    } while (x >= limit);
    return lo + static_cast<std::int64_t>(x % span);
  }

  double normal() {
    if (have_normal_) {
      have_normal_ = false;
      return cached_normal_;
    }
    const double r = std::sqrt(-2.0 * std::log(u01_positive()));
    const double theta = 2.0 * M_PI * u01();
    cached_normal_ = r * std::sin(theta);
    have_normal_ = true;
    return r * std::cos(theta);
  }

  /// Gamma(shape, rate) via Marsaglia–Tsang, with the usual boost for
  /// shape < 1.
  double gamma(double shape, double rate) {
    if (!(shape > 0.0) || !(rate > 0.0)) {
      throw std::invalid_argument("gamma: shape and rate must be positive");
    }
    if (shape < 1.0) {
      const double u = u01_positive();
      return gamma(shape + 1.0, rate) * std::pow(u, 1.0 / shape);
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
      double x;
      double v;
      do {
        x = normal();
        v = 1.0 + c * x;
      } while (v <= 0.0);
      v = v * v * v;
      const double u = u01_positive();
      if (std::log(u) < 0.5 * x * x + d - d * v + d * std::log(v)) {
        return d * v / rate;
      }
    }
  }

  double chi_squared(double df) { return gamma(0.5 * df, 0.5); }

  /// Exact Poisson(mean) draw. Large means are split using Poisson
  /// additivity so the inversion loop never underflows exp(-mean).
  std::int64_t poisson(double mean) {
    if (!(mean >= 0.0)) throw std::invalid_argument("poisson: mean must be >= 0");
    std::int64_t total = 0;
    while (mean > 30.0) {
      total += poisson_small(15.0);
      mean -= 15.0;
    }
    return total + poisson_small(mean);
  }

  /// Dirichlet draw via normalized Gamma variates.
  std::vector<double> dirichlet(const std::vector<double>& conc) {
    std::vector<double> g(conc.size());
    double sum = 0.0;
    for (std::size_t j = 0; j < conc.size(); ++j) {
      g[j] = gamma(conc[j], 1.0);
      sum += g[j];
    }
    if (sum <= 0.0) sum = std::numeric_limits<double>::min();
    for (double& x : g) x /= sum;
    return g;
  }

 private:
  std::int64_t poisson_small(double mean) {
    if (mean <= 0.0) return 0;
    const double limit = std::exp(-mean);
    std::int64_t k = 0;
    double p = 1.0;
    do {
      ++k;
      p *= u01();
    } while (p > limit);
    return k - 1;
  }

  Philox4x32 eng_;
  bool have_normal_ = false;
  double cached_normal_ = 0.0;
};

}  // namespace rbhc
