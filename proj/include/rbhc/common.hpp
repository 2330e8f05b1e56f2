// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace rbhc {

/// Thrown when a generator is evaluated outside its (smoothed) domain,
/// e.g. a non-positive rate or a second-moment block that is not positive
/// definite.
struct singular_generator_error : std::domain_error {
  using std::domain_error::domain_error;
};

/// Compensated accumulator; summation order still matters, but rounding
/// error stays O(1) ulp instead of O(n).
class KahanSum {
 public:
  void add(double x) {
    const double y = x - c_;
    const double t = s_ + y;
    c_ = (t - s_) - y;
    s_ = t;
  }
  [[nodiscard]] double value() const { return s_; }

 private:
  double s_ = 0.0;
  double c_ = 0.0;
};

/// log(exp(a) + exp(b)) without overflow.
inline double log_sum_exp(double a, double b) {
  if (a == -std::numeric_limits<double>::infinity()) return b;
  if (b == -std::numeric_limits<double>::infinity()) return a;
  const double hi = std::max(a, b);
  const double lo = std::min(a, b);
  return hi + std::log1p(std::exp(lo - hi));
}

/// 1 / (1 + exp(x)) evaluated stably for large |x|.
inline double stable_inv_logit(double x) {
  if (x >= 0.0) {
    const double e = std::exp(-x);
    return e / (1.0 + e);
  }
  return 1.0 / (1.0 + std::exp(x));
}

/// Number of worker threads: RBHC_THREADS env var if set, otherwise the
/// hardware concurrency (at least 1).
int worker_thread_count();

/// Runs fn(block_index, begin, end) over [0, total) split into fixed-size
/// blocks. Blocks are distributed over threads but the block boundaries do
/// not depend on the thread count, so per-block results can be reduced in
/// block order to give thread-count-independent output.
void parallel_blocks(std::int64_t total, std::int64_t block_size,
                     const std::function<void(std::int64_t, std::int64_t,
                                              std::int64_t)>& fn);

}  // namespace rbhc
