// Apache License, Version 2.0, refer to LICENSE.txt

#include "rbhc/common.hpp"

#include <atomic>
#include <cstdlib>
#include <thread>

namespace rbhc {

int worker_thread_count() {
  if (const char* env = std::getenv("RBHC_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

void parallel_blocks(std::int64_t total, std::int64_t block_size,
                     const std::function<void(std::int64_t, std::int64_t,
                                              std::int64_t)>& fn) {
  if (total <= 0) return;
  if (block_size <= 0) throw std::invalid_argument("block_size must be positive");
  const std::int64_t blocks = (total + block_size - 1) / block_size;
  const int threads =
      static_cast<int>(std::min<std::int64_t>(worker_thread_count(), blocks));
  if (threads <= 1) {
    for (std::int64_t b = 0; b < blocks; ++b) {
      fn(b, b * block_size, std::min(total, (b + 1) * block_size));
    }
    return;
  }
  std::atomic<std::int64_t> next{0};
  auto worker = [&]() {
    for (;;) {
      const std::int64_t b = next.fetch_add(1);
      if (b >= blocks) return;
      fn(b, b * block_size, std::min(total, (b + 1) * block_size));
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(threads));
  for (int i = 0; i < threads; ++i) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
}

}  // namespace rbhc
