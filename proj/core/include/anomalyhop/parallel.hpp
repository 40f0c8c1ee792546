#pragma once

#include <atomic>
#include <functional>
#include <thread>
#include <vector>

namespace anomalyhop {

/// Run fn(i) for i in [0, n) on up to `threads` workers pulling indices
/// from a shared counter. threads <= 1 runs inline.
inline void parallel_for(size_t n, int threads,
                         const std::function<void(size_t)>& fn) {
  if (threads <= 1 || n <= 1) {
    for (size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<size_t> next{0};
  auto worker = [&] {
    for (size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) fn(i);
  };
  size_t n_workers = std::min<size_t>(threads, n);
  std::vector<std::thread> pool;
  pool.reserve(n_workers);
  for (size_t t = 0; t < n_workers; ++t) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
}

inline int default_threads() {
  unsigned hw = std::thread::hardware_concurrency();
  return hw ? static_cast<int>(hw) : 1;
}

}  // namespace anomalyhop
