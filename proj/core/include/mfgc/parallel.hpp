#pragma once

#include <cstddef>
#include <functional>
#include <thread>
#include <vector>

namespace mfgc {

inline int resolve_workers(int requested) {
  if (requested > 0) return requested;
  unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

// Static block partition of [0, count). Each worker writes only to its own
// indices, so the result is independent of the worker count.
inline void parallel_for(std::size_t count, int workers,
                         const std::function<void(std::size_t, std::size_t)>& body) {
  int w = resolve_workers(workers);
  if (w <= 1 || count < 2) {
    body(0, count);
    return;
  }
  std::size_t n_threads = std::min<std::size_t>(static_cast<std::size_t>(w), count);
  std::vector<std::thread> pool;
  pool.reserve(n_threads);
  std::size_t chunk = (count + n_threads - 1) / n_threads;
  for (std::size_t t = 0; t < n_threads; ++t) {
    std::size_t begin = t * chunk;
    std::size_t end = std::min(count, begin + chunk);
    if (begin >= end) break;
    pool.emplace_back(body, begin, end);
  }
  for (auto& th : pool) th.join();
}

}  // namespace mfgc
