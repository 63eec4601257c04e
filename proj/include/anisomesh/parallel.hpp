#pragma once

#include <cstdlib>
#include <functional>
#include <thread>
#include <vector>

namespace anisomesh {

inline int worker_count() {
  unsigned hw = std::thread::hardware_concurrency();
  int n = hw == 0 ? 1 : static_cast<int>(hw);
  if (const char* env = std::getenv("ANISOMESH_THREADS")) {
    int cap = std::atoi(env);
    if (cap >= 1) n = std::min(n, cap);
  }
  return n;
}

// Static block partition; results must be written into pre-assigned slots so
// the outcome is independent of the schedule.
template <typename Fn>
void parallel_for(size_t n, const Fn& fn) {
  int workers = worker_count();
  if (workers <= 1 || n <= 1) {
    for (size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  size_t chunk = (n + workers - 1) / workers;
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w) {
    size_t lo = static_cast<size_t>(w) * chunk;
    size_t hi = std::min(n, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([lo, hi, &fn]() {
      for (size_t i = lo; i < hi; ++i) fn(i);
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace anisomesh
