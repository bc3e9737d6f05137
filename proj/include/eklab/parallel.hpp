#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

namespace eklab {

// Worker cap for node-level loops, from EK_LAB_THREADS (default 1).
// Read on every call so a process can change the cap between builds.
inline int thread_cap() {
  if (const char* s = std::getenv("EK_LAB_THREADS")) {
    const int v = std::atoi(s);
    if (v >= 1 && v <= 256) return v;
  }
  return 1;
}

// Deterministic data-parallel loop: the index->work mapping is independent
// of the worker count, so results are identical for any EK_LAB_THREADS.
template <class F>
void parallel_for(std::int64_t begin, std::int64_t end, F&& fn,
                  int threads = thread_cap()) {
  const std::int64_t count = end - begin;
  if (threads <= 1 || count < 8192) {
    for (std::int64_t i = begin; i < end; ++i) fn(i);
    return;
  }
  const std::int64_t chunk = (count + threads - 1) / threads;
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(threads));
  for (int t = 0; t < threads; ++t) {
    const std::int64_t lo = begin + t * chunk;
    const std::int64_t hi = std::min(end, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([lo, hi, &fn] {
      for (std::int64_t i = lo; i < hi; ++i) fn(i);
    });
  }
  for (auto& th : pool) th.join();
}

}  // namespace eklab
