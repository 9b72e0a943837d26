#pragma once

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace hermite {

/// Runs body(i) for i in [0, count) on up to `workers` threads. Items are claimed
/// dynamically; the first exception thrown by any item is rethrown after all join.
template <class Body>
void parallel_for(int workers, long count, const Body& body) {
  if (count <= 0) return;
  const int nthreads = static_cast<int>(std::clamp<long>(workers, 1, count));
  if (nthreads == 1) {
    for (long i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<long> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto run = [&] {
    for (long i = next++; i < count; i = next++) {
      try {
        body(i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = count;
      }
    }
  };
  std::vector<std::jthread> pool;
  pool.reserve(nthreads - 1);
  for (int t = 1; t < nthreads; ++t) pool.emplace_back(run);
  run();
  pool.clear();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace hermite
