#pragma once

// Worker pool sized by PAMLAB_THREADS (falling back to the hardware count).
// parallel_for hands out indices atomically; callers must write results to
// per-index slots so the output is independent of scheduling order.

#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace pamlab {

inline int thread_count() {
  if (const char* s = std::getenv("PAMLAB_THREADS")) {
    const int v = std::atoi(s);
    if (v >= 1) return v;
  }
  const unsigned hc = std::thread::hardware_concurrency();
  return hc ? static_cast<int>(hc) : 1;
}

template <typename Fn>
void parallel_for(long n, Fn&& fn) {
  const long T = std::min<long>(thread_count(), n);
  if (T <= 1) {
    for (long i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<long> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(T);
  for (long t = 0; t < T; ++t)
    pool.emplace_back([&] {
      try {
        for (long i; (i = next.fetch_add(1)) < n;) fn(i);
      } catch (...) {
        std::scoped_lock lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        next.store(n);
      }
    });
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace pamlab
