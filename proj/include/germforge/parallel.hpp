#pragma once

// Fixed-size worker pool for embarrassingly parallel sampling loops. The
// GERMFORGE_THREADS environment variable caps the number of workers.

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <functional>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace germforge {

inline int worker_count() {
  int n = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  if (const char* env = std::getenv("GERMFORGE_THREADS")) {
    char* end = nullptr;
    const long cap = std::strtol(env, &end, 10);
    if (end != env && cap >= 1) n = std::min(n, static_cast<int>(cap));
  }
  return n;
}

/// Runs fn(i) for i in [0, n). Exceptions are rethrown on the caller (the
/// one with the smallest index wins, so results do not depend on timing).
inline void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
  const int workers = static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(worker_count()), n));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::mutex mu;
  std::size_t failed_at = n;
  std::exception_ptr failure;
  auto body = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(mu);
        if (i < failed_at) {
          failed_at = i;
          failure = std::current_exception();
        }
      }
    }
  };
  std::vector<std::thread> pool;
  for (int w = 1; w < workers; ++w) pool.emplace_back(body);
  body();
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

/// max over i of fn(i).
inline double parallel_max(std::size_t n, const std::function<double(std::size_t)>& fn) {
  std::vector<double> out(n, 0.0);
  parallel_for(n, [&](std::size_t i) { out[i] = fn(i); });
  double m = 0.0;
  for (double v : out) m = std::max(m, v);
  return m;
}

}  // namespace germforge
