#pragma once

#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace stvar::detail {

// Static block partition over [0, n); results must be written to
// pre-allocated per-index slots so the outcome is independent of worker
// count and scheduling.
inline void parallel_for(int n, int workers, const std::function<void(int)>& body) {
  if (workers <= 1 || n <= 1) {
    for (int i = 0; i < n; ++i) body(i);
    return;
  }
  const int count = std::min(workers, n);
  std::vector<std::thread> pool;
  pool.reserve(count);
  std::exception_ptr first_error;
  std::mutex error_mutex;
  for (int w = 0; w < count; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (int i = w; i < n; i += count) body(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace stvar::detail
