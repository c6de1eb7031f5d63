#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace acgen::util {

/// Runs fn(i) for i in [0, n) on at most `max_parallel` threads. Results must
/// be written by index so output order never depends on scheduling. The
/// exception thrown for the lowest index is rethrown after all workers join.
template <typename Fn>
void parallel_for(std::size_t n, std::size_t max_parallel, Fn&& fn) {
  if (n == 0) return;
  std::size_t workers = std::clamp<std::size_t>(max_parallel, 1, n);
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::mutex err_mu;
  std::exception_ptr first_error;
  std::size_t first_error_index = n;
  {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) {
          try {
            fn(i);
          } catch (...) {
            std::lock_guard lock(err_mu);
            if (i < first_error_index) {
              first_error_index = i;
              first_error = std::current_exception();
            }
          }
        }
      });
    }
  }
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace acgen::util
