#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace mpkam {

/// Environment variable selecting the worker count.
inline constexpr const char* kThreadsEnv = "MPKAM_THREADS";

inline int thread_count() {
  if (const char* env = std::getenv(kThreadsEnv)) {
    try {
      const int n = std::stoi(env);
      if (n >= 1) return n;
    } catch (const std::exception&) {
    }
  }
  return static_cast<int>(std::max(1U, std::thread::hardware_concurrency()));
}

/// Calls body(i) for i in [0, count) over contiguous chunks. Results must be
/// written to per-index slots; the first exception thrown is rethrown.
template <typename Body>
void parallel_for(std::size_t count, Body&& body) {
  const auto workers =
      std::min<std::size_t>(static_cast<std::size_t>(thread_count()), std::max<std::size_t>(count, 1));
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::exception_ptr error;
  std::mutex mu;
  std::vector<std::jthread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      const std::size_t begin = count * w / workers;
      const std::size_t end = count * (w + 1) / workers;
      try {
        for (std::size_t i = begin; i < end; ++i) body(i);
      } catch (...) {
        std::lock_guard lock(mu);
        if (!error) error = std::current_exception();
      }
    });
  }
  pool.clear();
  if (error) std::rethrow_exception(error);
}

}  // namespace mpkam
