#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <functional>
#include <thread>
#include <vector>

namespace mesoclt {

/// 0 means "all hardware threads".
inline int resolve_workers(int requested) {
  if (requested > 0) return requested;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw ? static_cast<int>(hw) : 1;
}

/// Calls body(i) for i in [0, n). Indices are cut into contiguous ranges, one
/// per worker, so what each index computes never depends on the worker count.
/// The first exception thrown by any worker is rethrown after all have joined.
inline void parallel_for(std::size_t n, int num_workers, const std::function<void(std::size_t)>& body) {
  const auto w = static_cast<std::size_t>(std::max(1, std::min<int>(resolve_workers(num_workers),
                                                                    static_cast<int>(std::max<std::size_t>(n, 1)))));
  if (w == 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::vector<std::exception_ptr> errors(w);
  std::vector<std::thread> pool;
  pool.reserve(w);
  for (std::size_t t = 0; t < w; ++t) {
    pool.emplace_back([&, t] {
      try {
        for (std::size_t i = t * n / w; i < (t + 1) * n / w; ++i) body(i);
      } catch (...) {
        errors[t] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace mesoclt
