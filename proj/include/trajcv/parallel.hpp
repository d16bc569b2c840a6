#pragma once

#include <algorithm>
#include <exception>
#include <functional>
#include <thread>
#include <vector>

namespace trajcv {

// Runs body(i) for i in [0, n) on up to `threads` workers with a static
// interleaved split. Results must be written by index; the first exception
// (lowest worker id) is rethrown after all workers join.
inline void parallel_for(int n, int threads, const std::function<void(int)>& body) {
  const int w = std::max(1, std::min(threads, n));
  if (w == 1) {
    for (int i = 0; i < n; ++i) body(i);
    return;
  }
  std::vector<std::exception_ptr> errors(w);
  std::vector<std::thread> pool;
  for (int k = 0; k < w; ++k)
    pool.emplace_back([&, k] {
      try {
        for (int i = k; i < n; i += w) body(i);
      } catch (...) {
        errors[k] = std::current_exception();
      }
    });
  for (auto& th : pool) th.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace trajcv
