#pragma once

#include <algorithm>
#include <exception>
#include <thread>
#include <vector>

namespace hpfa {

// Runs body(i) for i in [0, n) over contiguous index ranges.  Results must
// not depend on the partitioning; callers achieve that by drawing from
// per-index substreams.  The first exception thrown by any worker is
// rethrown after all workers join.
template <typename F>
void parallel_for(int n, int threads, F&& body) {
  threads = std::max(1, std::min(threads, n));
  if (threads <= 1) {
    for (int i = 0; i < n; ++i) body(i);
    return;
  }
  std::vector<std::thread> workers;
  std::vector<std::exception_ptr> errors(threads);
  int chunk = (n + threads - 1) / threads;
  for (int w = 0; w < threads; ++w) {
    int begin = w * chunk;
    int end = std::min(n, begin + chunk);
    workers.emplace_back([&, w, begin, end] {
      try {
        for (int i = begin; i < end; ++i) body(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : workers) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace hpfa
