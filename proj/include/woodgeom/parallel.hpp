#pragma once

#include <algorithm>
#include <cstdlib>
#include <thread>
#include <vector>

namespace woodgeom {

/// Runs fn(i) for i in [0, n) split into contiguous blocks over `threads`
/// workers. Each index is visited exactly once, so results written per index
/// are independent of the thread count.
template <class Fn>
void parallel_for(int n, int threads, Fn&& fn) {
  threads = std::clamp(threads, 1, std::max(1, n));
  if (threads == 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::jthread> pool;
  pool.reserve(static_cast<std::size_t>(threads));
  for (int t = 0; t < threads; ++t) {
    const int begin = static_cast<int>(static_cast<long long>(n) * t / threads);
    const int end = static_cast<int>(static_cast<long long>(n) * (t + 1) / threads);
    pool.emplace_back([begin, end, &fn] {
      for (int i = begin; i < end; ++i) fn(i);
    });
  }
}

}  // namespace woodgeom
