#pragma once

#include <algorithm>
#include <cstddef>
#include <thread>
#include <vector>

namespace cdp {

/// Upper bound on worker threads used by the data-parallel loops. Zero means
/// "use the hardware concurrency".
void set_max_threads(unsigned n);
unsigned max_threads();

/// Runs body(begin, end) over disjoint contiguous chunks of [0, n). Chunks
/// write disjoint outputs, so results do not depend on the thread count.
template <class Body>
void parallel_for(std::size_t n, Body&& body, std::size_t min_chunk = 256) {
  const unsigned hw = max_threads();
  const std::size_t workers = std::min<std::size_t>(hw, (n + min_chunk - 1) / std::max<std::size_t>(min_chunk, 1));
  if (workers <= 1) {
    body(std::size_t{0}, n);
    return;
  }
  std::vector<std::jthread> pool;
  pool.reserve(workers - 1);
  const std::size_t chunk = (n + workers - 1) / workers;
  for (std::size_t w = 1; w < workers; ++w) {
    const std::size_t b = w * chunk, e = std::min(n, b + chunk);
    if (b < e) pool.emplace_back([&body, b, e] { body(b, e); });
  }
  body(std::size_t{0}, std::min(n, chunk));
}

}  // namespace cdp
