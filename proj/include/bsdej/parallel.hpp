#pragma once

#include <algorithm>
#include <cstddef>
#include <thread>
#include <vector>

namespace bsdej {

/// Splits [0, n) into contiguous chunks and runs body(begin, end) on each.
/// Chunk boundaries depend only on (n, threads); bodies must write disjoint
/// output ranges so results do not depend on scheduling.
template <typename Body>
void parallel_for(std::size_t n, int threads, Body&& body) {
  const std::size_t workers = std::min<std::size_t>(std::max(threads, 1), std::max<std::size_t>(n, 1));
  if (workers <= 1) {
    body(std::size_t{0}, n);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  const std::size_t chunk = (n + workers - 1) / workers;
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t begin = w * chunk;
    const std::size_t end = std::min(n, begin + chunk);
    if (begin >= end) break;
    pool.emplace_back([&body, begin, end] { body(begin, end); });
  }
  for (auto& t : pool) t.join();
}

}  // namespace bsdej
