#pragma once

#include <cstddef>
#include <thread>
#include <vector>

namespace spqn::detail {

inline std::size_t chunk_count(std::size_t n, int threads) {
  if (n == 0) return 0;
  if (threads <= 1) return 1;
  std::size_t t = static_cast<std::size_t>(threads);
  if (t > n) t = n;
  std::size_t chunk = (n + t - 1) / t;
  return (n + chunk - 1) / chunk;
}

/// Runs fn(chunk_index, begin, end) over contiguous index chunks; returns the
/// chunk count. threads <= 1 runs inline as one chunk. Chunk boundaries
/// depend only on (n, threads), so per-index writes are deterministic and a
/// reduction that combines per-chunk results in chunk order is deterministic
/// for a fixed thread count (and bit-identical to serial when threads <= 1).
template <typename Fn>
std::size_t parallel_chunks_indexed(std::size_t n, int threads, Fn&& fn) {
  if (n == 0) return 0;
  if (threads <= 1) {
    fn(std::size_t{0}, std::size_t{0}, n);
    return 1;
  }
  std::size_t t = static_cast<std::size_t>(threads);
  if (t > n) t = n;
  std::size_t chunk = (n + t - 1) / t;
  std::vector<std::thread> pool;
  pool.reserve(t);
  std::size_t count = 0;
  for (std::size_t k = 0;; ++k) {
    std::size_t b = k * chunk;
    if (b >= n) break;
    std::size_t e = b + chunk < n ? b + chunk : n;
    pool.emplace_back([&fn, k, b, e] { fn(k, b, e); });
    ++count;
  }
  for (auto& th : pool) th.join();
  return count;
}

/// Runs fn(begin, end) over contiguous index chunks. threads <= 1 runs
/// inline.
template <typename Fn>
void parallel_chunks(std::size_t n, int threads, Fn&& fn) {
  parallel_chunks_indexed(n, threads,
                          [&fn](std::size_t, std::size_t b, std::size_t e) { fn(b, e); });
}

}  // namespace spqn::detail
