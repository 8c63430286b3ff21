#ifndef GLASSLAB_PARALLEL_HPP
#define GLASSLAB_PARALLEL_HPP

#include <atomic>
#include <cstdint>
#include <thread>
#include <vector>

#include "glasslab/rng.hpp"

namespace glasslab {

inline int resolve_workers(int requested) {
  if (requested > 0) return requested;
  unsigned hc = std::thread::hardware_concurrency();
  return hc == 0 ? 1 : static_cast<int>(hc);
}

// Splits `total` items into fixed chunks, each processed on a stream keyed by
// its chunk index, and merges the per-chunk accumulators in chunk order. The
// result is identical for any worker count.
template <typename Acc, typename PerChunk>
Acc chunked_reduce(std::uint64_t total, std::uint64_t chunk_size, int workers,
                   const Rng& base, PerChunk per_chunk) {
  if (chunk_size == 0) chunk_size = 1;
  const std::uint64_t chunks = (total + chunk_size - 1) / chunk_size;
  std::vector<Acc> slots(static_cast<std::size_t>(chunks));
  std::atomic<std::uint64_t> next{0};
  auto work = [&]() {
    for (;;) {
      std::uint64_t c = next.fetch_add(1);
      if (c >= chunks) break;
      std::uint64_t begin = c * chunk_size;
      std::uint64_t count = std::min(chunk_size, total - begin);
      Rng stream = base.substream(c);
      per_chunk(stream, c, count, slots[static_cast<std::size_t>(c)]);
    }
  };
  int nw = resolve_workers(workers);
  if (nw <= 1 || chunks <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(nw));
    for (int t = 0; t < nw; ++t) pool.emplace_back(work);
    for (auto& th : pool) th.join();
  }
  Acc out;
  for (auto& slot : slots) out.merge(slot);
  return out;
}

}  // namespace glasslab

#endif
