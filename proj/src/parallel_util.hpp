#pragma once

#include <cstddef>
#include <functional>
#include <thread>
#include <vector>

namespace ctpe::detail {

// Splits [0, total) into contiguous chunks, runs `work(chunk, begin, end)`
// on each from a small thread pool, then runs `merge(chunk)` sequentially in
// chunk order. Chunk boundaries depend only on `total` and the hardware
// thread count, and merging is ordered, so results are reproducible for a
// fixed machine; they may differ from the single-chunk sum at rounding
// level because the accumulation order changes.
inline void chunked_reduce(std::size_t total,
                           const std::function<void(int, std::size_t, std::size_t)>& work,
                           const std::function<void(int)>& merge) {
  unsigned hw = std::thread::hardware_concurrency();
  if (hw == 0) hw = 1;
  const std::size_t n_chunks = std::min<std::size_t>(hw, total == 0 ? 1 : total);
  if (n_chunks <= 1) {
    work(0, 0, total);
    merge(0);
    return;
  }
  std::vector<std::thread> threads;
  threads.reserve(n_chunks);
  const std::size_t per = total / n_chunks;
  const std::size_t extra = total % n_chunks;
  std::size_t begin = 0;
  for (std::size_t c = 0; c < n_chunks; ++c) {
    const std::size_t len = per + (c < extra ? 1 : 0);
    threads.emplace_back(work, static_cast<int>(c), begin, begin + len);
    begin += len;
  }
  for (auto& t : threads) t.join();
  for (std::size_t c = 0; c < n_chunks; ++c) merge(static_cast<int>(c));
}

}  // namespace ctpe::detail
