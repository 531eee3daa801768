#pragma once
// Deterministic fan-out. Work is split into fixed 4096-index blocks and
// per-block results are folded in block order, so any thread count produces
// the same bytes.

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <thread>
#include <vector>

#include "ergolab/util.hpp"

namespace ergolab {

inline constexpr std::size_t kBlockWidth = 4096;

inline std::size_t block_count(std::size_t count) {
  return (count + kBlockWidth - 1) / kBlockWidth;
}

// body(block, lo, hi) must touch only state owned by its block
template <class Body>
void run_blocks(std::size_t count, unsigned threads, Body&& body) {
  if (count == 0) return;
  const std::size_t nblocks = block_count(count);
  auto span = [&](std::size_t b) {
    body(b, b * kBlockWidth, std::min(count, (b + 1) * kBlockWidth));
  };
  const unsigned want = std::min<std::size_t>(std::max(1u, threads), nblocks);
  if (want == 1) {
    for (std::size_t b = 0; b < nblocks; ++b) span(b);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  pool.reserve(want);
  for (unsigned t = 0; t < want; ++t)
    pool.emplace_back([&] {
      for (std::size_t b; (b = next.fetch_add(1)) < nblocks;) span(b);
    });
  for (auto& th : pool) th.join();
}

template <class Fn>
double block_sum(std::size_t count, unsigned threads, Fn&& fn) {
  std::vector<double> part(block_count(count), 0.0);
  run_blocks(count, threads, [&](std::size_t b, std::size_t lo, std::size_t hi) {
    KahanSum k;
    for (std::size_t i = lo; i < hi; ++i) k.add(fn(i));
    part[b] = k.value();
  });
  KahanSum k;
  for (double v : part) k.add(v);
  return k.value();
}

}  // namespace ergolab
