#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

namespace fmhom {

/// Trials per work chunk. Chunk boundaries never depend on the thread count.
inline constexpr std::uint64_t kTrialChunk = 1u << 16;

/// Worker threads for Monte Carlo loops: FMHOM_THREADS when set to a
/// positive integer, otherwise the hardware concurrency.
inline unsigned worker_count() {
  if (const char* env = std::getenv("FMHOM_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && v > 0) return static_cast<unsigned>(std::min<long>(v, 1024));
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

/// Runs body(begin, end) over [0, total) in fixed chunks and merges the
/// per-chunk results in chunk order. Accumulator must be default
/// constructible and support `a += b`; with integer counters the result is
/// independent of the number of threads.
template <class Accumulator, class Body>
Accumulator parallel_accumulate(std::uint64_t total, Body body, unsigned threads = 0) {
  if (threads == 0) threads = worker_count();
  const std::uint64_t chunks = (total + kTrialChunk - 1) / kTrialChunk;
  std::vector<Accumulator> partial(chunks);
  auto run_chunk = [&](std::uint64_t c) {
    const std::uint64_t begin = c * kTrialChunk;
    partial[c] = body(begin, std::min(total, begin + kTrialChunk));
  };

  const auto n_workers = static_cast<std::uint64_t>(std::min<std::uint64_t>(threads, chunks));
  if (n_workers <= 1) {
    for (std::uint64_t c = 0; c < chunks; ++c) run_chunk(c);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(n_workers);
    for (std::uint64_t w = 0; w < n_workers; ++w) {
      pool.emplace_back([&, w] {
        for (std::uint64_t c = w; c < chunks; c += n_workers) run_chunk(c);
      });
    }
    for (auto& t : pool) t.join();
  }

  Accumulator result{};
  for (const auto& p : partial) result += p;
  return result;
}

}  // namespace fmhom
