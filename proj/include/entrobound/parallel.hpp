#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace entrobound {

/// Samples per Monte Carlo chunk. Fixed so that results do not depend on
/// the number of workers.
inline constexpr std::uint64_t kChunkSize = 4096;

/// Worker count: ENTROBOUND_THREADS if set and positive, else the hardware
/// concurrency (at least 1).
int worker_count();

/// Runs work(i) for i in [0, n) on up to worker_count() threads and returns
/// the results in index order. The first exception thrown is rethrown.
template <class Result, class Work>
std::vector<Result> map_chunks(std::size_t n, Work&& work) {
  std::vector<Result> out(n);
  const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(worker_count()), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) out[i] = work(i);
    return out;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto run = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        out[i] = work(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
        next.store(n);
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(workers - 1);
  for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(run);
  run();
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
  return out;
}

/// Number of chunks needed for n samples.
inline std::size_t chunk_count(std::uint64_t n) {
  return static_cast<std::size_t>((n + kChunkSize - 1) / kChunkSize);
}

/// Sample range [begin, end) covered by chunk i.
inline std::uint64_t chunk_begin(std::size_t i) { return static_cast<std::uint64_t>(i) * kChunkSize; }
inline std::uint64_t chunk_end(std::size_t i, std::uint64_t n) {
  return std::min<std::uint64_t>(n, chunk_begin(i) + kChunkSize);
}

}  // namespace entrobound
