// parallel.hpp
//
// Deterministic chunked Monte Carlo execution. Replications are cut into
// fixed-size chunks; chunk c draws from root.split(c) and writes only its
// own result slot, so results do not depend on the number of workers.
// Callers reduce the returned per-chunk results in ascending order.

#ifndef CONDPRED_PARALLEL_HPP
#define CONDPRED_PARALLEL_HPP

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

#include "condpred/random.hpp"

namespace condpred {

inline constexpr std::size_t kChunkSize = 4096;

/// Worker pool handle owned by the experiment runner. Library operations
/// accept one and never start threads on their own.
class Executor {
 public:
  explicit Executor(unsigned workers = 1) : workers_(std::max(1u, workers)) {}

  unsigned workers() const { return workers_; }

  /// Calls f(i) exactly once for each i in [0, count). If several calls
  /// throw, the exception from the smallest index is rethrown.
  template <class F>
  void for_each_index(std::size_t count, const F& f) const {
    if (workers_ == 1 || count < 2) {
      for (std::size_t i = 0; i < count; ++i) f(i);
      return;
    }
    std::atomic<std::size_t> next{0};
    std::mutex error_mutex;
    std::size_t error_index = count;
    std::exception_ptr error;
    auto work = [&] {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= count) return;
        try {
          f(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (i < error_index) {
            error_index = i;
            error = std::current_exception();
          }
        }
      }
    };
    const unsigned n_threads = static_cast<unsigned>(std::min<std::size_t>(workers_, count));
    std::vector<std::thread> threads;
    threads.reserve(n_threads);
    for (unsigned t = 0; t < n_threads; ++t) threads.emplace_back(work);
    for (auto& t : threads) t.join();
    if (error) std::rethrow_exception(error);
  }

 private:
  unsigned workers_;
};

inline std::size_t chunk_count(std::uint64_t n_samples) {
  return static_cast<std::size_t>((n_samples + kChunkSize - 1) / kChunkSize);
}

/// Runs f(rng, begin, count) for every chunk and returns results indexed by
/// chunk. rng is root.split(chunk).
template <class Result, class F>
std::vector<Result> map_chunks(std::uint64_t n_samples, const RandomState& root, const Executor& exec,
                               const F& f) {
  const std::size_t chunks = chunk_count(n_samples);
  std::vector<Result> results(chunks);
  exec.for_each_index(chunks, [&](std::size_t c) {
    RandomState rng = root.split(c);
    const std::size_t begin = c * kChunkSize;
    const std::size_t count = static_cast<std::size_t>(std::min<std::uint64_t>(kChunkSize, n_samples - begin));
    results[c] = f(rng, begin, count);
  });
  return results;
}

/// Fills rows [0, n) of a sample by chunk: f(rng, row_index) per row.
template <class F>
void fill_rows(std::uint64_t n_samples, const RandomState& root, const Executor& exec, const F& f) {
  const std::size_t chunks = chunk_count(n_samples);
  exec.for_each_index(chunks, [&](std::size_t c) {
    RandomState rng = root.split(c);
    const std::size_t begin = c * kChunkSize;
    const std::size_t end = static_cast<std::size_t>(std::min<std::uint64_t>(begin + kChunkSize, n_samples));
    for (std::size_t i = begin; i < end; ++i) f(rng, i);
  });
}

/// Merges per-chunk accumulators in ascending chunk order.
template <class Acc>
Acc merge_in_order(const std::vector<Acc>& parts) {
  Acc total{};
  for (const auto& p : parts) total.merge(p);
  return total;
}

}  // namespace condpred

#endif  // CONDPRED_PARALLEL_HPP
