#pragma once

// Deterministic data-parallel reduction.
//
// Work is cut into chunks whose boundaries depend only on the problem size,
// never on the thread count; chunk results are merged in a fixed pairwise
// order, so sums are bit-identical for any number of workers.

#include <algorithm>
#include <atomic>
#include <complex>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace sheafcx {

/// Pairwise (cascade) summation of a stream: O(log n) error growth with O(log n) state.
template <class T>
class PairwiseAccumulator {
 public:
  void add(const T& v) {
    T carry = v;
    std::uint64_t n = count_++;
    std::size_t level = 0;
    while (n & 1) {
      carry = levels_[level] + carry;
      n >>= 1;
      ++level;
    }
    if (level == levels_.size()) levels_.push_back(carry);
    else levels_[level] = carry;
  }

  T total() const {
    T acc{};
    bool first = true;
    std::uint64_t n = count_;
    for (std::size_t level = 0; level < levels_.size(); ++level, n >>= 1) {
      if (!(n & 1)) continue;
      acc = first ? levels_[level] : levels_[level] + acc;
      first = false;
    }
    return acc;
  }

  std::uint64_t count() const { return count_; }

 private:
  std::vector<T> levels_;
  std::uint64_t count_ = 0;
};

/// Pairwise sum of a vector in a fixed tree order.
template <class T>
T pairwise_merge(std::vector<T> v) {
  if (v.empty()) return T{};
  while (v.size() > 1) {
    std::vector<T> next((v.size() + 1) / 2);
    for (std::size_t i = 0; i + 1 < v.size(); i += 2) next[i / 2] = v[i] + v[i + 1];
    if (v.size() % 2) next.back() = v.back();
    v = std::move(next);
  }
  return v.front();
}

inline unsigned default_threads() {
  if (const char* env = std::getenv("SHEAFCX_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v > 0) return static_cast<unsigned>(v);
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

/// Run chunk(begin, end) -> T over [0, n) in chunks of `chunk_size` and merge pairwise.
template <class T, class ChunkFn>
T parallel_reduce(std::uint64_t n, std::uint64_t chunk_size, unsigned threads, ChunkFn chunk) {
  if (n == 0) return T{};
  chunk_size = std::max<std::uint64_t>(chunk_size, 1);
  const std::uint64_t nchunks = (n + chunk_size - 1) / chunk_size;
  std::vector<T> results(nchunks);
  std::atomic<std::uint64_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;

  auto worker = [&] {
    try {
      for (std::uint64_t c = next++; c < nchunks; c = next++) {
        const std::uint64_t b = c * chunk_size;
        results[c] = chunk(b, std::min(n, b + chunk_size));
      }
    } catch (...) {
      std::lock_guard lock(failure_mutex);
      if (!failure) failure = std::current_exception();
      next = nchunks;
    }
  };

  const unsigned nthreads = static_cast<unsigned>(std::min<std::uint64_t>(std::max(threads, 1u), nchunks));
  if (nthreads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(nthreads - 1);
    for (unsigned t = 1; t < nthreads; ++t) pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);
  return pairwise_merge(std::move(results));
}

/// Apply fn(i) for i in [0, n) across workers; fn must write disjoint outputs.
template <class Fn>
void parallel_for(std::uint64_t n, std::uint64_t chunk_size, unsigned threads, Fn fn) {
  parallel_reduce<int>(n, chunk_size, threads, [&](std::uint64_t b, std::uint64_t e) {
    for (std::uint64_t i = b; i < e; ++i) fn(i);
    return 0;
  });
}

}  // namespace sheafcx
