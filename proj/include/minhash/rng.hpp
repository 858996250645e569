#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <thread>
#include <vector>

namespace minhash {

inline constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

// splitmix64 finalizer
inline constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Named randomness streams. Every consumer derives its own seed from
// (seed, stream, index), so results never depend on evaluation order or
// thread count.
enum class Stream : std::uint64_t {
  permutation = 1,
  signs = 2,
  shuffle = 3,
  projection = 4,
  noise = 5,
  design = 6,
  coefficients = 7,
  blocks = 8,
  first_hit = 9,
  labels = 10,
  mc = 11,
  aggregate = 12,
  instance = 13,
  correlate = 14,
};

inline constexpr std::uint64_t derive_seed(std::uint64_t seed, Stream stream,
                                           std::uint64_t index) {
  const std::uint64_t z =
      mix64(seed + kGolden * (static_cast<std::uint64_t>(stream) + 1));
  return mix64(z ^ (index + kGolden));
}

// splitmix64 generator. All variates are produced here rather than through
// <random> distributions so that output is bit-identical across platforms.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    state_ += kGolden;
    return mix64(state_);
  }

  // uniform on [0, 1)
  double next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // uniform on {0, ..., n-1}, unbiased (rejection)
  std::uint64_t next_below(std::uint64_t n) {
    const std::uint64_t threshold = (0 - n) % n;
    for (;;) {
      const std::uint64_t r = next_u64();
      if (r >= threshold) return r % n;
    }
  }

  double next_gaussian() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u, v, s;
    do {
      u = 2.0 * next_double() - 1.0;
      v = 2.0 * next_double() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double f = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * f;
    has_spare_ = true;
    return u * f;
  }

  double next_exponential() { return -std::log1p(-next_double()); }

  bool next_bernoulli(double prob) { return next_double() < prob; }

 private:
  std::uint64_t state_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

inline int default_threads() {
  const unsigned hc = std::thread::hardware_concurrency();
  return hc == 0 ? 1 : static_cast<int>(hc > 16 ? 16 : hc);
}

// Runs fn(begin, end) over fixed-size blocks of [0, total) and returns the
// per-block results in block order. Workers pull block indices from a shared
// counter; because blocks are fixed and results are folded in index order by
// the caller, the outcome is identical for any thread count.
template <class Result, class Fn>
std::vector<Result> run_blocks(std::int64_t total, std::int64_t block_size,
                               int threads, Fn fn) {
  const std::int64_t n_blocks =
      total <= 0 ? 0 : (total + block_size - 1) / block_size;
  std::vector<Result> results(static_cast<std::size_t>(n_blocks));
  if (n_blocks == 0) return results;
  if (threads <= 0) threads = default_threads();
  if (threads > n_blocks) threads = static_cast<int>(n_blocks);

  std::atomic<std::int64_t> next{0};
  auto worker = [&] {
    for (;;) {
      const std::int64_t blk = next.fetch_add(1);
      if (blk >= n_blocks) return;
      const std::int64_t begin = blk * block_size;
      const std::int64_t end = std::min(total, begin + block_size);
      results[static_cast<std::size_t>(blk)] = fn(begin, end);
    }
  };
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(threads));
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  return results;
}

}  // namespace minhash
