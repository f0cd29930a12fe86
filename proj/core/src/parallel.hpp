#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <thread>
#include <vector>

namespace sticky::detail {

inline unsigned resolve_threads(unsigned requested, std::size_t jobs) {
  unsigned n = requested == 0 ? std::max(1u, std::thread::hardware_concurrency()) : requested;
  return static_cast<unsigned>(std::min<std::size_t>(n, std::max<std::size_t>(jobs, 1)));
}

/// Runs fn(batch, tally) for every batch index and sums the per-worker
/// tallies. Tally must default-construct to zero and support +=, so the
/// merged result does not depend on how batches land on workers.
template <class Tally, class Fn>
Tally run_batches(std::size_t batches, unsigned threads, Fn&& fn) {
  const unsigned workers = resolve_threads(threads, batches);
  if (workers <= 1) {
    Tally total{};
    for (std::size_t b = 0; b < batches; ++b) fn(b, total);
    return total;
  }
  std::vector<Tally> partial(workers);
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t b = w; b < batches; b += workers) fn(b, partial[w]);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  Tally total{};
  for (auto& p : partial) total += p;
  return total;
}

/// Mixes extra words into a master seed for independent named streams.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0,
                              std::uint64_t c = 0) {
  auto step = [](std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
  };
  return step(step(step(step(seed) ^ a) ^ b) ^ c);
}

}  // namespace sticky::detail
