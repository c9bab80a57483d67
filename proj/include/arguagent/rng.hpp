// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <utility>

namespace arguagent {

/// SplitMix64 finalizer. Used to derive independent stream seeds from
/// (seed, index...) tuples so results never depend on execution order.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a) noexcept {
  return mix64(mix64(seed) ^ (a + 0x632BE59BD9B4E019ULL));
}

constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a,
                                    std::uint64_t b) noexcept {
  return derive_seed(derive_seed(seed, a), b);
}

/// Seeded generator with platform-independent draws.
///
/// std::mt19937_64 output is fully specified by the standard, but the
/// std::*_distribution classes and std::shuffle are not, so bounded integers
/// and unit doubles are derived here directly from the engine.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform double in [0, 1) with 53 bits of precision.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform integer in [0, bound). bound must be > 0.
  std::uint64_t below(std::uint64_t bound) {
    // rejection sampling on the top of the range to remove modulo bias
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % bound);
    std::uint64_t x = engine_();
    while (x >= limit) x = engine_();
    return x % bound;
  }

  template <typename T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(below(i));
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace arguagent
