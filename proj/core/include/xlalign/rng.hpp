#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>

namespace xlalign {

/// xorshift64* generator with a fixed, documented state transition so that
/// seeded traces are reproducible across platforms and implementations.
///
/// Seeding: state = splitmix64(seed); a zero result is replaced by
/// 0x9E3779B97F4A7C15.
/// Transition: x ^= x >> 12; x ^= x << 25; x ^= x >> 27;
/// Output: x * 0x2545F4914F6CDD1D.
/// uniform(): top 53 bits of the output scaled by 2^-53, in [0, 1).
/// below(n): high 64 bits of the 128-bit product output * n.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0);

  std::uint64_t next();
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  std::size_t below(std::size_t n);
  // Box-Muller on two uniform() draws; second variate is discarded.
  double normal();

  template <typename T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::size_t j = below(i);
      std::swap(items[i - 1], items[j]);
    }
  }

  std::uint64_t state() const { return state_; }

  // Derive an independent stream for a sub-task (e.g. one curve cell).
  Rng fork(std::uint64_t salt);

 private:
  std::uint64_t state_;
};

std::uint64_t splitmix64(std::uint64_t x);

}  // namespace xlalign
