#include "xlalign/rng.hpp"

#include <cmath>
#include <numbers>

namespace xlalign {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

Rng::Rng(std::uint64_t seed) : state_(splitmix64(seed)) {
  if (state_ == 0) state_ = 0x9E3779B97F4A7C15ULL;
}

std::uint64_t Rng::next() {
  state_ ^= state_ >> 12;
  state_ ^= state_ << 25;
  state_ ^= state_ >> 27;
  return state_ * 0x2545F4914F6CDD1DULL;
}

double Rng::uniform() {
  return static_cast<double>(next() >> 11) * 0x1.0p-53;
}

std::size_t Rng::below(std::size_t n) {
  if (n == 0) return 0;
  __extension__ using u128 = unsigned __int128;
  const u128 product = static_cast<u128>(next()) * n;
  return static_cast<std::size_t>(product >> 64);
}

double Rng::normal() {
  double u1 = uniform();
  double u2 = uniform();
  // uniform() can return 0; shift into (0, 1].
  u1 = 1.0 - u1;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

Rng Rng::fork(std::uint64_t salt) {
  return Rng(next() ^ splitmix64(salt));
}

}  // namespace xlalign
