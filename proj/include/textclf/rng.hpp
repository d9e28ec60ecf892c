#pragma once
// Seeded random streams with implementation-independent draws.
//
// Every stochastic choice in the project (weight init, shuffling, dropout,
// corpus generation) flows through one of these streams, so a fixed seed pins
// the whole run. std:: distributions are avoided on purpose: their output is
// implementation defined, ours is not.

#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

namespace textclf {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : seed_(seed), eng_(seed) {}

  std::uint64_t seed() const { return seed_; }

  /// Uniform double in [0, 1), 53-bit resolution.
  double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n). Rejection sampling keeps it unbiased.
  std::uint64_t below(std::uint64_t n) {
    if (n == 0) throw std::invalid_argument("RngStream::below: n must be positive");
    const std::uint64_t threshold = (0 - n) % n;  // 2^64 mod n
    std::uint64_t x = eng_();
    while (x < threshold) x = eng_();
    return x % n;
  }

  /// Fisher-Yates permutation driven by below().
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[static_cast<std::size_t>(below(i))]);
    }
  }

  template <typename S>
  void fill_uniform(std::span<S> out, double lo, double hi) {
    for (auto& x : out) x = static_cast<S>(uniform(lo, hi));
  }

  /// Child stream that is independent of the draws made on this one.
  RngStream derive(std::uint64_t salt) const {
    return RngStream(splitmix64(seed_ ^ splitmix64(salt)));
  }

 private:
  std::uint64_t seed_;
  std::mt19937_64 eng_;
};

}  // namespace textclf
