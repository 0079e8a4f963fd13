#ifndef LCS_RNG_HPP_
#define LCS_RNG_HPP_

#include <cstdint>
#include <random>

namespace lcs {

/// Seeded uniform generator. Draws come from the top 53 bits of the
/// mt19937_64 stream so sequences are identical across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

  double unit() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * unit(); }

  /// Integer in [0, n).
  std::uint64_t index(std::uint64_t n) { return n == 0 ? 0 : engine_() % n; }

  std::uint64_t seed() const { return seed_; }

  /// Independent stream for a named sub-purpose (splitmix64 of seed ^ salt).
  Rng split(std::uint64_t salt) const {
    std::uint64_t x = seed_ + salt * 0x9e3779b97f4a7c15ULL;
    x ^= x >> 30;
    x *= 0xbf58476d1ce4e5b9ULL;
    x ^= x >> 27;
    x *= 0x94d049bb133111ebULL;
    x ^= x >> 31;
    return Rng(x);
  }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

}  // namespace lcs

#endif  // LCS_RNG_HPP_
