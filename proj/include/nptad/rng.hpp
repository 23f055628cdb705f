#pragma once

#include <cstdint>
#include <string_view>

namespace nptad {

// Deterministic counter-based generator (splitmix64).  Every stochastic
// operation takes one of these explicitly; streams are derived from a root
// seed plus a purpose label so independent consumers never share a sequence.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}
  Rng(std::uint64_t seed, std::string_view stream);

  std::uint64_t next_u64();
  // [0, 1) with 53 random bits
  double uniform();
  // standard normal, Box-Muller (pairs cached)
  double normal();
  bool bernoulli(double p) { return uniform() < p; }
  // unbiased integer in [0, bound)
  std::uint64_t below(std::uint64_t bound);

  // Fisher-Yates over [first, last)
  template <typename It>
  void shuffle(It first, It last) {
    const auto n = static_cast<std::uint64_t>(last - first);
    for (std::uint64_t i = n; i > 1; --i) {
      const std::uint64_t j = below(i);
      std::swap(first[i - 1], first[j]);
    }
  }

 private:
  std::uint64_t state_;
  bool has_cached_ = false;
  double cached_ = 0.0;
};

}  // namespace nptad
