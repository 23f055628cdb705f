#pragma once

#include <cstdint>
#include <vector>

#include "nptad/rng.hpp"

namespace nptad {

// One feature subset to hide: bits[j] == 1 means feature j is masked.
struct Mask {
  std::vector<std::uint8_t> bits;
  int popcount() const {
    int c = 0;
    for (auto b : bits) c += b;
    return c;
  }
};

// Deterministic enumeration of every non-empty feature subset of size <= r,
// ordered by ascending popcount and lexicographically within a popcount.
struct MaskBank {
  int d = 0;
  int r = 0;
  std::vector<Mask> masks;
  std::size_t size() const { return masks.size(); }
};

// Number of masks the bank would hold: sum_{k=1..r} C(d, k).  Throws on
// 64-bit overflow.
std::uint64_t mask_bank_size(int d, int r);

// Throws std::invalid_argument unless 1 <= r <= d, and std::length_error when
// the bank would exceed `limit` masks (the message suggests lowering r).
MaskBank build_mask_bank(int d, int r, std::uint64_t limit = 10'000'000);

// Row-major n x d Bernoulli(p) indicator matrix; entry 1 = masked.  Rows may
// come out all-zero (they simply contribute no loss downstream).
std::vector<std::uint8_t> sample_train_mask(std::size_t n, int d, double p, Rng& rng);

// Masks one sample's encoded features: payload of masked features is zeroed
// and every feature gains a trailing mask indicator (so width_j -> width_j+1).
// Masking an already-zeroed payload is a no-op, making the zeroing idempotent.
std::vector<std::vector<double>> apply_mask(const std::vector<std::vector<double>>& encoded,
                                            const Mask& mask);

}  // namespace nptad
