#include "nptad/masking.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace nptad {

std::uint64_t mask_bank_size(int d, int r) {
  if (r < 1 || d < 1 || r > d)
    throw std::invalid_argument("mask_bank_size: need 1 <= r <= d (got d=" + std::to_string(d) +
                                ", r=" + std::to_string(r) + ")");
  std::uint64_t total = 0;
  std::uint64_t c = 1;  // C(d, 0)
  for (int k = 1; k <= r; ++k) {
    // C(d,k) = C(d,k-1) * (d-k+1) / k, exact at every step
    const std::uint64_t num = static_cast<std::uint64_t>(d - k + 1);
    if (c > UINT64_MAX / num)
      throw std::overflow_error("mask_bank_size: C(d,k) overflows 64 bits");
    c = c * num / static_cast<std::uint64_t>(k);
    if (total > UINT64_MAX - c)
      throw std::overflow_error("mask_bank_size: bank size overflows 64 bits");
    total += c;
  }
  return total;
}

MaskBank build_mask_bank(int d, int r, std::uint64_t limit) {
  const std::uint64_t m = mask_bank_size(d, r);  // validates d, r
  if (m > limit)
    throw std::length_error("build_mask_bank: bank of " + std::to_string(m) +
                            " masks exceeds the limit of " + std::to_string(limit) +
                            "; use a smaller r");
  MaskBank bank;
  bank.d = d;
  bank.r = r;
  bank.masks.reserve(static_cast<std::size_t>(m));
  for (int k = 1; k <= r; ++k) {
    // 0...01...1 is the lexicographically smallest k-subset bit vector;
    // next_permutation walks the rest in lexicographic order.
    std::vector<std::uint8_t> bits(static_cast<std::size_t>(d), 0);
    std::fill(bits.end() - k, bits.end(), std::uint8_t{1});
    do {
      bank.masks.push_back(Mask{bits});
    } while (std::next_permutation(bits.begin(), bits.end()));
  }
  return bank;
}

std::vector<std::uint8_t> sample_train_mask(std::size_t n, int d, double p, Rng& rng) {
  if (d < 1) throw std::invalid_argument("sample_train_mask: d must be positive");
  if (p < 0.0 || p >= 1.0) throw std::invalid_argument("sample_train_mask: p must be in [0,1)");
  std::vector<std::uint8_t> out(n * static_cast<std::size_t>(d));
  for (auto& b : out) b = rng.bernoulli(p) ? 1 : 0;
  return out;
}

std::vector<std::vector<double>> apply_mask(const std::vector<std::vector<double>>& encoded,
                                            const Mask& mask) {
  if (encoded.size() != mask.bits.size())
    throw std::invalid_argument("apply_mask: feature count does not match mask width");
  std::vector<std::vector<double>> out(encoded.size());
  for (std::size_t j = 0; j < encoded.size(); ++j) {
    const bool hidden = mask.bits[j] != 0;
    std::vector<double>& f = out[j];
    f.assign(encoded[j].size() + 1, 0.0);
    if (!hidden)
      std::copy(encoded[j].begin(), encoded[j].end(), f.begin());
    f.back() = hidden ? 1.0 : 0.0;
  }
  return out;
}

}  // namespace nptad
