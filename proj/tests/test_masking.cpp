#include "doctest.h"

#include <algorithm>
#include <set>
#include <stdexcept>
#include <vector>

#include "nptad/masking.hpp"
#include "nptad/rng.hpp"

using nptad::build_mask_bank;
using nptad::Mask;
using nptad::mask_bank_size;

namespace {

// Brute-force oracle: enumerate all 2^d subsets, keep 1 <= popcount <= r,
// sort by (popcount, lexicographic bit vector).
std::vector<std::vector<std::uint8_t>> brute_force_bank(int d, int r) {
  std::vector<std::vector<std::uint8_t>> subsets;
  for (std::uint32_t code = 1; code < (1u << d); ++code) {
    std::vector<std::uint8_t> bits(static_cast<std::size_t>(d), 0);
    int pop = 0;
    for (int j = 0; j < d; ++j) {
      if (code & (1u << j)) {
        bits[static_cast<std::size_t>(j)] = 1;
        ++pop;
      }
    }
    if (pop <= r) subsets.push_back(std::move(bits));
  }
  std::sort(subsets.begin(), subsets.end(),
            [](const std::vector<std::uint8_t>& a, const std::vector<std::uint8_t>& b) {
              int pa = 0, pb = 0;
              for (auto v : a) pa += v;
              for (auto v : b) pb += v;
              if (pa != pb) return pa < pb;
              return a < b;
            });
  return subsets;
}

}  // namespace

TEST_CASE("bank sizes match the closed-form counts") {
  CHECK(mask_bank_size(9, 4) == 255);
  CHECK(mask_bank_size(30, 3) == 4525);
  CHECK(mask_bank_size(6, 2) == 21);
  CHECK(mask_bank_size(33, 2) == 561);
  CHECK(mask_bank_size(16, 2) == 136);
  CHECK(mask_bank_size(6, 4) == 56);
  CHECK(mask_bank_size(8, 4) == 162);
  CHECK(mask_bank_size(9, 3) == 129);
  CHECK(mask_bank_size(1, 1) == 1);
}

TEST_CASE("bank equals the brute-force enumeration for all 1 <= r <= d <= 16") {
  for (int d = 1; d <= 16; ++d) {
    for (int r = 1; r <= d; ++r) {
      const auto bank = build_mask_bank(d, r);
      const auto want = brute_force_bank(d, r);
      REQUIRE(bank.size() == want.size());
      REQUIRE(bank.size() == mask_bank_size(d, r));
      for (std::size_t i = 0; i < want.size(); ++i) CHECK(bank.masks[i].bits == want[i]);
    }
  }
}

TEST_CASE("bank is duplicate-free and ordered by popcount then lexicographically") {
  const auto bank = build_mask_bank(9, 4);
  std::set<std::vector<std::uint8_t>> seen;
  int last_pop = 0;
  std::vector<std::uint8_t> last_bits;
  for (const auto& m : bank.masks) {
    CHECK(seen.insert(m.bits).second);
    const int pop = m.popcount();
    CHECK(pop >= 1);
    CHECK(pop <= 4);
    if (pop == last_pop) CHECK(last_bits < m.bits);
    CHECK(pop >= last_pop);
    last_pop = pop;
    last_bits = m.bits;
  }
}

TEST_CASE("bank construction rejects bad arguments and oversized banks") {
  CHECK_THROWS_AS(build_mask_bank(0, 1), std::invalid_argument);
  CHECK_THROWS_AS(build_mask_bank(5, 0), std::invalid_argument);
  CHECK_THROWS_AS(build_mask_bank(5, 6), std::invalid_argument);
  CHECK_THROWS_AS(build_mask_bank(40, 20), std::length_error);  // ~5e11 masks
  CHECK_THROWS_AS(build_mask_bank(64, 32), std::overflow_error);
  CHECK_THROWS_AS(build_mask_bank(30, 3, 100), std::length_error);
  CHECK_NOTHROW(build_mask_bank(30, 3, 4525));
}

TEST_CASE("train masks are Bernoulli, reproducible, and keep all-zero rows") {
  nptad::Rng rng_a(5, "mask");
  nptad::Rng rng_b(5, "mask");
  const auto m1 = nptad::sample_train_mask(200, 7, 0.15, rng_a);
  const auto m2 = nptad::sample_train_mask(200, 7, 0.15, rng_b);
  CHECK(m1 == m2);
  CHECK(m1.size() == 1400);
  std::size_t ones = 0;
  for (auto b : m1) ones += b;
  // mean 210, sd ~13; a wide band still catches wiring errors
  CHECK(ones > 140);
  CHECK(ones < 290);

  nptad::Rng rng_c(5, "mask");
  const auto m3 = nptad::sample_train_mask(50, 3, 0.0, rng_c);
  CHECK(std::count(m3.begin(), m3.end(), 1) == 0);

  CHECK_THROWS_AS(nptad::sample_train_mask(10, 3, 1.0, rng_c), std::invalid_argument);
  CHECK_THROWS_AS(nptad::sample_train_mask(10, 3, -0.1, rng_c), std::invalid_argument);
}

TEST_CASE("apply_mask zeroes masked payloads and appends indicators") {
  const std::vector<std::vector<double>> enc = {{1.5}, {0.0, 1.0, 0.0}, {-2.0}};
  Mask mask{{1, 0, 1}};
  const auto out = nptad::apply_mask(enc, mask);
  REQUIRE(out.size() == 3);
  CHECK(out[0] == std::vector<double>{0.0, 1.0});
  CHECK(out[1] == std::vector<double>{0.0, 1.0, 0.0, 0.0});
  CHECK(out[2] == std::vector<double>{0.0, 1.0});

  // Re-masking already-zeroed payloads changes nothing (idempotent zeroing).
  std::vector<std::vector<double>> payloads;
  for (const auto& f : out) payloads.emplace_back(f.begin(), f.end() - 1);
  const auto again = nptad::apply_mask(payloads, Mask{{1, 0, 1}});
  for (std::size_t j = 0; j < 3; ++j) {
    const std::vector<double> inner(again[j].begin(), again[j].end() - 1);
    CHECK(inner == payloads[j]);
  }

  CHECK_THROWS_AS(nptad::apply_mask(enc, Mask{{1, 0}}), std::invalid_argument);
}
