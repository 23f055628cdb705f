#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "doctest.h"
#include "nptad/baselines.hpp"
#include "nptad/data.hpp"
#include "nptad/masking.hpp"
#include "nptad/rng.hpp"

using namespace nptad;

namespace {

TabularDataset numeric_table(const std::vector<std::vector<double>>& rows,
                             std::vector<std::uint8_t> labels = {}) {
  TabularDataset data;
  data.source = "inline";
  const std::size_t d = rows.empty() ? 0 : rows[0].size();
  for (std::size_t j = 0; j < d; ++j) {
    Column col{"f" + std::to_string(j), false, {}, {}};
    for (const auto& row : rows) col.num.push_back(row[j]);
    data.features.push_back(std::move(col));
  }
  data.labels = labels.empty() ? std::vector<std::uint8_t>(rows.size(), 0) : std::move(labels);
  data.row_ids.resize(rows.size());
  std::iota(data.row_ids.begin(), data.row_ids.end(), 0);
  return data;
}

EncodedMatrix raw_matrix(const std::vector<std::vector<double>>& rows) {
  // identity encoding for direct knn_impute tests: one numeric dim per feature
  EncodedMatrix m;
  m.n = rows.size();
  m.width = rows.empty() ? 0 : rows[0].size();
  m.offsets.resize(m.width + 1);
  std::iota(m.offsets.begin(), m.offsets.end(), 0);
  for (const auto& row : rows) m.values.insert(m.values.end(), row.begin(), row.end());
  return m;
}

// Straightforward re-statement of the weighted imputation rule for the
// randomized comparison: full sort, then explicit weight normalization.
std::vector<double> impute_oracle(const std::vector<std::vector<double>>& bank,
                                  const std::vector<double>& query,
                                  const std::vector<std::uint8_t>& missing, int k) {
  struct Entry {
    double dist;
    std::size_t idx;
  };
  std::vector<Entry> entries;
  for (std::size_t i = 0; i < bank.size(); ++i) {
    double d2 = 0.0;
    for (std::size_t u = 0; u < query.size(); ++u)
      if (!missing[u]) d2 += (bank[i][u] - query[u]) * (bank[i][u] - query[u]);
    entries.push_back({std::sqrt(d2), i});
  }
  std::sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
    return a.dist != b.dist ? a.dist < b.dist : a.idx < b.idx;
  });
  std::vector<double> out = query;
  if (entries[0].dist == 0.0) {
    for (std::size_t u = 0; u < query.size(); ++u)
      if (missing[u]) out[u] = bank[entries[0].idx][u];
    return out;
  }
  double wsum = 0.0;
  for (int j = 0; j < k; ++j) wsum += 1.0 / entries[static_cast<std::size_t>(j)].dist;
  for (std::size_t u = 0; u < query.size(); ++u) {
    if (!missing[u]) continue;
    double acc = 0.0;
    for (int j = 0; j < k; ++j)
      acc += bank[entries[static_cast<std::size_t>(j)].idx][u] /
             entries[static_cast<std::size_t>(j)].dist;
    out[u] = acc / wsum;
  }
  return out;
}

}  // namespace

TEST_CASE("encode_plain lays out z-scores and one-hots contiguously") {
  TabularDataset data;
  data.source = "mixed";
  data.features = {Column{"x", false, {1.0, 3.0}, {}},
                   Column{"c", true, {}, {"b", "a"}},
                   Column{"y", false, {10.0, 30.0}, {}}};
  data.labels = {0, 0};
  data.row_ids = {0, 1};
  const FeatureSchema schema = FeatureSchema::fit(data);
  const EncodedMatrix m = encode_plain(data, schema);

  CHECK(m.n == 2);
  CHECK(m.width == 4);  // 1 + 2 + 1
  CHECK(m.offsets == std::vector<std::size_t>{0, 1, 3, 4});
  // x: mean 2, population std 1
  CHECK(m.values[0] == doctest::Approx(-1.0));
  // categories sorted: "a" first; row 0 holds "b"
  CHECK(m.values[1] == 0.0);
  CHECK(m.values[2] == 1.0);
  CHECK(m.values[3] == doctest::Approx(-1.0));  // y: mean 20, std 10
  CHECK(m.row(1)[1] == 1.0);                    // row 1 holds "a"

  TabularDataset renamed = data;
  renamed.features[0].name = "z";
  CHECK_THROWS_AS(encode_plain(renamed, schema), schema_error);
}

TEST_CASE("knn_impute hand cases") {
  SUBCASE("weighted average at distances 1 and 3") {
    // observed dim 0, missing dim 1; neighbor values 2 and 4
    const EncodedMatrix bank = raw_matrix({{1.0, 2.0}, {3.0, 4.0}, {100.0, 99.0}});
    const std::vector<double> query{0.0, 0.0};
    const std::vector<std::uint8_t> missing{0, 1};
    const auto out = knn_impute(bank, query, missing, 2);
    // (1*2 + 1/3*4) / (1 + 1/3) = 2.5
    CHECK(out[0] == 0.0);  // observed dims pass through
    CHECK(out[1] == doctest::Approx(2.5).epsilon(1e-15));
  }
  SUBCASE("exact duplicate short-circuits to the duplicate's values") {
    const EncodedMatrix bank = raw_matrix({{5.0, 1.0}, {5.0, 9.0}, {6.0, 2.0}});
    const std::vector<double> query{5.0, 0.0};
    const std::vector<std::uint8_t> missing{0, 1};
    const auto out = knn_impute(bank, query, missing, 2);
    CHECK(out[1] == 1.0);  // smallest-index zero-distance row wins
  }
  SUBCASE("equal distances reduce to the plain mean") {
    const EncodedMatrix bank = raw_matrix({{1.0, 2.0}, {-1.0, 4.0}, {1.0, 9.0}, {-1.0, 1.0}});
    const std::vector<double> query{0.0, 0.0};
    const std::vector<std::uint8_t> missing{0, 1};
    const auto out = knn_impute(bank, query, missing, 4);
    CHECK(out[1] == doctest::Approx((2.0 + 4.0 + 9.0 + 1.0) / 4.0).epsilon(1e-15));
  }
  SUBCASE("all dims missing: vacuous distances pick the first row") {
    const EncodedMatrix bank = raw_matrix({{7.0, 8.0}, {1.0, 2.0}});
    const std::vector<double> query{0.0, 0.0};
    const std::vector<std::uint8_t> missing{1, 1};
    const auto out = knn_impute(bank, query, missing, 1);
    CHECK(out == std::vector<double>{7.0, 8.0});
  }
  SUBCASE("contract errors") {
    const EncodedMatrix bank = raw_matrix({{1.0, 2.0}, {3.0, 4.0}});
    const std::vector<double> query{0.0, 0.0};
    const std::vector<std::uint8_t> missing{0, 1};
    CHECK_THROWS_AS(knn_impute(bank, query, missing, 3), std::invalid_argument);
    CHECK_THROWS_AS(knn_impute(bank, query, missing, 0), std::invalid_argument);
    const std::vector<double> short_query{0.0};
    CHECK_THROWS_AS(knn_impute(bank, short_query, missing, 1), std::invalid_argument);
  }
}

TEST_CASE("knn_impute matches the straightforward oracle on random instances") {
  Rng rng(404, "impute");
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 5 + rng.below(8);
    const std::size_t w = 2 + rng.below(4);
    std::vector<std::vector<double>> bank(n, std::vector<double>(w));
    for (auto& row : bank)
      for (double& v : row) v = rng.normal();
    std::vector<double> query(w);
    for (double& v : query) v = rng.normal();
    std::vector<std::uint8_t> missing(w, 0);
    // at least one missing and at least one observed dim
    missing[rng.below(w)] = 1;
    for (std::size_t u = 0; u < w; ++u)
      if (!missing[u] && rng.bernoulli(0.3)) missing[u] = 1;
    bool any_observed = false;
    for (std::size_t u = 0; u < w; ++u) any_observed = any_observed || missing[u] == 0;
    if (!any_observed) missing[0] = 0;
    const int k = 1 + static_cast<int>(rng.below(n));

    const auto got = knn_impute(raw_matrix(bank), query, missing, k);
    const auto want = impute_oracle(bank, query, missing, k);
    REQUIRE(got.size() == want.size());
    for (std::size_t u = 0; u < w; ++u)
      CHECK(std::abs(got[u] - want[u]) <= 1e-12 * std::max(1.0, std::abs(want[u])));
  }
}

TEST_CASE("mask_knn_score hand oracle at d=2, r=1") {
  // train (already zero-mean-ish, so the z-transform is easy to follow)
  const TabularDataset train = numeric_table({{0.0, 0.0}, {2.0, 2.0}, {4.0, 10.0}});
  const TabularDataset val = numeric_table({{2.0, 4.0}});
  const MaskBank bank = build_mask_bank(2, 1);
  KnnConfig cfg;
  cfg.k = 2;
  const AnomalyScores got = mask_knn_score(val, train, bank, cfg);

  // replicate by hand in the encoded space
  const FeatureSchema schema = FeatureSchema::fit(train);
  const EncodedMatrix enc_train = encode_plain(train, schema);
  const EncodedMatrix enc_val = encode_plain(val, schema);
  std::vector<std::vector<double>> rows;
  for (std::size_t i = 0; i < 3; ++i) {
    const auto r = enc_train.row(i);
    rows.push_back({r[0], r[1]});
  }
  const std::vector<double> q{enc_val.row(0)[0], enc_val.row(0)[1]};
  double want = 0.0;
  for (std::size_t j = 0; j < 2; ++j) {
    std::vector<std::uint8_t> missing{0, 0};
    missing[j] = 1;
    const auto rebuilt = impute_oracle(rows, q, missing, 2);
    double d2 = 0.0;
    for (std::size_t u = 0; u < 2; ++u) d2 += (q[u] - rebuilt[u]) * (q[u] - rebuilt[u]);
    want += std::sqrt(d2);
  }
  REQUIRE(got.scores.size() == 1);
  CHECK(got.scores[0] == doctest::Approx(want).epsilon(1e-12));
  CHECK(got.scores[0] > 0.0);
}

TEST_CASE("mask_knn_score: training rows score 0, even with a full mask") {
  // column-unique values so each row is its own unique nearest duplicate
  const TabularDataset train =
      numeric_table({{0.0, 10.0, -3.0}, {1.0, 20.0, -2.0}, {2.0, 30.0, -1.0}, {3.0, 40.0, 0.0}});
  const TabularDataset dup = numeric_table({{0.0, 10.0, -3.0}});  // equals train row 0
  KnnConfig cfg;
  cfg.k = 2;

  const AnomalyScores partial = mask_knn_score(dup, train, build_mask_bank(3, 2), cfg);
  CHECK(partial.scores[0] == 0.0);

  // r = d includes the everything-masked row; the duplicate sits at index 0,
  // so even the vacuous-distance mask reproduces it exactly
  const AnomalyScores full = mask_knn_score(dup, train, build_mask_bank(3, 3), cfg);
  CHECK(full.scores[0] == 0.0);
}

TEST_CASE("mask_knn_score doubles when the masked-feature errors double") {
  // identical train rows: every feature is constant, so each imputation
  // returns exactly the shared value and the residual is the query's offset
  const TabularDataset train =
      numeric_table({{5.0, 7.0}, {5.0, 7.0}, {5.0, 7.0}, {5.0, 7.0}});
  const TabularDataset near = numeric_table({{5.0 + 0.3, 7.0 - 0.4}});
  const TabularDataset far = numeric_table({{5.0 + 0.6, 7.0 - 0.8}});
  const MaskBank bank = build_mask_bank(2, 2);
  KnnConfig cfg;
  cfg.k = 3;

  const double s1 = mask_knn_score(near, train, bank, cfg).scores[0];
  const double s2 = mask_knn_score(far, train, bank, cfg).scores[0];
  // masks {0}, {1}, {0,1}: |a| + |b| + sqrt(a^2+b^2) with unit fallback std
  const double want1 = 0.3 + 0.4 + std::sqrt(0.3 * 0.3 + 0.4 * 0.4);
  CHECK(s1 == doctest::Approx(want1).epsilon(1e-12));
  CHECK(s2 == doctest::Approx(2.0 * want1).epsilon(1e-12));
}

TEST_CASE("mask_knn_score is invariant to train row order when rows are distinct") {
  Rng rng(88, "perm");
  std::vector<std::vector<double>> rows;
  for (int i = 0; i < 12; ++i)
    rows.push_back({rng.normal(), rng.normal(), rng.normal()});
  const TabularDataset train = numeric_table(rows);
  const TabularDataset val = numeric_table({{0.1, -0.2, 0.3}, {1.5, 1.5, -1.5}});
  const MaskBank bank = build_mask_bank(3, 2);

  const AnomalyScores base = mask_knn_score(val, train, bank);
  std::vector<std::size_t> perm(12);
  std::iota(perm.begin(), perm.end(), 0);
  rng.shuffle(perm.begin(), perm.end());
  // refitting the schema on reordered rows sums in a different order, so the
  // encoded space itself can move by an ulp; the scores must track it exactly
  const AnomalyScores shuffled = mask_knn_score(val, train.select(perm), bank);
  for (std::size_t i = 0; i < 2; ++i)
    CHECK(shuffled.scores[i] == doctest::Approx(base.scores[i]).epsilon(1e-12));

  // at a fixed encoding, permuting the imputation bank rows is bitwise
  // invisible: neighbors are re-sorted by (distance, index) either way
  const FeatureSchema schema = FeatureSchema::fit(train);
  const EncodedMatrix enc = encode_plain(train, schema);
  EncodedMatrix enc_perm = enc;
  for (std::size_t i = 0; i < 12; ++i)
    std::copy(enc.row(perm[i]).begin(), enc.row(perm[i]).end(),
              enc_perm.values.begin() + static_cast<std::ptrdiff_t>(i * enc.width));
  const EncodedMatrix probe = encode_plain(val, schema);
  const std::vector<std::uint8_t> missing{1, 0, 1};
  for (std::size_t i = 0; i < 2; ++i) {
    const auto a = knn_impute(enc, probe.row(i), missing, 4);
    const auto b = knn_impute(enc_perm, probe.row(i), missing, 4);
    CHECK(a == b);
  }
}

TEST_CASE("mask_knn_score handles categoricals through their one-hot block") {
  TabularDataset train;
  train.source = "mixed";
  train.features = {Column{"x", false, {0.0, 1.0, 2.0, 3.0}, {}},
                    Column{"c", true, {}, {"a", "b", "a", "b"}}};
  train.labels = {0, 0, 0, 0};
  train.row_ids = {0, 1, 2, 3};
  TabularDataset val = train.select(std::vector<std::size_t>{1});
  val.features[1].cat = {"zzz"};  // unseen category: encodes to all-zero

  const AnomalyScores res = mask_knn_score(val, train, build_mask_bank(2, 1), KnnConfig{2});
  REQUIRE(res.scores.size() == 1);
  CHECK(res.scores[0] > 0.0);  // the unseen one-hot cannot be reconstructed
  CHECK(std::isfinite(res.scores[0]));
}

TEST_CASE("mask_knn_score caps the bank with a seeded subsample") {
  Rng rng(19, "rows");
  std::vector<std::vector<double>> rows;
  for (int i = 0; i < 40; ++i) rows.push_back({rng.normal(), rng.normal()});
  const TabularDataset train = numeric_table(rows);
  const TabularDataset val = numeric_table({{0.0, 0.0}});
  const MaskBank bank = build_mask_bank(2, 1);

  KnnConfig cfg;
  cfg.bank_cap = 10;
  cfg.seed = 3;
  const AnomalyScores a = mask_knn_score(val, train, bank, cfg);
  CHECK(a.context_subsampled);
  CHECK(a.context_rows == 10);
  const AnomalyScores b = mask_knn_score(val, train, bank, cfg);
  CHECK(a.scores == b.scores);

  cfg.seed = 4;
  const AnomalyScores c = mask_knn_score(val, train, bank, cfg);
  CHECK(c.scores[0] != a.scores[0]);
}

TEST_CASE("mask_knn_score contract errors") {
  const TabularDataset train = numeric_table({{0.0, 0.0}, {1.0, 1.0}});
  const TabularDataset val = numeric_table({{0.5, 0.5}});
  CHECK_THROWS_AS(mask_knn_score(val, train, build_mask_bank(3, 1)), std::invalid_argument);
  KnnConfig cfg;
  cfg.k = 5;  // more neighbors than train rows
  CHECK_THROWS_AS(mask_knn_score(val, train, build_mask_bank(2, 1), cfg),
                  std::invalid_argument);
  cfg.k = 2;
  cfg.bank_cap = 1;  // cap below k
  CHECK_THROWS_AS(mask_knn_score(val, train, build_mask_bank(2, 1), cfg),
                  std::invalid_argument);
}

TEST_CASE("knn_score hand cases") {
  SUBCASE("a training row at k=1 scores 0") {
    const TabularDataset train = numeric_table({{1.0, 2.0}, {3.0, 4.0}, {0.0, 1.0}});
    const TabularDataset val = numeric_table({{3.0, 4.0}});
    CHECK(knn_score(val, train, 1).scores[0] == 0.0);
  }
  SUBCASE("1-D pair at k=2") {
    // raw values {0, 10}: mean 5, std 5 -> encoded {-1, 1}; query 1 -> -0.8
    const TabularDataset train = numeric_table({{0.0}, {10.0}});
    const TabularDataset val = numeric_table({{1.0}});
    // second-nearest encoded distance: |1 - (-0.8)| = 1.8 (raw 9 / std 5)
    CHECK(knn_score(val, train, 2).scores[0] == doctest::Approx(1.8).epsilon(1e-15));
  }
  SUBCASE("contract errors") {
    const TabularDataset train = numeric_table({{0.0}, {10.0}});
    const TabularDataset val = numeric_table({{1.0}});
    CHECK_THROWS_AS(knn_score(val, train, 3), std::invalid_argument);
    CHECK_THROWS_AS(knn_score(val, train, 0), std::invalid_argument);
  }
}

TEST_CASE("knn_score matches an exhaustive-sort oracle on random instances") {
  Rng rng(505, "knn");
  std::vector<std::vector<double>> train_rows;
  for (int i = 0; i < 50; ++i) {
    std::vector<double> row(5);
    for (double& v : row) v = rng.normal();
    train_rows.push_back(std::move(row));
  }
  const TabularDataset train = numeric_table(train_rows);
  const FeatureSchema schema = FeatureSchema::fit(train);
  const EncodedMatrix ref = encode_plain(train, schema);

  std::vector<std::vector<double>> val_rows;
  for (int i = 0; i < 10; ++i) {
    std::vector<double> row(5);
    for (double& v : row) v = rng.normal();
    val_rows.push_back(std::move(row));
  }
  const TabularDataset val = numeric_table(val_rows);
  const EncodedMatrix q = encode_plain(val, schema);

  for (const int k : {1, 3, 5, 50}) {
    const AnomalyScores got = knn_score(val, train, k);
    for (std::size_t i = 0; i < 10; ++i) {
      std::vector<double> dists;
      for (std::size_t t = 0; t < 50; ++t) {
        double d2 = 0.0;
        for (std::size_t u = 0; u < 5; ++u) {
          const double diff = q.row(i)[u] - ref.row(t)[u];
          d2 += diff * diff;
        }
        dists.push_back(std::sqrt(d2));
      }
      std::sort(dists.begin(), dists.end());
      CHECK(got.scores[i] == doctest::Approx(dists[static_cast<std::size_t>(k - 1)])
                                 .epsilon(1e-12));
    }
  }
}
