#include "nptad/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>
#include <utility>

namespace nptad {

EncodedMatrix encode_plain(const TabularDataset& rows, const FeatureSchema& schema) {
  const auto d = static_cast<std::size_t>(schema.d());
  if (rows.d() != d)
    throw schema_error("encode_plain: dataset feature count does not match schema");
  EncodedMatrix out;
  out.n = rows.n_rows();
  out.offsets.resize(d + 1, 0);
  for (std::size_t j = 0; j < d; ++j) {
    const bool is_cat = schema.features[j].kind == FeatureKind::categorical;
    if (rows.features[j].name != schema.features[j].name ||
        rows.features[j].categorical != is_cat)
      throw schema_error("encode_plain: column '" + rows.features[j].name +
                         "' does not match the fitted schema");
    out.offsets[j + 1] = out.offsets[j] + static_cast<std::size_t>(schema.features[j].width());
  }
  out.width = out.offsets[d];
  out.values.assign(out.n * out.width, 0.0);
  for (std::size_t i = 0; i < out.n; ++i) {
    double* row = out.values.data() + i * out.width;
    for (std::size_t j = 0; j < d; ++j) {
      const FeatureSpec& spec = schema.features[j];
      if (spec.kind == FeatureKind::numerical) {
        row[out.offsets[j]] = (rows.features[j].num[i] - spec.mean) / spec.stdev;
      } else {
        const int idx = schema.category_index(j, rows.features[j].cat[i]);
        if (idx >= 0) row[out.offsets[j] + static_cast<std::size_t>(idx)] = 1.0;
        // unseen categories stay all-zero, matching the model's encoding
      }
    }
  }
  return out;
}

std::vector<double> knn_impute(const EncodedMatrix& bank, std::span<const double> query,
                               std::span<const std::uint8_t> missing_dims, int k) {
  if (k < 1) throw std::invalid_argument("knn_impute: k must be >= 1");
  if (bank.n < static_cast<std::size_t>(k))
    throw std::invalid_argument("knn_impute: bank has " + std::to_string(bank.n) +
                                " rows, need at least k=" + std::to_string(k));
  if (query.size() != bank.width || missing_dims.size() != bank.width)
    throw std::invalid_argument("knn_impute: query/mask width must match the bank");

  // rank every bank row by distance over the observed dims, index breaks ties
  std::vector<std::pair<double, std::size_t>> order(bank.n);
  for (std::size_t i = 0; i < bank.n; ++i) {
    const auto row = bank.row(i);
    double d2 = 0.0;
    for (std::size_t u = 0; u < bank.width; ++u) {
      if (missing_dims[u]) continue;
      const double diff = row[u] - query[u];
      d2 += diff * diff;
    }
    order[i] = {d2, i};
  }
  const auto kth = order.begin() + k;
  std::partial_sort(order.begin(), kth, order.end());

  std::vector<double> out(query.begin(), query.end());
  if (order[0].first == 0.0) {
    // exact duplicate on the observed dims (smallest index wins): the
    // inverse-distance weights degenerate, so copy that row outright
    const auto row = bank.row(order[0].second);
    for (std::size_t u = 0; u < bank.width; ++u)
      if (missing_dims[u]) out[u] = row[u];
    return out;
  }

  double wsum = 0.0;
  std::vector<double> weights(static_cast<std::size_t>(k));
  for (int j = 0; j < k; ++j) {
    weights[static_cast<std::size_t>(j)] = 1.0 / std::sqrt(order[static_cast<std::size_t>(j)].first);
    wsum += weights[static_cast<std::size_t>(j)];
  }
  for (std::size_t u = 0; u < bank.width; ++u) {
    if (!missing_dims[u]) continue;
    double acc = 0.0;
    for (int j = 0; j < k; ++j)
      acc += weights[static_cast<std::size_t>(j)] *
             bank.values[order[static_cast<std::size_t>(j)].second * bank.width + u];
    out[u] = acc / wsum;
  }
  return out;
}

namespace {

EncodedMatrix build_bank(const TabularDataset& train, const FeatureSchema& schema,
                         const KnnConfig& cfg, bool* subsampled) {
  *subsampled = false;
  if (train.n_rows() <= cfg.bank_cap) return encode_plain(train, schema);
  std::vector<std::size_t> idx(train.n_rows());
  std::iota(idx.begin(), idx.end(), 0);
  Rng rng(cfg.seed, "knn-bank");
  rng.shuffle(idx.begin(), idx.end());
  idx.resize(cfg.bank_cap);
  std::sort(idx.begin(), idx.end());
  *subsampled = true;
  return encode_plain(train.select(idx), schema);
}

}  // namespace

AnomalyScores mask_knn_score(const TabularDataset& val, const TabularDataset& train,
                             const MaskBank& bank, const KnnConfig& cfg) {
  if (cfg.k < 1) throw std::invalid_argument("mask_knn_score: k must be >= 1");
  if (cfg.bank_cap < static_cast<std::size_t>(cfg.k))
    throw std::invalid_argument("mask_knn_score: bank cap must be >= k");
  if (val.n_rows() == 0) throw std::invalid_argument("mask_knn_score: no rows to score");
  const FeatureSchema schema = FeatureSchema::fit(train);
  if (bank.d != schema.d())
    throw std::invalid_argument("mask_knn_score: mask bank was built for d=" +
                                std::to_string(bank.d) + ", data has d=" +
                                std::to_string(schema.d()));
  if (bank.size() == 0) throw std::invalid_argument("mask_knn_score: empty mask bank");

  AnomalyScores out;
  const EncodedMatrix knn_bank = build_bank(train, schema, cfg, &out.context_subsampled);
  out.context_rows = knn_bank.n;
  if (knn_bank.n < static_cast<std::size_t>(cfg.k))
    throw std::invalid_argument("mask_knn_score: train split has fewer rows than k");
  const EncodedMatrix queries = encode_plain(val, schema);

  // feature-level masks expanded to encoded-dim level, once per mask
  std::vector<std::vector<std::uint8_t>> dim_masks(bank.size());
  for (std::size_t m = 0; m < bank.size(); ++m) {
    dim_masks[m].assign(queries.width, 0);
    for (std::size_t j = 0; j < static_cast<std::size_t>(bank.d); ++j)
      if (bank.masks[m].bits[j])
        std::fill(dim_masks[m].begin() + static_cast<std::ptrdiff_t>(queries.offsets[j]),
                  dim_masks[m].begin() + static_cast<std::ptrdiff_t>(queries.offsets[j + 1]), 1);
  }

  out.scores.assign(val.n_rows(), 0.0);
  for (std::size_t i = 0; i < val.n_rows(); ++i) {
    const auto query = queries.row(i);
    for (std::size_t m = 0; m < bank.size(); ++m) {
      const auto rebuilt = knn_impute(knn_bank, query, dim_masks[m], cfg.k);
      double d2 = 0.0;
      for (std::size_t u = 0; u < queries.width; ++u) {
        const double diff = query[u] - rebuilt[u];
        d2 += diff * diff;
      }
      out.scores[i] += std::sqrt(d2);
    }
  }
  return out;
}

AnomalyScores knn_score(const TabularDataset& val, const TabularDataset& train, int k) {
  if (k < 1) throw std::invalid_argument("knn_score: k must be >= 1");
  if (train.n_rows() < static_cast<std::size_t>(k))
    throw std::invalid_argument("knn_score: train split has " +
                                std::to_string(train.n_rows()) + " rows, need at least k=" +
                                std::to_string(k));
  if (val.n_rows() == 0) throw std::invalid_argument("knn_score: no rows to score");
  const FeatureSchema schema = FeatureSchema::fit(train);
  const EncodedMatrix ref = encode_plain(train, schema);
  const EncodedMatrix queries = encode_plain(val, schema);

  AnomalyScores out;
  out.context_rows = ref.n;
  out.scores.resize(val.n_rows());
  std::vector<double> d2(ref.n);
  for (std::size_t i = 0; i < val.n_rows(); ++i) {
    const auto q = queries.row(i);
    for (std::size_t t = 0; t < ref.n; ++t) {
      const auto row = ref.row(t);
      double acc = 0.0;
      for (std::size_t u = 0; u < ref.width; ++u) {
        const double diff = row[u] - q[u];
        acc += diff * diff;
      }
      d2[t] = acc;
    }
    std::nth_element(d2.begin(), d2.begin() + (k - 1), d2.end());
    out.scores[i] = std::sqrt(d2[static_cast<std::size_t>(k - 1)]);
  }
  return out;
}

}  // namespace nptad
