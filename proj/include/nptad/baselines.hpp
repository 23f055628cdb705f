#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "nptad/data.hpp"
#include "nptad/masking.hpp"
#include "nptad/npt.hpp"
#include "nptad/scoring.hpp"

namespace nptad {

struct KnnConfig {
  int k = 5;
  // Imputation bank: the whole train split up to this many rows, then a
  // seeded subsample (mirrors the large-dataset cap).
  std::size_t bank_cap = 10'000;
  std::uint64_t seed = 0;
};

// Dense design matrix in the schema's encoded space: z-scored numericals and
// one-hot categoricals, no mask indicators.
struct EncodedMatrix {
  std::size_t n = 0;
  std::size_t width = 0;             // total encoded dims
  std::vector<double> values;        // row-major n x width
  std::vector<std::size_t> offsets;  // d+1 entries; feature j spans [offsets[j], offsets[j+1])
  std::span<const double> row(std::size_t i) const {
    return std::span<const double>(values).subspan(i * width, width);
  }
};

EncodedMatrix encode_plain(const TabularDataset& rows, const FeatureSchema& schema);

// Inverse-distance-weighted KNN imputation.  Neighbors are ranked by L2
// distance over the observed dims (ties by smaller row index); each missing
// dim becomes the weight-normalized neighbor average.  A zero-distance
// neighbor short-circuits to that row's values (the weights' limit), which
// also covers the degenerate all-dims-missing query where every bank row is
// at vacuous distance 0.  Returns the full reconstructed vector.
std::vector<double> knn_impute(const EncodedMatrix& bank, std::span<const double> query,
                               std::span<const std::uint8_t> missing_dims, int k);

// Mask-KNN: for every bank mask, impute the masked features of each val row
// from the train split and accumulate the L2 reconstruction distance.
AnomalyScores mask_knn_score(const TabularDataset& val, const TabularDataset& train,
                             const MaskBank& bank, const KnnConfig& cfg = {});

// Plain KNN anomaly score: L2 distance to the k-th nearest train row.
AnomalyScores knn_score(const TabularDataset& val, const TabularDataset& train, int k = 5);

}  // namespace nptad
