#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "nptad/data.hpp"
#include "nptad/masking.hpp"
#include "nptad/npt.hpp"

namespace nptad {

enum class Aggregation { mean, max };

Aggregation parse_aggregation(const std::string& name);  // "mean" | "max"
std::string to_string(Aggregation agg);

// Arithmetic mean or maximum of a non-empty loss vector.
double aggregate(std::span<const double> losses, Aggregation mode);

struct ScoreConfig {
  Aggregation agg = Aggregation::mean;
  // Context rows fed alongside the scored rows; larger train splits are
  // subsampled once (deterministically from `seed`) before any mask runs.
  std::size_t context_budget = 10'000;
  bool keep_per_mask = false;  // retain the full [mask x row] loss matrix
  // When set, each val row is scored in its own forward pass (row + context)
  // instead of batching all val rows together, so scored rows never attend
  // to each other.
  bool per_sample = false;
  std::uint64_t seed = 0;
  int workers = 1;  // masks are independent; >1 fans them out over threads
};

struct AnomalyScores {
  std::vector<double> scores;  // one per scored row, in input order
  std::vector<std::vector<double>> per_mask;  // [bank.size()][n] if kept
  std::size_t context_rows = 0;               // rows actually used as context
  bool context_subsampled = false;
  std::vector<std::string> warnings;  // e.g. unseen categories in val rows
};

// Anomaly score for every row of `val`: each bank mask hides that mask's
// features on the val rows, the unmasked context rows are stacked underneath,
// and the per-row reconstruction losses are aggregated across the whole bank.
// Scores are deterministic for a fixed (model, bank, seed) regardless of
// `workers`.
AnomalyScores score_batch(const NptModel& model, const TabularDataset& context,
                          const TabularDataset& val, const MaskBank& bank,
                          const ScoreConfig& cfg = {});

}  // namespace nptad
