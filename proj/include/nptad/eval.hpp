#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "nptad/data.hpp"
#include "nptad/npt.hpp"
#include "nptad/scoring.hpp"

namespace nptad {

// F1 with the decision threshold at the true anomaly count: the a = #labels
// highest scores are predicted positive (score ties at the cutoff broken by
// smaller sample index), which makes precision == recall == TP/a.
// Throws std::invalid_argument on single-class labels or non-finite scores.
double f1_at_count(std::span<const double> scores, std::span<const std::uint8_t> labels);

// Probability that a random positive outscores a random negative, ties worth
// half (Mann-Whitney).  Exact integer rank arithmetic internally.
double auroc(std::span<const double> scores, std::span<const std::uint8_t> labels);

double mean_of(std::span<const double> xs);
double population_std(std::span<const double> xs);

std::uint64_t fnv1a(std::string_view text);

enum class Method { npt, transformer, mask_knn, knn };
Method parse_method(const std::string& name);  // npt | transformer | mask-knn | knn
std::string to_string(Method method);

struct ExperimentConfig {
  Method method = Method::npt;
  NptConfig model;    // npt / transformer variants
  TrainConfig train;  // ignored by the knn baselines
  int r = 1;          // mask bank depth
  int k = 5;          // knn baselines
  Aggregation agg = Aggregation::mean;
  bool per_sample = false;
  std::size_t context_budget = 10'000;
  std::size_t knn_bank_cap = 10'000;
  std::uint64_t mask_limit = 10'000'000;
  double train_fraction = 0.5;
  std::vector<std::uint64_t> seeds;
  int workers = 1;  // seed fan-out; never changes the results
};

// Canonical key=value line of every result-determining field (workers
// excluded); its FNV-1a hash identifies the run in reports.
std::string describe(const ExperimentConfig& cfg);

struct SeedOutcome {
  std::uint64_t seed = 0;
  double f1 = 0.0;
  double auroc = 0.0;
  std::vector<double> scores;              // per val row
  std::vector<std::uint8_t> labels;        // matching val labels
  std::vector<std::int64_t> row_ids;       // matching val row ids
};

struct ScoreReport {
  Method method = Method::npt;
  std::string dataset;
  std::uint64_t config_hash = 0;
  std::vector<SeedOutcome> per_seed;
  double f1_mean = 0.0;
  double f1_std = 0.0;
  double auroc_mean = 0.0;
  double auroc_std = 0.0;
};

// Recomputes the summary block from per_seed (population std), so a report
// reloaded from its stored per-seed rows summarizes bit-identically.
void summarize(ScoreReport& report);

// The full multi-seed protocol: per seed, split the normals, fit/train the
// configured method on the train side, score the val side, compute both
// metrics.  Any failing seed aborts the run with that seed named.
ScoreReport run_experiment(const TabularDataset& data, const ExperimentConfig& cfg,
                           const TrainLogFn& log = nullptr);

struct ContamPoint {
  double share = 0.0;
  ScoreReport report;
};

// Synthetic contamination sweep: one multi-seed report per share, generator
// reseeded per (share, seed).
std::vector<ContamPoint> run_contamination(const ExperimentConfig& cfg, SyntheticSpec base,
                                           std::span<const double> shares,
                                           const TrainLogFn& log = nullptr);

}  // namespace nptad
