#include "nptad/scoring.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <mutex>
#include <numeric>
#include <stdexcept>
#include <thread>

namespace nptad {

Aggregation parse_aggregation(const std::string& name) {
  if (name == "mean") return Aggregation::mean;
  if (name == "max") return Aggregation::max;
  throw std::invalid_argument("unknown aggregation '" + name + "' (use mean or max)");
}

std::string to_string(Aggregation agg) {
  return agg == Aggregation::mean ? "mean" : "max";
}

double aggregate(std::span<const double> losses, Aggregation mode) {
  if (losses.empty()) throw std::invalid_argument("aggregate: empty loss vector");
  if (mode == Aggregation::mean) {
    double s = 0.0;
    for (const double v : losses) s += v;
    return s / static_cast<double>(losses.size());
  }
  double hi = losses[0];
  for (const double v : losses.subspan(1)) hi = std::fmax(hi, v);
  return hi;
}

namespace {

TabularDataset stack_rows(const TabularDataset& top, const TabularDataset& bottom) {
  TabularDataset out;
  out.source = top.source + "+" + bottom.source;
  for (std::size_t j = 0; j < top.features.size(); ++j) {
    Column col = top.features[j];
    const Column& extra = bottom.features[j];
    col.num.insert(col.num.end(), extra.num.begin(), extra.num.end());
    col.cat.insert(col.cat.end(), extra.cat.begin(), extra.cat.end());
    out.features.push_back(std::move(col));
  }
  out.labels = top.labels;
  out.labels.insert(out.labels.end(), bottom.labels.begin(), bottom.labels.end());
  out.row_ids = top.row_ids;
  out.row_ids.insert(out.row_ids.end(), bottom.row_ids.begin(), bottom.row_ids.end());
  return out;
}

}  // namespace

AnomalyScores score_batch(const NptModel& model, const TabularDataset& context,
                          const TabularDataset& val, const MaskBank& bank,
                          const ScoreConfig& cfg) {
  const FeatureSchema& schema = model.schema();
  const auto d = static_cast<std::size_t>(schema.d());
  if (bank.d != schema.d())
    throw std::invalid_argument("score_batch: mask bank was built for d=" +
                                std::to_string(bank.d) + ", model has d=" +
                                std::to_string(schema.d()));
  if (bank.size() == 0) throw std::invalid_argument("score_batch: empty mask bank");
  if (val.n_rows() == 0) throw std::invalid_argument("score_batch: no rows to score");
  if (context.n_rows() == 0) throw std::invalid_argument("score_batch: empty context");
  if (cfg.workers < 1) throw std::invalid_argument("score_batch: workers must be >= 1");

  AnomalyScores out;

  // One context draw shared by every mask, so scores stay a pure function of
  // (model, bank, seed).
  TabularDataset subsampled;
  const TabularDataset* ctx = &context;
  if (context.n_rows() > cfg.context_budget) {
    std::vector<std::size_t> idx(context.n_rows());
    std::iota(idx.begin(), idx.end(), 0);
    Rng rng(cfg.seed, "context");
    rng.shuffle(idx.begin(), idx.end());
    idx.resize(cfg.context_budget);
    std::sort(idx.begin(), idx.end());
    subsampled = context.select(idx);
    ctx = &subsampled;
    out.context_subsampled = true;
  }
  out.context_rows = ctx->n_rows();

  const TabularDataset stacked = stack_rows(val, *ctx);
  const std::size_t n_val = val.n_rows();
  const std::size_t n_all = stacked.n_rows();
  const std::size_t m = bank.size();

  // Warnings (unseen categories) depend only on the rows, not on the mask.
  out.warnings = encode(stacked, schema, std::vector<std::uint8_t>(n_all * d, 0)).warnings;

  std::vector<std::vector<double>> per_mask(m);
  auto run_mask = [&](std::size_t k) {
    if (cfg.per_sample) {
      // one forward per val row: scored rows never see each other
      per_mask[k].resize(n_val);
      for (std::size_t i = 0; i < n_val; ++i) {
        const std::size_t one[] = {i};
        const TabularDataset single = stack_rows(val.select(one), *ctx);
        std::vector<std::uint8_t> mask(single.n_rows() * d, 0);
        for (std::size_t j = 0; j < d; ++j) mask[j] = bank.masks[k].bits[j];
        EncodedBatch enc = encode(single, schema, std::move(mask));
        const auto outs = model.forward(nullptr, enc, nullptr);
        per_mask[k][i] = model.per_sample_losses(outs, enc)[0];
      }
      return;
    }
    std::vector<std::uint8_t> mask(n_all * d, 0);
    for (std::size_t i = 0; i < n_val; ++i)
      for (std::size_t j = 0; j < d; ++j) mask[i * d + j] = bank.masks[k].bits[j];
    EncodedBatch enc = encode(stacked, schema, std::move(mask));
    const auto outs = model.forward(nullptr, enc, nullptr);
    const auto losses = model.per_sample_losses(outs, enc);
    per_mask[k].assign(losses.begin(), losses.begin() + static_cast<std::ptrdiff_t>(n_val));
  };

  const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(cfg.workers), m);
  if (workers <= 1) {
    for (std::size_t k = 0; k < m; ++k) run_mask(k);
  } else {
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        for (;;) {
          const std::size_t k = next.fetch_add(1);
          if (k >= m) return;
          try {
            run_mask(k);
          } catch (...) {
            const std::lock_guard<std::mutex> lock(failure_mutex);
            if (!failure) failure = std::current_exception();
            return;
          }
        }
      });
    for (std::thread& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
  }

  // Reduce in bank order: the result does not depend on thread scheduling.
  out.scores.resize(n_val);
  std::vector<double> column(m);
  for (std::size_t i = 0; i < n_val; ++i) {
    for (std::size_t k = 0; k < m; ++k) column[k] = per_mask[k][i];
    out.scores[i] = aggregate(column, cfg.agg);
  }

  if (cfg.keep_per_mask) out.per_mask = std::move(per_mask);
  return out;
}

}  // namespace nptad
