#include "nptad/eval.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "nptad/baselines.hpp"
#include "nptad/masking.hpp"

namespace nptad {

namespace {

struct ClassCounts {
  std::size_t positives = 0;
  std::size_t negatives = 0;
};

ClassCounts check_scored(std::span<const double> scores, std::span<const std::uint8_t> labels,
                         const char* who) {
  if (scores.size() != labels.size())
    throw std::invalid_argument(std::string(who) + ": scores/labels size mismatch");
  if (scores.empty()) throw std::invalid_argument(std::string(who) + ": empty input");
  ClassCounts counts;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (!std::isfinite(scores[i]))
      throw std::invalid_argument(std::string(who) + ": non-finite score at index " +
                                  std::to_string(i));
    if (labels[i] > 1)
      throw std::invalid_argument(std::string(who) + ": labels must be 0 or 1");
    ++(labels[i] == 1 ? counts.positives : counts.negatives);
  }
  if (counts.positives == 0 || counts.negatives == 0)
    throw std::invalid_argument(std::string(who) + ": need both classes present");
  return counts;
}

}  // namespace

double f1_at_count(std::span<const double> scores, std::span<const std::uint8_t> labels) {
  const ClassCounts counts = check_scored(scores, labels, "f1_at_count");
  const std::size_t a = counts.positives;

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t lhs, std::size_t rhs) {
    if (scores[lhs] != scores[rhs]) return scores[lhs] > scores[rhs];
    return lhs < rhs;  // cutoff ties: keep the earlier sample
  });

  std::size_t tp = 0;
  for (std::size_t i = 0; i < a; ++i) tp += labels[order[i]];
  // #predicted == #actual makes precision == recall == TP/a, so F1 == TP/a
  return static_cast<double>(tp) / static_cast<double>(a);
}

double auroc(std::span<const double> scores, std::span<const std::uint8_t> labels) {
  const ClassCounts counts = check_scored(scores, labels, "auroc");
  const auto n1 = static_cast<std::int64_t>(counts.positives);
  const auto n0 = static_cast<std::int64_t>(counts.negatives);

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t lhs, std::size_t rhs) { return scores[lhs] < scores[rhs]; });

  // Mann-Whitney with midranks; ranks stay integers by working with 2*rank:
  // a tie group at sorted positions [s, s+g) has 2*midrank = 2s + g + 1.
  std::int64_t two_r1 = 0;
  std::size_t s = 0;
  while (s < order.size()) {
    std::size_t g = 1;
    while (s + g < order.size() && scores[order[s + g]] == scores[order[s]]) ++g;
    const auto two_mid = static_cast<std::int64_t>(2 * s + g + 1);
    for (std::size_t i = s; i < s + g; ++i)
      if (labels[order[i]] == 1) two_r1 += two_mid;
    s += g;
  }
  const std::int64_t two_u = two_r1 - n1 * (n1 + 1);
  return static_cast<double>(two_u) / static_cast<double>(2 * n1 * n0);
}

double mean_of(std::span<const double> xs) {
  if (xs.empty()) throw std::invalid_argument("mean_of: empty input");
  double s = 0.0;
  for (const double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

double population_std(std::span<const double> xs) {
  const double mu = mean_of(xs);
  double acc = 0.0;
  for (const double x : xs) acc += (x - mu) * (x - mu);
  return std::sqrt(acc / static_cast<double>(xs.size()));
}

std::uint64_t fnv1a(std::string_view text) {
  std::uint64_t h = 14695981039346656037ull;
  for (const char c : text) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ull;
  }
  return h;
}

Method parse_method(const std::string& name) {
  if (name == "npt") return Method::npt;
  if (name == "transformer") return Method::transformer;
  if (name == "mask-knn") return Method::mask_knn;
  if (name == "knn") return Method::knn;
  throw std::invalid_argument("unknown variant '" + name +
                              "' (use npt, transformer, mask-knn or knn)");
}

std::string to_string(Method method) {
  switch (method) {
    case Method::npt: return "npt";
    case Method::transformer: return "transformer";
    case Method::mask_knn: return "mask-knn";
    case Method::knn: return "knn";
  }
  throw std::logic_error("unreachable method");
}

std::string describe(const ExperimentConfig& cfg) {
  std::ostringstream out;
  out << std::setprecision(17);
  out << "method=" << to_string(cfg.method);
  out << " depth=" << cfg.model.depth << " heads=" << cfg.model.heads
      << " embed_dim=" << cfg.model.embed_dim << " dropout=" << cfg.model.dropout
      << " ff_mult=" << cfg.model.ff_mult << " ln_eps=" << cfg.model.ln_eps;
  out << " epochs=" << cfg.train.epochs << " batch_size=" << cfg.train.batch_size
      << " lr=" << cfg.train.lr << " p_mask=" << cfg.train.p_mask
      << " clip_norm=" << cfg.train.clip_norm << " flat_fraction=" << cfg.train.flat_fraction
      << " beta1=" << cfg.train.beta1 << " beta2=" << cfg.train.beta2
      << " adam_eps=" << cfg.train.adam_eps << " weight_decay=" << cfg.train.weight_decay
      << " la_alpha=" << cfg.train.la_alpha << " la_k=" << cfg.train.la_k;
  out << " r=" << cfg.r << " k=" << cfg.k << " agg=" << to_string(cfg.agg)
      << " per_sample=" << (cfg.per_sample ? 1 : 0)
      << " context_budget=" << cfg.context_budget << " knn_bank_cap=" << cfg.knn_bank_cap
      << " mask_limit=" << cfg.mask_limit << " train_fraction=" << cfg.train_fraction;
  out << " seeds=";
  for (std::size_t i = 0; i < cfg.seeds.size(); ++i)
    out << (i == 0 ? "" : ",") << cfg.seeds[i];
  return out.str();
}

void summarize(ScoreReport& report) {
  std::vector<double> f1s;
  std::vector<double> aucs;
  for (const SeedOutcome& seed : report.per_seed) {
    f1s.push_back(seed.f1);
    aucs.push_back(seed.auroc);
  }
  report.f1_mean = mean_of(f1s);
  report.f1_std = population_std(f1s);
  report.auroc_mean = mean_of(aucs);
  report.auroc_std = population_std(aucs);
}

namespace {

SeedOutcome run_seed(const TabularDataset& train, const TabularDataset& val,
                     const ExperimentConfig& cfg, std::uint64_t seed, const TrainLogFn& log) {
  SeedOutcome out;
  out.seed = seed;
  switch (cfg.method) {
    case Method::npt:
    case Method::transformer: {
      NptConfig model_cfg = cfg.model;
      model_cfg.aba_only = cfg.method == Method::transformer;
      const NptModel model = train_npt(model_cfg, cfg.train, train, seed, log);
      const MaskBank bank = build_mask_bank(model.schema().d(), cfg.r, cfg.mask_limit);
      ScoreConfig sc;
      sc.agg = cfg.agg;
      sc.context_budget = cfg.context_budget;
      sc.per_sample = cfg.per_sample;
      sc.seed = seed;
      out.scores = score_batch(model, train, val, bank, sc).scores;
      break;
    }
    case Method::mask_knn: {
      const MaskBank bank =
          build_mask_bank(static_cast<int>(train.d()), cfg.r, cfg.mask_limit);
      KnnConfig kc;
      kc.k = cfg.k;
      kc.bank_cap = cfg.knn_bank_cap;
      kc.seed = seed;
      out.scores = mask_knn_score(val, train, bank, kc).scores;
      break;
    }
    case Method::knn: {
      out.scores = knn_score(val, train, cfg.k).scores;
      break;
    }
  }
  out.labels = val.labels;
  out.row_ids = val.row_ids;
  out.f1 = f1_at_count(out.scores, out.labels);
  out.auroc = auroc(out.scores, out.labels);
  return out;
}

// Error families a failing seed can surface; kept so the rethrown exception
// (prefixed with the seed) still carries the original type for callers that
// map exception types to exit codes.
enum class FailKind { none, io, schema, invalid, length, overflow, other };

// Fan a per-seed job out over cfg.workers threads.  Results land in
// seed-index slots, so the output never depends on scheduling; the
// lowest-index failure wins to keep error reporting deterministic too.
template <typename Job>
std::vector<SeedOutcome> fan_out_seeds(const ExperimentConfig& cfg, const Job& job) {
  const std::size_t n = cfg.seeds.size();
  std::vector<SeedOutcome> outcomes(n);
  std::vector<std::string> failures(n);
  std::vector<FailKind> failed(n, FailKind::none);

  auto attempt = [&](std::size_t i) {
    try {
      outcomes[i] = job(cfg.seeds[i]);
    } catch (const io_error& e) {
      failures[i] = e.what(), failed[i] = FailKind::io;
    } catch (const schema_error& e) {
      failures[i] = e.what(), failed[i] = FailKind::schema;
    } catch (const std::invalid_argument& e) {
      failures[i] = e.what(), failed[i] = FailKind::invalid;
    } catch (const std::length_error& e) {
      failures[i] = e.what(), failed[i] = FailKind::length;
    } catch (const std::overflow_error& e) {
      failures[i] = e.what(), failed[i] = FailKind::overflow;
    } catch (const std::exception& e) {
      failures[i] = e.what(), failed[i] = FailKind::other;
    }
  };

  const std::size_t workers =
      std::min<std::size_t>(static_cast<std::size_t>(std::max(cfg.workers, 1)), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) attempt(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        for (;;) {
          const std::size_t i = next.fetch_add(1);
          if (i >= n) return;
          attempt(i);
        }
      });
    for (std::thread& t : pool) t.join();
  }

  for (std::size_t i = 0; i < n; ++i) {
    if (failed[i] == FailKind::none) continue;
    const std::string what = "seed " + std::to_string(cfg.seeds[i]) + ": " + failures[i];
    switch (failed[i]) {
      case FailKind::io: throw io_error(what);
      case FailKind::schema: throw schema_error(what);
      case FailKind::invalid: throw std::invalid_argument(what);
      case FailKind::length: throw std::length_error(what);
      case FailKind::overflow: throw std::overflow_error(what);
      default: throw std::runtime_error(what);
    }
  }
  return outcomes;
}

}  // namespace

ScoreReport run_experiment(const TabularDataset& data, const ExperimentConfig& cfg,
                           const TrainLogFn& log) {
  if (cfg.seeds.empty()) throw std::invalid_argument("run_experiment: need at least one seed");

  ScoreReport report;
  report.method = cfg.method;
  report.dataset = data.source;
  report.config_hash = fnv1a(describe(cfg));
  report.per_seed = fan_out_seeds(cfg, [&](std::uint64_t seed) {
    const Split split = split_dataset(data, SplitSpec{cfg.train_fraction, seed});
    return run_seed(split.train, split.val, cfg, seed, log);
  });
  summarize(report);
  return report;
}

std::vector<ContamPoint> run_contamination(const ExperimentConfig& cfg, SyntheticSpec base,
                                           std::span<const double> shares,
                                           const TrainLogFn& log) {
  if (cfg.seeds.empty())
    throw std::invalid_argument("run_contamination: need at least one seed");
  if (shares.empty()) throw std::invalid_argument("run_contamination: need at least one share");

  std::vector<ContamPoint> curve;
  for (const double share : shares) {
    ContamPoint point;
    point.share = share;
    point.report.method = cfg.method;
    point.report.config_hash = fnv1a(describe(cfg));
    {
      std::ostringstream tag;
      tag << std::setprecision(17) << "synthetic(share=" << share << ")";
      point.report.dataset = tag.str();
    }
    point.report.per_seed = fan_out_seeds(cfg, [&](std::uint64_t seed) {
      SyntheticSpec spec = base;
      spec.contamination_share = share;
      spec.seed = seed;
      const Split split = gen_synthetic(spec);
      return run_seed(split.train, split.val, cfg, seed, log);
    });
    summarize(point.report);
    curve.push_back(std::move(point));
  }
  return curve;
}

}  // namespace nptad
