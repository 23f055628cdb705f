#include "nptad/run_config.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "CLI11.hpp"
#include "json.hpp"
#include "nptad/baselines.hpp"
#include "nptad/masking.hpp"
#include "nptad/npt.hpp"
#include "nptad/scoring.hpp"

namespace nptad {
namespace {

namespace fs = std::filesystem;

// Enough significant digits to reproduce the exact double on re-parse.
std::string fmt17(double v) {
  std::ostringstream out;
  out << std::setprecision(17) << v;
  return out.str();
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw io_error("cannot open '" + path + "' for writing");
  out << content;
  out.flush();
  if (!out) throw io_error("write to '" + path + "' failed");
}

std::string absolute_path(const std::string& path) {
  return fs::absolute(fs::path(path)).lexically_normal().string();
}

constexpr Preset kPresets[] = {
    // name      epochs  batch  lr     p_mask  r  embed
    {"thyroid", 5000, -1, 0.01, 0.10, 2, 16},
    {"pima", 500, -1, 0.01, 0.15, 4, 16},
    {"breastw", 500, -1, 0.01, 0.15, 3, 16},
};

// ------------------------------------------------------------ config echo --

void echo_line(std::ostream& out, std::string_view key, const std::string& value) {
  out << key << '=' << value << '\n';
}

std::string quoted(const std::string& text) { return '"' + text + '"'; }

std::string bool_word(bool v) { return v ? "true" : "false"; }

void echo_data_block(std::ostream& out, const RunConfig& cfg) {
  echo_line(out, "dataset", quoted(cfg.dataset));
  echo_line(out, "label-col", quoted(cfg.label_col));
  if (!cfg.categorical.empty()) {
    std::ostringstream list;
    for (std::size_t i = 0; i < cfg.categorical.size(); ++i)
      list << (i ? ", " : "") << quoted(cfg.categorical[i]);
    echo_line(out, "categorical", "[" + list.str() + "]");
  }
}

void echo_variant_block(std::ostream& out, const RunConfig& cfg) {
  echo_line(out, "variant", quoted(to_string(cfg.experiment.method)));
  if (!cfg.preset.empty()) echo_line(out, "preset", quoted(cfg.preset));
}

void echo_model_block(std::ostream& out, const RunConfig& cfg) {
  const NptConfig& m = cfg.experiment.model;
  echo_line(out, "depth", std::to_string(m.depth));
  echo_line(out, "heads", std::to_string(m.heads));
  echo_line(out, "embed-dim", std::to_string(m.embed_dim));
  echo_line(out, "dropout", fmt17(m.dropout));
  echo_line(out, "ff-mult", std::to_string(m.ff_mult));
}

void echo_train_block(std::ostream& out, const RunConfig& cfg) {
  const TrainConfig& t = cfg.experiment.train;
  echo_line(out, "epochs", std::to_string(t.epochs));
  echo_line(out, "batch-size", std::to_string(t.batch_size));
  echo_line(out, "lr", fmt17(t.lr));
  echo_line(out, "pmask", fmt17(t.p_mask));
}

void echo_scoring_block(std::ostream& out, const RunConfig& cfg) {
  const ExperimentConfig& e = cfg.experiment;
  echo_line(out, "r", std::to_string(e.r));
  echo_line(out, "k", std::to_string(e.k));
  echo_line(out, "agg", quoted(to_string(e.agg)));
  echo_line(out, "per-sample", bool_word(e.per_sample));
  echo_line(out, "context-budget", std::to_string(e.context_budget));
  echo_line(out, "bank-cap", std::to_string(e.knn_bank_cap));
  echo_line(out, "mask-limit", std::to_string(e.mask_limit));
}

}  // namespace

std::span<const Preset> presets() { return kPresets; }

const Preset& preset_by_name(std::string_view name) {
  for (const Preset& p : kPresets)
    if (p.name == name) return p;
  throw std::invalid_argument("unknown preset '" + std::string(name) +
                              "' (expected thyroid, pima or breastw)");
}

std::string render_config_echo(const RunConfig& cfg) {
  std::ostringstream out;
  out << "# nptad " << cfg.command << " config echo (resolved values)\n";
  out << "# re-run: nptad " << cfg.command << " --config <this file> [--out <new dir>]\n";
  out << '[' << cfg.command << "]\n";
  if (cfg.command == "train") {
    echo_data_block(out, cfg);
    echo_variant_block(out, cfg);
    echo_model_block(out, cfg);
    echo_train_block(out, cfg);
    echo_line(out, "train-fraction", fmt17(cfg.experiment.train_fraction));
    echo_line(out, "seed", std::to_string(cfg.seed));
    echo_line(out, "checkpoint", quoted(cfg.checkpoint));
  } else if (cfg.command == "score") {
    echo_data_block(out, cfg);
    echo_variant_block(out, cfg);
    echo_scoring_block(out, cfg);
    echo_line(out, "train-fraction", fmt17(cfg.experiment.train_fraction));
    echo_line(out, "seed", std::to_string(cfg.seed));
    if (!cfg.checkpoint.empty()) echo_line(out, "checkpoint", quoted(cfg.checkpoint));
    echo_line(out, "workers", std::to_string(cfg.experiment.workers));
  } else if (cfg.command == "bench") {
    echo_data_block(out, cfg);
    echo_variant_block(out, cfg);
    echo_model_block(out, cfg);
    echo_train_block(out, cfg);
    echo_scoring_block(out, cfg);
    echo_line(out, "train-fraction", fmt17(cfg.experiment.train_fraction));
    echo_line(out, "seeds", std::to_string(cfg.seed_count));
    echo_line(out, "workers", std::to_string(cfg.experiment.workers));
  } else if (cfg.command == "contam") {
    echo_variant_block(out, cfg);
    echo_model_block(out, cfg);
    echo_train_block(out, cfg);
    echo_scoring_block(out, cfg);
    echo_line(out, "seeds", std::to_string(cfg.seed_count));
    echo_line(out, "workers", std::to_string(cfg.experiment.workers));
    echo_line(out, "train-normals", std::to_string(cfg.synthetic.train_normals));
    echo_line(out, "val-normals", std::to_string(cfg.synthetic.val_normals));
    echo_line(out, "val-anomalies", std::to_string(cfg.synthetic.val_anomalies));
  } else {
    throw std::invalid_argument("no config echo for command '" + cfg.command + "'");
  }
  echo_line(out, "out", quoted(cfg.out_dir));
  return out.str();
}

// --------------------------------------------------------- artifact files --

void write_score_csv(const std::string& path, const SeedOutcome& outcome) {
  std::ostringstream out;
  out << "sample_id,score,label\n";
  for (std::size_t i = 0; i < outcome.scores.size(); ++i)
    out << outcome.row_ids[i] << ',' << fmt17(outcome.scores[i]) << ','
        << int(outcome.labels[i]) << '\n';
  write_text_file(path, out.str());
}

void write_report_csv(const std::string& path, const ScoreReport& report) {
  std::ostringstream out;
  out << "kind,seed,f1,f1_std,auroc,auroc_std\n";
  for (const SeedOutcome& seed : report.per_seed)
    out << "seed," << seed.seed << ',' << fmt17(seed.f1) << ",," << fmt17(seed.auroc)
        << ",\n";
  out << "summary,," << fmt17(report.f1_mean) << ',' << fmt17(report.f1_std) << ','
      << fmt17(report.auroc_mean) << ',' << fmt17(report.auroc_std) << '\n';
  write_text_file(path, out.str());
}

void write_report_json(const std::string& path, const ScoreReport& report) {
  nlohmann::json doc;
  doc["schema_version"] = kReportSchemaVersion;
  doc["method"] = to_string(report.method);
  doc["dataset"] = report.dataset;
  std::ostringstream hash;
  hash << "0x" << std::hex << std::setw(16) << std::setfill('0') << report.config_hash;
  doc["config_hash"] = hash.str();
  doc["per_seed"] = nlohmann::json::array();
  for (const SeedOutcome& seed : report.per_seed)
    doc["per_seed"].push_back({{"seed", seed.seed}, {"f1", seed.f1}, {"auroc", seed.auroc}});
  doc["summary"] = {{"f1_mean", report.f1_mean},
                    {"f1_std", report.f1_std},
                    {"auroc_mean", report.auroc_mean},
                    {"auroc_std", report.auroc_std}};
  write_text_file(path, doc.dump(2) + "\n");
}

void write_contam_csv(const std::string& path, std::span<const ContamPoint> curve) {
  std::ostringstream out;
  out << "share,mean_F1,std_F1,mean_AUROC,std_AUROC\n";
  for (const ContamPoint& point : curve)
    out << fmt17(point.share) << ',' << fmt17(point.report.f1_mean) << ','
        << fmt17(point.report.f1_std) << ',' << fmt17(point.report.auroc_mean) << ','
        << fmt17(point.report.auroc_std) << '\n';
  write_text_file(path, out.str());
}

// ------------------------------------------------------------- resolution --

namespace {

bool option_unset(const CLI::App& sub, const std::string& name) {
  const CLI::Option* opt = sub.get_option_no_throw(name);
  return opt != nullptr && opt->count() == 0;
}

bool is_model_variant(Method method) {
  return method == Method::npt || method == Method::transformer;
}

// Preset values land only where neither a flag nor a config-file key did.
void apply_preset_defaults(const CLI::App& sub, RunConfig& cfg) {
  if (cfg.preset.empty()) return;
  const Preset& preset = preset_by_name(cfg.preset);
  if (option_unset(sub, "--epochs")) cfg.experiment.train.epochs = preset.epochs;
  if (option_unset(sub, "--batch-size")) cfg.experiment.train.batch_size = preset.batch_size;
  if (option_unset(sub, "--lr")) cfg.experiment.train.lr = preset.lr;
  if (option_unset(sub, "--pmask")) cfg.experiment.train.p_mask = preset.p_mask;
  if (option_unset(sub, "--r")) cfg.experiment.r = preset.r;
  if (option_unset(sub, "--embed-dim")) cfg.experiment.model.embed_dim = preset.embed_dim;
}

void finalize_config(const CLI::App& sub, RunConfig& cfg) {
  apply_preset_defaults(sub, cfg);
  if (cfg.out_dir.empty()) {
    const char* env = std::getenv("NPTAD_OUT");
    cfg.out_dir = (env != nullptr && *env != '\0') ? env : "nptad_runs";
  }
  cfg.out_dir = absolute_path(cfg.out_dir);
  if (!cfg.dataset.empty()) cfg.dataset = absolute_path(cfg.dataset);
  if (cfg.command == "train" && cfg.checkpoint.empty())
    cfg.checkpoint = cfg.out_dir + "/model.ckpt";
  if (!cfg.checkpoint.empty()) cfg.checkpoint = absolute_path(cfg.checkpoint);
  if (cfg.seed_count < 1)
    throw std::invalid_argument("--seeds must be at least 1");
  cfg.experiment.seeds.resize(static_cast<std::size_t>(cfg.seed_count));
  std::iota(cfg.experiment.seeds.begin(), cfg.experiment.seeds.end(), 0);
}

void ensure_out_dir(const RunConfig& cfg) {
  std::error_code ec;
  fs::create_directories(cfg.out_dir, ec);
  if (ec) throw io_error("cannot create output directory '" + cfg.out_dir + "': " + ec.message());
}

void emit_config_echo(const RunConfig& cfg) {
  // Named per command so train + score into one directory keep both echoes.
  const std::string path = cfg.out_dir + "/" + cfg.command + "_config.cfg";
  write_text_file(path, render_config_echo(cfg));
  std::cout << "config_echo=" << path << '\n';
}

TabularDataset load_dataset(const RunConfig& cfg) {
  if (cfg.dataset.empty())
    throw std::invalid_argument("--dataset is required for '" + cfg.command + "'");
  return load_csv(cfg.dataset, cfg.label_col, cfg.categorical);
}

void print_warnings(std::span<const std::string> warnings) {
  for (const std::string& w : warnings) std::cerr << "warning: " << w << '\n';
}

// ----------------------------------------------------------------- train --

int cmd_train(const RunConfig& cfg) {
  if (!is_model_variant(cfg.experiment.method))
    throw std::invalid_argument("variant '" + to_string(cfg.experiment.method) +
                                "' has no training step; use bench or score directly");
  const TabularDataset data = load_dataset(cfg);
  const Split split = split_dataset(data, {cfg.experiment.train_fraction, cfg.seed});
  ensure_out_dir(cfg);

  NptConfig model_cfg = cfg.experiment.model;
  model_cfg.aba_only = cfg.experiment.method == Method::transformer;

  const std::string log_path = cfg.out_dir + "/train_log.txt";
  std::ofstream log_file(log_path, std::ios::trunc);
  if (!log_file) throw io_error("cannot open '" + log_path + "' for writing");
  const int epoch_stride = std::max(1, cfg.experiment.train.epochs / 10);
  int last_echoed = -1;
  const TrainLogFn log = [&](const TrainLogEntry& entry) {
    log_file << "epoch=" << entry.epoch << " step=" << entry.step << " lr=" << fmt17(entry.lr)
             << " loss=" << fmt17(entry.loss) << " grad_norm=" << fmt17(entry.grad_norm)
             << '\n';
    if (entry.epoch % epoch_stride == 0 && entry.epoch != last_echoed) {
      last_echoed = entry.epoch;
      std::cout << "epoch=" << entry.epoch << " loss=" << fmt17(entry.loss) << '\n';
    }
  };

  const NptModel model =
      train_npt(model_cfg, cfg.experiment.train, split.train, cfg.seed, log);
  log_file.flush();
  if (!log_file) throw io_error("write to '" + log_path + "' failed");
  save_checkpoint(cfg.checkpoint, model, cfg.experiment.train);

  emit_config_echo(cfg);
  std::cout << "train_rows=" << split.train.n_rows() << " features=" << split.train.d()
            << '\n';
  std::cout << "train_log=" << log_path << '\n';
  std::cout << "checkpoint=" << cfg.checkpoint << '\n';
  return kExitOk;
}

// ----------------------------------------------------------------- score --

int cmd_score(const RunConfig& cfg) {
  const TabularDataset data = load_dataset(cfg);
  const Split split = split_dataset(data, {cfg.experiment.train_fraction, cfg.seed});

  SeedOutcome outcome;
  outcome.seed = cfg.seed;
  outcome.labels = split.val.labels;
  outcome.row_ids = split.val.row_ids;

  const ExperimentConfig& exp = cfg.experiment;
  if (is_model_variant(exp.method)) {
    if (cfg.checkpoint.empty())
      throw std::invalid_argument("score with variant '" + to_string(exp.method) +
                                  "' requires --checkpoint");
    const NptModel model = load_checkpoint(cfg.checkpoint);
    const bool want_aba_only = exp.method == Method::transformer;
    if (model.config().aba_only != want_aba_only)
      throw std::invalid_argument(
          "checkpoint '" + cfg.checkpoint + "' holds a " +
          (model.config().aba_only ? std::string("transformer") : std::string("npt")) +
          " model but --variant asked for " + to_string(exp.method));
    const MaskBank bank =
        build_mask_bank(static_cast<int>(model.schema().d()), exp.r, exp.mask_limit);
    ScoreConfig sc;
    sc.agg = exp.agg;
    sc.context_budget = exp.context_budget;
    sc.per_sample = exp.per_sample;
    sc.seed = cfg.seed;
    sc.workers = exp.workers;
    const AnomalyScores res = score_batch(model, split.train, split.val, bank, sc);
    print_warnings(res.warnings);
    outcome.scores = res.scores;
  } else if (exp.method == Method::mask_knn) {
    const MaskBank bank =
        build_mask_bank(static_cast<int>(split.train.d()), exp.r, exp.mask_limit);
    KnnConfig kc;
    kc.k = exp.k;
    kc.bank_cap = exp.knn_bank_cap;
    kc.seed = cfg.seed;
    const AnomalyScores res = mask_knn_score(split.val, split.train, bank, kc);
    print_warnings(res.warnings);
    outcome.scores = res.scores;
  } else {
    const AnomalyScores res = knn_score(split.val, split.train, exp.k);
    print_warnings(res.warnings);
    outcome.scores = res.scores;
  }

  outcome.f1 = f1_at_count(outcome.scores, outcome.labels);
  outcome.auroc = auroc(outcome.scores, outcome.labels);

  ensure_out_dir(cfg);
  const std::string scores_path =
      cfg.out_dir + "/scores_seed" + std::to_string(cfg.seed) + ".csv";
  write_score_csv(scores_path, outcome);
  std::ostringstream metrics;
  metrics << "seed=" << cfg.seed << '\n'
          << "n_val=" << outcome.scores.size() << '\n'
          << "f1=" << fmt17(outcome.f1) << '\n'
          << "auroc=" << fmt17(outcome.auroc) << '\n';
  write_text_file(cfg.out_dir + "/metrics.txt", metrics.str());
  emit_config_echo(cfg);
  std::cout << "scores=" << scores_path << '\n';
  std::cout << "seed=" << cfg.seed << " n_val=" << outcome.scores.size()
            << " f1=" << fmt17(outcome.f1) << " auroc=" << fmt17(outcome.auroc) << '\n';
  return kExitOk;
}

// ----------------------------------------------------------------- bench --

int cmd_bench(const RunConfig& cfg) {
  const TabularDataset data = load_dataset(cfg);
  const ScoreReport report = run_experiment(data, cfg.experiment);

  ensure_out_dir(cfg);
  for (const SeedOutcome& seed : report.per_seed) {
    const std::string path =
        cfg.out_dir + "/scores_seed" + std::to_string(seed.seed) + ".csv";
    write_score_csv(path, seed);
    std::cout << "seed=" << seed.seed << " f1=" << fmt17(seed.f1)
              << " auroc=" << fmt17(seed.auroc) << '\n';
  }
  write_report_csv(cfg.out_dir + "/report.csv", report);
  write_report_json(cfg.out_dir + "/report.json", report);
  emit_config_echo(cfg);
  std::cout << "report_csv=" << cfg.out_dir << "/report.csv" << '\n';
  std::cout << "report_json=" << cfg.out_dir << "/report.json" << '\n';
  std::cout << "f1_mean=" << fmt17(report.f1_mean) << " f1_std=" << fmt17(report.f1_std)
            << " auroc_mean=" << fmt17(report.auroc_mean)
            << " auroc_std=" << fmt17(report.auroc_std) << '\n';
  return kExitOk;
}

// ---------------------------------------------------------------- contam --

int cmd_contam(const RunConfig& cfg) {
  // 0% to 10% training contamination in 1% steps: 11 points.
  std::vector<double> shares(11);
  for (int i = 0; i < 11; ++i) shares[i] = i / 100.0;

  const std::vector<ContamPoint> curve =
      run_contamination(cfg.experiment, cfg.synthetic, shares);

  ensure_out_dir(cfg);
  const std::string curve_path = cfg.out_dir + "/contam_curve.csv";
  write_contam_csv(curve_path, curve);
  emit_config_echo(cfg);
  for (const ContamPoint& point : curve)
    std::cout << "share=" << fmt17(point.share) << " f1_mean=" << fmt17(point.report.f1_mean)
              << " f1_std=" << fmt17(point.report.f1_std)
              << " auroc_mean=" << fmt17(point.report.auroc_mean)
              << " auroc_std=" << fmt17(point.report.auroc_std) << '\n';
  std::cout << "curve=" << curve_path << '\n';
  return kExitOk;
}

// -------------------------------------------------------------- maskbank --

int cmd_maskbank(const RunConfig& cfg) {
  const MaskBank bank = build_mask_bank(cfg.bank_d, cfg.bank_r, cfg.experiment.mask_limit);
  std::cout << "d=" << bank.d << '\n' << "r=" << bank.r << '\n' << "m=" << bank.size() << '\n';
  for (const Mask& mask : bank.masks) {
    std::cout << "mask=";
    for (const std::uint8_t bit : mask.bits) std::cout << int(bit);
    std::cout << '\n';
  }
  return kExitOk;
}

// ------------------------------------------------------------ CLI wiring --

void add_data_options(CLI::App& sub, RunConfig& cfg) {
  sub.add_option("--dataset", cfg.dataset, "input CSV (header row, 0/1 label column)");
  sub.add_option("--label-col", cfg.label_col, "label column name");
  sub.add_option("--categorical", cfg.categorical,
                 "columns to treat as categorical (adds to the .schema.json sidecar)");
}

void add_variant_options(CLI::App& sub, RunConfig& cfg) {
  static const std::map<std::string, Method> kVariants{
      {"npt", Method::npt},
      {"transformer", Method::transformer},
      {"mask-knn", Method::mask_knn},
      {"knn", Method::knn}};
  sub.add_option("--variant", cfg.experiment.method, "model variant")
      ->transform(CLI::CheckedTransformer(kVariants, CLI::ignore_case));
  sub.add_option("--preset", cfg.preset, "named per-dataset hyperparameters")
      ->check(CLI::IsMember({"thyroid", "pima", "breastw"}));
}

void add_model_options(CLI::App& sub, RunConfig& cfg) {
  NptConfig& m = cfg.experiment.model;
  sub.add_option("--depth", m.depth, "attention blocks (alternating between-/within-sample)");
  sub.add_option("--heads", m.heads, "attention heads");
  sub.add_option("--embed-dim", m.embed_dim, "per-feature embedding width");
  sub.add_option("--dropout", m.dropout, "attention/feed-forward dropout");
  sub.add_option("--ff-mult", m.ff_mult, "feed-forward expansion factor");
}

void add_train_options(CLI::App& sub, RunConfig& cfg) {
  TrainConfig& t = cfg.experiment.train;
  sub.add_option("--epochs", t.epochs, "training epochs");
  sub.add_option("--batch-size", t.batch_size, "rows per step; -1 = full batch");
  sub.add_option("--lr", t.lr, "base learning rate");
  sub.add_option("--pmask", t.p_mask, "per-entry mask probability during training");
}

void add_scoring_options(CLI::App& sub, RunConfig& cfg) {
  ExperimentConfig& e = cfg.experiment;
  sub.add_option("--r", e.r, "mask every feature subset up to this size");
  sub.add_option("--k", e.k, "neighbors for the knn baselines");
  static const std::map<std::string, Aggregation> kAggs{{"mean", Aggregation::mean},
                                                        {"max", Aggregation::max}};
  sub.add_option("--agg", e.agg, "per-mask loss aggregation")
      ->transform(CLI::CheckedTransformer(kAggs, CLI::ignore_case));
  sub.add_flag("--per-sample", e.per_sample,
               "score each row alone with the context instead of batching rows together");
  sub.add_option("--context-budget", e.context_budget,
                 "max context rows fed beside scored rows");
  sub.add_option("--bank-cap", e.knn_bank_cap, "max imputation bank rows for mask-knn");
  sub.add_option("--mask-limit", e.mask_limit, "refuse mask banks larger than this");
}

void add_workers_option(CLI::App& sub, RunConfig& cfg) {
  sub.add_option("--workers", cfg.experiment.workers,
                 "parallel workers for seed/mask fan-out (never changes results)");
}

void add_out_options(CLI::App& sub, RunConfig& cfg) {
  sub.add_option("--out", cfg.out_dir, "output directory (default $NPTAD_OUT, else ./nptad_runs)");
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
  RunConfig cfg;
  CLI::App app{"NPT-AD: transformer-based anomaly detection for tabular data"};
  app.require_subcommand(1);
  // Config files are processed by the root app; flags given after a
  // subcommand name (like --config itself) fall through to it.
  app.set_config("--config", "", "load defaults from a config echo");

  CLI::App* train = app.add_subcommand("train", "train a model and write a checkpoint");
  train->fallthrough(true);
  add_data_options(*train, cfg);
  add_variant_options(*train, cfg);
  add_model_options(*train, cfg);
  add_train_options(*train, cfg);
  train->add_option("--train-fraction", cfg.experiment.train_fraction,
                    "share of normal rows used for training");
  train->add_option("--seed", cfg.seed, "split/init seed");
  train->add_option("--checkpoint", cfg.checkpoint, "checkpoint path (default <out>/model.ckpt)");
  add_out_options(*train, cfg);

  CLI::App* score = app.add_subcommand("score", "score the held-out rows of a dataset");
  score->fallthrough(true);
  add_data_options(*score, cfg);
  add_variant_options(*score, cfg);
  add_scoring_options(*score, cfg);
  score->add_option("--train-fraction", cfg.experiment.train_fraction,
                    "share of normal rows used as context");
  score->add_option("--seed", cfg.seed, "split/context seed (match the train run)");
  score->add_option("--checkpoint", cfg.checkpoint, "trained model to load");
  add_workers_option(*score, cfg);
  add_out_options(*score, cfg);

  CLI::App* bench = app.add_subcommand("bench", "full multi-seed benchmark on one dataset");
  bench->fallthrough(true);
  add_data_options(*bench, cfg);
  add_variant_options(*bench, cfg);
  add_model_options(*bench, cfg);
  add_train_options(*bench, cfg);
  add_scoring_options(*bench, cfg);
  bench->add_option("--train-fraction", cfg.experiment.train_fraction,
                    "share of normal rows used for training");
  bench->add_option("--seeds", cfg.seed_count, "number of seeds (0..N-1)");
  add_workers_option(*bench, cfg);
  add_out_options(*bench, cfg);

  CLI::App* contam = app.add_subcommand(
      "contam", "synthetic training-contamination sweep (0%..10% in 1% steps)");
  contam->fallthrough(true);
  add_variant_options(*contam, cfg);
  add_model_options(*contam, cfg);
  add_train_options(*contam, cfg);
  add_scoring_options(*contam, cfg);
  contam->add_option("--seeds", cfg.seed_count, "number of seeds per share (0..N-1)");
  add_workers_option(*contam, cfg);
  contam->add_option("--train-normals", cfg.synthetic.train_normals,
                     "normal rows on the train side");
  contam->add_option("--val-normals", cfg.synthetic.val_normals,
                     "normal rows on the validation side");
  contam->add_option("--val-anomalies", cfg.synthetic.val_anomalies,
                     "anomalous rows on the validation side");
  add_out_options(*contam, cfg);

  CLI::App* maskbank = app.add_subcommand("maskbank", "list the deterministic mask bank");
  maskbank->fallthrough(true);
  maskbank->add_option("--d", cfg.bank_d, "feature count")->required();
  maskbank->add_option("--r", cfg.bank_r, "max subset size")->required();
  maskbank->add_option("--mask-limit", cfg.experiment.mask_limit,
                       "refuse banks larger than this");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  CLI::App* parsed = app.get_subcommands().front();
  cfg.command = parsed->get_name();

  try {
    if (cfg.command == "maskbank") return cmd_maskbank(cfg);
    finalize_config(*parsed, cfg);
    if (cfg.command == "train") return cmd_train(cfg);
    if (cfg.command == "score") return cmd_score(cfg);
    if (cfg.command == "bench") return cmd_bench(cfg);
    return cmd_contam(cfg);
  } catch (const io_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const schema_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::length_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::overflow_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return kExitInternal;
  }
}

}  // namespace nptad
