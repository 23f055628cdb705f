#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "nptad/data.hpp"
#include "nptad/eval.hpp"

namespace nptad {

// Process exit codes, sysexits-flavored: one code per error family so shell
// callers can tell a typo from a broken file from an impossible config.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 64;     // unknown flag / malformed invocation
inline constexpr int kExitConfig = 65;    // parsed fine but violates a contract
inline constexpr int kExitIo = 66;        // missing or malformed input file
inline constexpr int kExitInternal = 70;  // anything unexpected

inline constexpr int kReportSchemaVersion = 1;

// Per-dataset training settings shipped as named presets.  A preset fills
// exactly the fields below and only where the user didn't pass the matching
// flag (or config-file key) themselves.
struct Preset {
  std::string_view name;
  int epochs;
  int batch_size;  // -1 = one full pass per step
  double lr;
  double p_mask;
  int r;
  int embed_dim;
};

std::span<const Preset> presets();
// Throws std::invalid_argument naming the unknown preset.
const Preset& preset_by_name(std::string_view name);

// Everything one CLI invocation resolved to: data source, artifact paths and
// the full experiment description.  The config echo written next to outputs
// is exactly this state, so feeding it back via --config reproduces the run.
struct RunConfig {
  std::string command;  // train | score | bench | contam | maskbank

  // data source (train/score/bench read a CSV; contam generates)
  std::string dataset;
  std::string label_col = "label";
  std::vector<std::string> categorical;  // forced-categorical column names

  std::string preset;      // applied to unset fields after parsing
  std::string out_dir;     // resolved: --out, else $NPTAD_OUT, else ./nptad_runs
  std::string checkpoint;  // train writes here; score loads from here

  std::uint64_t seed = 0;  // train/score single-run seed
  int seed_count = 1;      // bench/contam: seeds 0..N-1

  ExperimentConfig experiment;  // variant + every model/train/scoring knob
  SyntheticSpec synthetic;      // contam generator geometry

  int bank_d = 0;  // maskbank listing
  int bank_r = 0;
};

// Artifact writers.  All numbers are emitted with enough digits to round-trip
// doubles exactly, so re-running a resolved config reproduces files
// byte-for-byte.
void write_score_csv(const std::string& path, const SeedOutcome& outcome);
void write_report_csv(const std::string& path, const ScoreReport& report);
void write_report_json(const std::string& path, const ScoreReport& report);
void write_contam_csv(const std::string& path, std::span<const ContamPoint> curve);

// The resolved key=value config echo for `cfg`, in the exact format the
// matching subcommand's --config option reads back.
std::string render_config_echo(const RunConfig& cfg);

// Full command-line entry point; never throws.  Prints a one-line diagnostic
// to stderr and returns one of the kExit* codes on failure.
int run_cli(int argc, const char* const* argv);

}  // namespace nptad
