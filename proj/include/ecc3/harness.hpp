#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ecc3/adapter.hpp"
#include "ecc3/bounds.hpp"
#include "ecc3/conformal.hpp"
#include "ecc3/io.hpp"
#include "ecc3/metrics.hpp"
#include "ecc3/synth.hpp"
#include "ecc3/tempering.hpp"

namespace ecc3 {

inline constexpr const char* kToolName = "ecc3";
inline constexpr const char* kToolVersion = "1.0.0";

// Everything a command run needs. When probs_path is absent the synthetic
// benchmark configured in `synth` is generated in memory instead, so the
// whole pipeline runs without input files.
struct ExperimentConfig {
  std::optional<std::string> probs_path;
  std::optional<std::string> labels_path;
  std::optional<std::string> oracle_path;
  std::string out_dir = "out";

  double alpha = 0.1;
  ScoreConfig score_cfg;
  SplitRatios ratios;  // 2:1:4:3
  std::size_t n_splits = 100;
  std::uint64_t seed = 42;

  TrainConfig train_cfg;
  std::vector<std::size_t> hidden_dims = {128};
  bool input_log_probs = false;
  std::size_t repeats = 1;

  std::vector<double> sweep_grid;  // empty = 40-point log grid [0.05, 20]
  std::optional<double> entropy_threshold;
  std::optional<std::string> adapter_path;  // sweep/evaluate on corrected data

  std::size_t wsc_directions = 20;  // per-split reports; 0 disables
  double wsc_delta = 0.25;

  double tau = 0.05;
  std::size_t bound_trials = 200;
  std::size_t prop1_samples = 100000;
  std::vector<std::size_t> prop1_class_counts = {2, 5, 10, 50, 100};
  bool strict = false;

  SynthConfig synth;
  bool synth_imbalanced = false;

  static ExperimentConfig from_kv(const KvConfig& kv);
  // Every field spelled out, defaults included; this is what gets hashed and
  // embedded in reports.
  KvConfig to_kv() const;
};

struct SplitRecord {
  std::size_t split_index = 0;  // 1-based; the replica seed is seed + index
  std::size_t repeat = 0;
  double eta_hat = 0.0;
  EvalReport eval;
  double min_class_coverage = 0.0;
  double coverage_distance_l1 = 0.0;
  double coverage_distance_l2 = 0.0;
};

struct RunReport {
  std::string command;
  std::string config_hash;
  std::uint64_t seed = 0;
  KvConfig effective_config;

  std::vector<SplitRecord> splits;
  std::map<std::string, MeanStd> aggregate;

  std::vector<std::vector<EpochRecord>> histories;  // one per training repeat
  std::vector<std::string> adapter_files;

  std::vector<SweepPoint> sweep;
  std::vector<SweepPoint> pareto;
  std::optional<SweepPoint> entropy_selection;

  std::map<std::string, BoundReport> bounds;
  std::map<std::string, double> stats;  // command-specific scalars
  bool bounds_ok = true;

  std::string to_json_text() const;
  std::string summary() const;
};

Dataset load_or_generate(const ExperimentConfig& cfg);

RunReport cmd_evaluate(const ExperimentConfig& cfg);
RunReport cmd_train(const ExperimentConfig& cfg);
RunReport cmd_sweep(const ExperimentConfig& cfg);
RunReport cmd_verify_bounds(const ExperimentConfig& cfg);
RunReport cmd_synth_gen(const ExperimentConfig& cfg);

// Dispatch by subcommand name; unknown names raise a config error. Writes
// report.json plus the flat CSV tables into cfg.out_dir.
RunReport run_command(const ExperimentConfig& cfg, const std::string& name);

void write_outputs(const RunReport& report, const std::string& out_dir);

}  // namespace ecc3
