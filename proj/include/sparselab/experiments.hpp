#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "sparselab/metrics.hpp"
#include "sparselab/sae.hpp"
#include "sparselab/synthgen.hpp"
#include "sparselab/types.hpp"

namespace sparselab {

enum class Method {
  FistaOracle,
  DlFista,
  SaeRelu,
  SaeJumpRelu,
  SaeTopK,
  SaeMp,
  FrozenFista,
  Refined,
  LinearProbe,
};

std::string to_string(Method m);
Method method_from_string(const std::string& name);

struct DataSizes {
  long p_train = 5000;
  long p_probe = 2000;   // dedicated ID split for fitting the logistic heads
  long p_id_test = 2000;
  long p_ood_test = 2000;
};

struct ExperimentConfig {
  std::string experiment;  // phase, vary-latents, vary-samples, vary-sparsity,
                           // frozen, warmstart-decoder, warmstart-encoder,
                           // lambda-sweep, support, theory-grid
  std::uint64_t master_seed = 1;
  std::vector<std::uint64_t> seeds = {0, 1, 2, 3, 4};
  std::vector<Method> methods;
  std::vector<SaeKind> sae_kinds = {SaeKind::Relu, SaeKind::JumpRelu,
                                    SaeKind::TopK, SaeKind::Mp};
  std::string out_dir = "out";
  int threads = 1;
  bool large = false;
  std::string format = "csv+svg";  // or "csv"
  DataSizes sizes;

  std::vector<int> d_z_list, k_list;
  std::vector<double> delta_list, lambda_list;
  std::vector<long> p_list;
  std::vector<int> round_checkpoints;  // warmstart-decoder
  std::vector<int> iter_budgets;       // warmstart-encoder

  double fista_lambda = 0.1;
  int fista_iters = 100;
  double fista_tol = 1e-7;
  int dl_rounds = 50;
  double dl_lambda = 0.1;
  double dl_inner_tol = 1e-5;  // code precision inside dictionary rounds
  SaeTrainConfig sae;
  double ridge_alpha = 1e-3;
  double logistic_l2 = 1e-4;

  int theory_grid_points = 10;
  long theory_mc_samples = 1000000;
};

/// Built-in desk-scale defaults per experiment (paper grids capped at
/// d_z = 1000 unless `large`).
ExperimentConfig default_config(const std::string& experiment);

/// Extends grids with the d_z >= 5000 / p = 1e5 cells.
void apply_large(ExperimentConfig& cfg);

/// Merges a JSON config (schema_version 1) over `cfg`. Unknown experiment
/// names and malformed values raise std::invalid_argument.
void merge_config_json(ExperimentConfig& cfg, const std::string& json_text);
ExperimentConfig load_config_file(const std::filesystem::path& path,
                                  const std::string& experiment_hint);

struct ExperimentRecord {
  std::string experiment;
  std::vector<std::pair<std::string, double>> grid;  // ordered; first key = x axis
  std::string method;
  std::string sae_kind;  // "" when not applicable
  std::uint64_t seed = 0;
  MetricRow metrics;
  double wall_time = 0;  // seconds; logged separately, never in the CSVs
};

/// Runs every cell x replicate of the configured experiment. Deterministic
/// for a fixed config and master seed, regardless of thread count.
std::vector<ExperimentRecord> run_experiment(const ExperimentConfig& cfg);

/// Writes `{experiment}_records.csv`, per-metric series CSVs
/// `{experiment}_{metric}_{split}.csv` (+ SVG charts when the format includes
/// svg) and `{experiment}_timing.log`. Records are sorted before writing.
void emit_report(std::vector<ExperimentRecord> records,
                 const std::filesystem::path& out_dir, const std::string& format);

/// Rebuilds series CSVs/SVGs from a previously written records CSV.
void report_from_csv(const std::filesystem::path& records_csv,
                     const std::filesystem::path& out_dir,
                     const std::string& format);

/// theory_grid.csv: `phi,theta,case,acc_analytic,acc_simulated,n` (+ chart).
void run_theory_grid(const ExperimentConfig& cfg);

/// Record-seed policy, exposed for tests: every published seed derives from
/// (master, experiment, replicate, grid point, method).
std::uint64_t record_seed(const ExperimentConfig& cfg, std::uint64_t replicate,
                          const std::vector<std::pair<std::string, double>>& grid,
                          const std::string& method, const std::string& kind);

}  // namespace sparselab
