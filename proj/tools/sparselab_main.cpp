// sparselab CLI: synthetic-data generation, experiment sweeps and report
// emission. Exit codes: 0 success, 2 config error, 3 numeric failure.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "sparselab/csv.hpp"
#include "sparselab/experiments.hpp"
#include "sparselab/rng.hpp"
#include "sparselab/synthgen.hpp"
#include "sparselab/types.hpp"

namespace {

struct GlobalFlags {
  std::string config_path;
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::string out_dir;
  int threads = 0;
  bool large = false;
};

sparselab::ExperimentConfig resolve_config(const std::string& experiment,
                                           const GlobalFlags& flags) {
  sparselab::ExperimentConfig cfg =
      flags.config_path.empty()
          ? sparselab::default_config(experiment)
          : sparselab::load_config_file(flags.config_path, experiment);
  if (cfg.experiment != experiment)
    throw std::invalid_argument("config file is for experiment '" + cfg.experiment +
                                "', command is '" + experiment + "'");
  if (flags.seed_set) cfg.master_seed = flags.seed;
  if (!flags.out_dir.empty()) cfg.out_dir = flags.out_dir;
  if (flags.threads > 0) cfg.threads = flags.threads;
  if (flags.large && !cfg.large) sparselab::apply_large(cfg);
  return cfg;
}

void run_metric_experiment(const std::string& experiment, const GlobalFlags& flags) {
  const sparselab::ExperimentConfig cfg = resolve_config(experiment, flags);
  auto records = sparselab::run_experiment(cfg);
  sparselab::emit_report(std::move(records), cfg.out_dir, cfg.format);
  std::cout << "wrote " << experiment << " outputs to " << cfg.out_dir << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"sparse inference under superposition: experiment harness"};
  app.require_subcommand(1);
  app.fallthrough();  // global flags may follow the subcommand

  GlobalFlags flags;
  app.add_option("--config", flags.config_path, "JSON config file");
  app.add_option("--seed", flags.seed, "master seed")->each([&flags](const std::string&) {
    flags.seed_set = true;
  });
  app.add_option("--out", flags.out_dir, "output directory");
  app.add_option("--threads", flags.threads, "worker threads for grid cells");
  app.add_flag("--large", flags.large, "enable the d_z >= 5000 / p = 1e5 cells");

  // gen-data options
  int gd_dz = 100, gd_k = 10, gd_dy = 0;
  long gd_p = 1000;
  auto* gen = app.add_subcommand("gen-data", "generate and export one dataset per split");
  gen->add_option("--dz", gd_dz, "latent dimension");
  gen->add_option("--k", gd_k, "active latents per sample");
  gen->add_option("--dy", gd_dy, "observation dimension (0 = CS bound)");
  gen->add_option("--p", gd_p, "samples per split");

  for (const char* name : {"phase", "vary-latents", "vary-samples", "vary-sparsity",
                           "frozen", "warmstart-decoder", "warmstart-encoder",
                           "lambda-sweep", "support"})
    app.add_subcommand(name, std::string("run the ") + name + " experiment");
  app.add_subcommand("theory-grid", "toy-model analytic vs Monte-Carlo grid");

  std::string report_records;
  auto* rep = app.add_subcommand("report", "rebuild series CSVs/SVGs from a records CSV");
  rep->add_option("--records", report_records, "path to a *_records.csv file")
      ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    app.exit(e);
    return 2;
  }

  try {
    const std::string sub = app.get_subcommands().front()->get_name();
    if (sub == "gen-data") {
      using namespace sparselab;
      const std::uint64_t master = flags.seed_set ? flags.seed : 1;
      const std::filesystem::path out =
          flags.out_dir.empty() ? std::filesystem::path("out")
                                : std::filesystem::path(flags.out_dir);
      std::filesystem::create_directories(out);
      const int d_y = gd_dy > 0 ? gd_dy : cs_bound_dim(gd_k, gd_dz);
      const MixingMatrix A = gen_mixing(d_y, gd_dz, seed_combine(master, "mixing"));
      write_mixing_csv(out / "mixing.csv", A);
      GenConfig gc{gd_dz, gd_k, d_y, gd_p, 0};
      const struct {
        const char* name;
        Split split;
      } splits[] = {{"train_id.csv", Split::IdTrain},
                    {"test_id.csv", Split::IdTest},
                    {"test_ood.csv", Split::OodTest}};
      for (const auto& s : splits) {
        gc.seed = seed_combine(master, s.name);
        write_dataset_csv(out / s.name, sample_split(gc, A, s.split));
      }
      std::cout << "wrote datasets (d_z=" << gd_dz << ", k=" << gd_k
                << ", d_y=" << d_y << ", p=" << gd_p << ") to " << out << "\n";
    } else if (sub == "theory-grid") {
      sparselab::run_theory_grid(resolve_config("theory-grid", flags));
      std::cout << "wrote theory grid\n";
    } else if (sub == "report") {
      const std::filesystem::path out =
          flags.out_dir.empty()
              ? std::filesystem::path(report_records).parent_path()
              : std::filesystem::path(flags.out_dir);
      sparselab::report_from_csv(report_records, out, "csv+svg");
      std::cout << "rebuilt report for " << report_records << "\n";
    } else {
      run_metric_experiment(sub, flags);
    }
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const sparselab::numeric_error& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
