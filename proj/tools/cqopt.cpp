#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cqopt/cli/commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"conformalized quantile-surrogate optimization harness"};
  app.require_subcommand(1);

  std::string run_manifest;
  int workers = 0;  // 0: CQOPT_WORKERS env, then 1
  bool resume = false;
  auto* run = app.add_subcommand("run", "execute a benchmark x algorithm x seed grid");
  run->add_option("manifest", run_manifest, "manifest JSON path")->required();
  run->add_option("--workers", workers, "worker pool size (default: CQOPT_WORKERS or 1)");
  run->add_flag("--resume", resume, "skip cells whose .done checksum matches");

  std::string cal_manifest;
  auto* calibrate =
      app.add_subcommand("calibrate", "greedy calibration experiment across interval variants");
  calibrate->add_option("manifest", cal_manifest, "manifest JSON path")->required();

  std::vector<std::string> bench_specs;
  std::string screen = "size";
  int top_k = 5;
  std::string strat_out = "stratify_manifest.json";
  std::uint64_t strat_seed = 0;
  int n_sample = 10000;
  int k_neighbors = 50;
  int gp_subsample = 1000;
  auto* stratify = app.add_subcommand("stratify", "rank benchmarks by a stratification screen");
  stratify->add_option("benchmarks", bench_specs,
                       "CSV paths or synthetic:<kind>[:noise_seed]")
      ->required();
  stratify->add_option("--screen", screen, "size|hetero|asym")->required();
  stratify->add_option("--top", top_k, "manifest size (default 5)");
  stratify->add_option("--output", strat_out, "manifest output path");
  stratify->add_option("--seed", strat_seed, "sampling seed");
  stratify->add_option("--samples", n_sample, "sample count (default 10000)");
  stratify->add_option("--neighbors", k_neighbors, "asymmetry neighborhood size (default 50)");
  stratify->add_option("--gp-subsample", gp_subsample,
                       "heteroskedasticity fit subsample cap (default 1000)");

  std::string results_dir;
  std::string axis = "iteration";
  bool wilcoxon = false;
  auto* aggregate = app.add_subcommand("aggregate", "rank paths and significance tables");
  aggregate->add_option("results", results_dir, "results directory")->required();
  aggregate->add_option("--axis", axis, "iteration|runtime");
  aggregate->add_flag("--wilcoxon", wilcoxon, "emit BH-adjusted pairwise p-values");

  CLI11_PARSE(app, argc, argv);

  if (run->parsed()) return cqopt::cmd_run(run_manifest, workers, resume);
  if (calibrate->parsed()) return cqopt::cmd_calibrate(cal_manifest);
  if (stratify->parsed())
    return cqopt::cmd_stratify(bench_specs, screen, top_k, strat_out, strat_seed,
                               n_sample, k_neighbors, gp_subsample);
  if (aggregate->parsed()) return cqopt::cmd_aggregate(results_dir, axis, wilcoxon);
  return 1;
}
