#pragma once

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "cqopt/bench/rank_aggregation.hpp"
#include "cqopt/bench/screens.hpp"
#include "cqopt/bench/stats.hpp"
#include "cqopt/bench/synthetic.hpp"
#include "cqopt/bench/tabular.hpp"
#include "cqopt/cli/manifest.hpp"
#include "cqopt/cli/results_io.hpp"
#include "cqopt/metrics/calibration_metrics.hpp"
#include "cqopt/metrics/logistic_regression.hpp"
#include "cqopt/optimizer/calibration_run.hpp"
#include "cqopt/optimizer/study.hpp"

namespace cqopt {

namespace detail {

inline std::string sanitize_name(const std::string& name) {
  std::string out;
  for (char c : name) {
    const bool keep = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
                      (c >= '0' && c <= '9') || c == '.' || c == '-' || c == '_';
    out.push_back(keep ? c : '_');
  }
  return out;
}

inline int resolve_workers(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("CQOPT_WORKERS")) {
    const int parsed = std::atoi(env);
    if (parsed > 0) return parsed;
  }
  return 1;
}

inline std::unique_ptr<Objective> make_objective(
    const BenchmarkRef& ref,
    const std::map<std::string, TabularBenchmark>& tables) {
  if (ref.is_synthetic)
    return make_synthetic_objective(ref.kind, ref.noise_seed, ref.n1, ref.n2);
  return std::make_unique<TabularObjective>(tables.at(ref.path));
}

}  // namespace detail

// Runs the full benchmark x algorithm x seed grid, one JSON-lines file per
// study. --resume skips cells whose .done checksum still matches.
inline int cmd_run(const std::string& manifest_path, int workers_requested,
                   bool resume) {
  RunManifest manifest;
  try {
    manifest = load_manifest(manifest_path);
  } catch (const ManifestError& e) {
    std::cerr << e.what() << '\n';
    return 1;
  }

  std::error_code ec;
  std::filesystem::create_directories(manifest.output_dir, ec);
  if (ec) {
    std::cerr << "cannot create output directory " << manifest.output_dir
              << ": " << ec.message() << '\n';
    return 1;
  }

  std::map<std::string, TabularBenchmark> tables;
  for (const auto& bench : manifest.benchmarks) {
    if (bench.is_synthetic || tables.count(bench.path)) continue;
    try {
      tables.emplace(bench.path, load_tabular(bench.path));
    } catch (const std::exception& e) {
      std::cerr << "manifest error: field 'benchmarks' references unloadable "
                << bench.path << ": " << e.what() << '\n';
      return 1;
    }
  }

  struct Cell {
    const BenchmarkRef* bench;
    const AlgorithmSpec* algo;
    std::uint64_t seed;
    std::string file;
  };
  std::vector<Cell> cells;
  for (const auto& bench : manifest.benchmarks)
    for (const auto& algo : manifest.algorithms)
      for (auto seed : manifest.seeds) {
        Cell cell{&bench, &algo, seed, ""};
        cell.file = manifest.output_dir + "/" + detail::sanitize_name(algo.name) +
                    "__" + detail::sanitize_name(bench.display_name) + "__" +
                    std::to_string(seed) + ".jsonl";
        cells.push_back(std::move(cell));
      }

  std::vector<int> status(cells.size(), 0);  // 0 ok, 1 skipped, 2 failed
  std::vector<std::string> failure_reason(cells.size());
  std::vector<std::vector<std::string>> wallclock_rows(cells.size());
  std::atomic<std::size_t> next{0};

  auto run_cell = [&](std::size_t i) {
    const Cell& cell = cells[i];
    if (resume && result_file_complete(cell.file)) {
      status[i] = 1;
      return;
    }
    try {
      auto objective = detail::make_objective(*cell.bench, tables);
      StudyConfig cfg = cell.algo->study;
      cfg.seed = cell.seed;
      StudyResult result =
          cell.algo->random_baseline
              ? run_random_search(*objective, cfg)
              : run_study(*objective, cfg, cell.algo->surrogate,
                          cell.algo->acquisition);
      ResultWriter writer(cell.file);
      for (const auto& it : result.iterations) {
        writer.write_line(result_record_line(cell.algo->name,
                                             cell.bench->display_name, cell.seed,
                                             it, objective->space()));
        std::ostringstream row;
        row << cell.file << ',' << it.trial.iteration << ','
            << it.overhead_seconds;
        wallclock_rows[i].push_back(row.str());
      }
      writer.finish();
    } catch (const std::exception& e) {
      status[i] = 2;
      failure_reason[i] = e.what();
    }
  };

  const int workers = std::min<int>(detail::resolve_workers(workers_requested),
                                    static_cast<int>(cells.size()));
  if (workers <= 1) {
    for (std::size_t i = 0; i < cells.size(); ++i) run_cell(i);
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        while (true) {
          const std::size_t i = next.fetch_add(1);
          if (i >= cells.size()) return;
          run_cell(i);
        }
      });
    for (auto& t : pool) t.join();
  }

  std::ofstream wallclock(manifest.output_dir + "/wallclock.csv");
  wallclock << "file,iteration,overhead_seconds\n";
  for (const auto& rows : wallclock_rows)
    for (const auto& row : rows) wallclock << row << '\n';

  int exit_code = 0;
  for (std::size_t i = 0; i < cells.size(); ++i)
    if (status[i] == 2) {
      std::cerr << "study failed for " << cells[i].file << ": "
                << failure_reason[i] << '\n';
      exit_code = 2;
    }
  return exit_code;
}

namespace detail {

struct CalibrationCellSeries {
  // per seed, in iteration order
  std::vector<std::vector<bool>> covered;
  std::vector<std::vector<double>> widths;
  std::vector<std::vector<int>> iterations;
  std::vector<double> rolling_err, llr, mean_width;
};

}  // namespace detail

// Greedy calibration experiment across the interval variants; emits the
// calibration metrics table, the cumulative-coverage series, and rank
// summaries with bootstrap intervals.
inline int cmd_calibrate(const std::string& manifest_path) {
  RunManifest manifest;
  nlohmann::json raw;
  try {
    manifest = load_manifest(manifest_path);
    std::ifstream in(manifest_path);
    in >> raw;
  } catch (const ManifestError& e) {
    std::cerr << e.what() << '\n';
    return 1;
  }

  SurrogateSpec surrogate;
  StudyConfig base_cfg;
  try {
    if (raw.contains("calibration")) {
      const auto& c = raw["calibration"];
      if (!c.is_object()) throw ManifestError("calibration", "must be an object");
      for (const auto& [key, value] : c.items()) {
        (void)value;
        if (key != "surrogate" && key != "study")
          throw ManifestError("calibration." + key, "is not a calibration setting");
      }
      if (c.contains("surrogate"))
        detail::parse_surrogate_spec(c["surrogate"], surrogate,
                                     "calibration.surrogate");
      if (c.contains("study"))
        detail::parse_study_overrides(c["study"], base_cfg, "calibration.study");
    }
  } catch (const ManifestError& e) {
    std::cerr << e.what() << '\n';
    return 1;
  }

  std::error_code ec;
  std::filesystem::create_directories(manifest.output_dir, ec);
  if (ec) {
    std::cerr << "cannot create output directory " << manifest.output_dir
              << ": " << ec.message() << '\n';
    return 1;
  }

  std::map<std::string, TabularBenchmark> tables;
  for (const auto& bench : manifest.benchmarks) {
    if (bench.is_synthetic || tables.count(bench.path)) continue;
    try {
      tables.emplace(bench.path, load_tabular(bench.path));
    } catch (const std::exception& e) {
      std::cerr << "manifest error: field 'benchmarks' references unloadable "
                << bench.path << ": " << e.what() << '\n';
      return 1;
    }
  }

  const std::vector<CalibrationVariant> variants = default_calibration_variants();
  std::vector<double> confidences = base_cfg.monitored_confidences;
  std::sort(confidences.begin(), confidences.end());

  // (variant, dataset, confidence) -> per-seed series
  std::map<std::tuple<std::size_t, std::string, double>,
           detail::CalibrationCellSeries>
      table;

  try {
    for (const auto& bench : manifest.benchmarks) {
      for (auto seed : manifest.seeds) {
        auto objective = detail::make_objective(bench, tables);
        StudyConfig cfg = base_cfg;
        cfg.seed = seed;
        cfg.monitored_confidences = confidences;
        CalibrationRunResult run =
            greedy_calibration_run(*objective, cfg, surrogate, variants);

        for (std::size_t v = 0; v < variants.size(); ++v) {
          for (double conf : confidences) {
            std::vector<bool> covered;
            std::vector<double> lo, hi;
            std::vector<int> iters;
            std::vector<Configuration> configs;
            for (const auto& rec : run.series[v].records) {
              if (std::abs(rec.confidence - conf) > 1e-9) continue;
              covered.push_back(!rec.breach);
              lo.push_back(rec.lo);
              hi.push_back(rec.hi);
              iters.push_back(rec.iteration);
              configs.push_back(
                  run.trials[static_cast<std::size_t>(rec.iteration)].config);
            }
            if (covered.empty())
              throw std::runtime_error(
                  "calibration run produced no records; increase the budget");
            FeatureSet fs = build_features(configs, objective->space());
            std::vector<bool> breaches(covered.size());
            for (std::size_t i = 0; i < covered.size(); ++i)
              breaches[i] = !covered[i];

            auto& cell = table[{v, bench.display_name, conf}];
            cell.covered.push_back(covered);
            std::vector<double> widths(lo.size());
            for (std::size_t i = 0; i < lo.size(); ++i) widths[i] = hi[i] - lo[i];
            cell.widths.push_back(widths);
            cell.iterations.push_back(iters);
            cell.rolling_err.push_back(rolling_coverage_error(covered, conf, 20));
            cell.llr.push_back(llr_statistic(breaches, fs.one_hot));
            cell.mean_width.push_back(mean_interval_width(lo, hi));
          }
        }
      }
    }
  } catch (const std::exception& e) {
    std::cerr << "calibration run failed: " << e.what() << '\n';
    return 2;
  }

  auto mean_of = [](const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
  };

  std::ofstream metrics(manifest.output_dir + "/calibration_metrics.csv");
  metrics << "variant,dataset,confidence,rolling_cov_err,llr,mean_width\n";
  for (std::size_t v = 0; v < variants.size(); ++v)
    for (const auto& bench : manifest.benchmarks)
      for (double conf : confidences) {
        const auto& cell = table.at({v, bench.display_name, conf});
        metrics << to_string(variants[v]) << ',' << bench.display_name << ','
                << detail::format_double(conf) << ','
                << detail::format_double(mean_of(cell.rolling_err)) << ','
                << detail::format_double(mean_of(cell.llr)) << ','
                << detail::format_double(mean_of(cell.mean_width)) << '\n';
      }
  metrics.close();

  std::ofstream cumulative(manifest.output_dir + "/calibration_cumulative.csv");
  cumulative << "variant,dataset,confidence,iteration,cumulative_coverage\n";
  for (std::size_t v = 0; v < variants.size(); ++v)
    for (const auto& bench : manifest.benchmarks)
      for (double conf : confidences) {
        const auto& cell = table.at({v, bench.display_name, conf});
        std::size_t n_pos = cell.covered.front().size();
        for (const auto& c : cell.covered) n_pos = std::min(n_pos, c.size());
        std::vector<std::vector<double>> per_seed;
        for (const auto& c : cell.covered) per_seed.push_back(cumulative_coverage(c));
        for (std::size_t pos = 0; pos < n_pos; ++pos) {
          double acc = 0.0;
          for (const auto& series : per_seed) acc += series[pos];
          cumulative << to_string(variants[v]) << ',' << bench.display_name << ','
                     << detail::format_double(conf) << ','
                     << cell.iterations.front()[pos] << ','
                     << detail::format_double(
                            acc / static_cast<double>(per_seed.size()))
                     << '\n';
        }
      }
  cumulative.close();

  // rank summaries over (dataset x confidence) cells of seed-averaged metrics
  std::ofstream ranks_csv(manifest.output_dir + "/calibration_ranks.csv");
  ranks_csv << "metric,variant,mean_rank,ci_lo,ci_hi\n";
  const std::vector<std::string> metric_names = {"rolling_cov_err", "llr",
                                                 "mean_width"};
  for (const auto& metric_name : metric_names) {
    std::vector<std::vector<double>> cells_by_variant(variants.size());
    for (std::size_t v = 0; v < variants.size(); ++v)
      for (const auto& bench : manifest.benchmarks)
        for (double conf : confidences) {
          const auto& cell = table.at({v, bench.display_name, conf});
          double value = 0.0;
          if (metric_name == "rolling_cov_err")
            value = mean_of(cell.rolling_err);
          else if (metric_name == "llr")
            value = mean_of(cell.llr);
          else
            value = mean_of(cell.mean_width);
          cells_by_variant[v].push_back(value);
        }
    const RankSummary summary =
        rank_metrics_across_variants(cells_by_variant, 0x72616e6bULL);
    for (std::size_t v = 0; v < variants.size(); ++v)
      ranks_csv << metric_name << ',' << to_string(variants[v]) << ','
                << detail::format_double(summary.mean_rank[v]) << ','
                << detail::format_double(summary.ci_lo[v]) << ','
                << detail::format_double(summary.ci_hi[v]) << '\n';
  }
  ranks_csv.close();
  return 0;
}

// Screens benchmarks, prints a descending ranking, and writes a top-K
// manifest fragment.
inline int cmd_stratify(const std::vector<std::string>& bench_specs,
                        const std::string& screen, int top_k,
                        const std::string& output_path, std::uint64_t seed,
                        int n_sample, int k_neighbors, int gp_subsample) {
  if (bench_specs.empty()) {
    std::cerr << "stratify: need at least one benchmark\n";
    return 1;
  }
  if (screen != "size" && screen != "hetero" && screen != "asym") {
    std::cerr << "stratify: unknown screen '" << screen << "'\n";
    return 1;
  }

  struct Entry {
    std::string spec;
    std::string name;
    double score;
  };
  std::vector<Entry> entries;
  try {
    for (const auto& spec : bench_specs) {
      TabularBenchmark bench;
      if (spec.rfind("synthetic:", 0) == 0) {
        std::string rest = spec.substr(10);
        std::uint64_t noise_seed = 0;
        const auto colon = rest.find(':');
        if (colon != std::string::npos) {
          noise_seed = std::stoull(rest.substr(colon + 1));
          rest = rest.substr(0, colon);
        }
        bench = make_synthetic_table(synthetic_kind_from_string(rest), noise_seed);
      } else {
        bench = load_tabular(spec);
      }
      Rng rng(seed);
      double score = 0.0;
      if (screen == "size")
        score = screen_size(bench, n_sample, rng);
      else if (screen == "hetero")
        score = screen_heteroskedasticity(bench, n_sample, rng, gp_subsample);
      else
        score = screen_asymmetry(bench, n_sample, k_neighbors, rng);
      entries.push_back({spec, bench.name, score});
    }
  } catch (const std::exception& e) {
    std::cerr << "stratify: " << e.what() << '\n';
    return 1;
  }

  std::stable_sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.name < b.name;
  });

  std::cout << "rank,name,score\n";
  for (std::size_t i = 0; i < entries.size(); ++i)
    std::cout << i + 1 << ',' << entries[i].name << ','
              << detail::format_double(entries[i].score) << '\n';

  std::size_t keep = static_cast<std::size_t>(std::max(0, top_k));
  if (keep > entries.size()) {
    std::cerr << "stratify: --top " << top_k << " exceeds benchmark count "
              << entries.size() << ", keeping all\n";
    keep = entries.size();
  }
  nlohmann::json out;
  out["benchmarks"] = nlohmann::json::array();
  for (std::size_t i = 0; i < keep; ++i) {
    const auto& spec = entries[i].spec;
    if (spec.rfind("synthetic:", 0) == 0) {
      std::string rest = spec.substr(10);
      std::uint64_t noise_seed = 0;
      const auto colon = rest.find(':');
      if (colon != std::string::npos) {
        noise_seed = std::stoull(rest.substr(colon + 1));
        rest = rest.substr(0, colon);
      }
      out["benchmarks"].push_back(
          {{"synthetic", rest}, {"noise_seed", noise_seed}});
    } else {
      out["benchmarks"].push_back({{"path", spec}});
    }
  }
  std::ofstream manifest_out(output_path);
  if (!manifest_out) {
    std::cerr << "stratify: cannot write " << output_path << '\n';
    return 1;
  }
  manifest_out << out.dump(2) << '\n';
  return 0;
}

// Aggregates a completed results directory into rank-path CSVs and,
// optionally, a BH-adjusted pairwise significance table at full budget.
inline int cmd_aggregate(const std::string& results_dir, const std::string& axis_name,
                         bool wilcoxon, double bh_q = 0.05) {
  BudgetAxis axis;
  try {
    axis = budget_axis_from_string(axis_name);
  } catch (const std::exception& e) {
    std::cerr << "aggregate: " << e.what() << '\n';
    return 1;
  }

  std::vector<std::string> files;
  {
    std::error_code ec;
    std::filesystem::directory_iterator it(results_dir, ec);
    if (ec) {
      std::cerr << "aggregate: cannot read " << results_dir << ": "
                << ec.message() << '\n';
      return 1;
    }
    for (const auto& entry : it)
      if (entry.path().extension() == ".jsonl")
        files.push_back(entry.path().string());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) {
    std::cerr << "aggregate: no result files in " << results_dir << '\n';
    return 2;
  }

  // optional per-iteration optimizer overhead from the wallclock sidecar
  std::map<std::pair<std::string, int>, double> overhead;
  {
    std::ifstream wc(results_dir + "/wallclock.csv");
    std::string line;
    if (wc && std::getline(wc, line)) {
      while (std::getline(wc, line)) {
        const auto c1 = line.rfind(',');
        if (c1 == std::string::npos) continue;
        const auto c0 = line.rfind(',', c1 - 1);
        if (c0 == std::string::npos) continue;
        try {
          overhead[{line.substr(0, c0),
                    std::stoi(line.substr(c0 + 1, c1 - c0 - 1))}] =
              std::stod(line.substr(c1 + 1));
        } catch (const std::exception&) {
          continue;
        }
      }
    }
  }

  std::vector<RunSeries> series;
  try {
    for (const auto& file : files) {
      RunSeries run;
      double cum = 0.0;
      std::vector<std::pair<int, ParsedRecord>> records;
      for (const auto& line : read_result_lines(file)) {
        ParsedRecord rec = parse_result_record(line);
        records.emplace_back(rec.iteration, std::move(rec));
      }
      std::sort(records.begin(), records.end(),
                [](const auto& a, const auto& b) { return a.first < b.first; });
      for (const auto& [iter, rec] : records) {
        run.algorithm = rec.algorithm;
        run.dataset = rec.dataset;
        run.seed = rec.seed;
        run.best_so_far.push_back(rec.best_so_far);
        cum += (rec.failed ? 0.0 : rec.runtime_seconds);
        auto it = overhead.find({file, iter});
        if (it != overhead.end()) cum += it->second;
        run.cumulative_seconds.push_back(cum);
      }
      if (!run.best_so_far.empty()) series.push_back(std::move(run));
    }
  } catch (const std::exception& e) {
    std::cerr << "aggregate: " << e.what() << '\n';
    return 2;
  }

  RankPath path;
  try {
    path = aggregate_rank_paths(series, axis);
  } catch (const std::exception& e) {
    std::cerr << "aggregate: " << e.what() << '\n';
    return 2;
  }

  RankCiBand band;
  if (path.datasets.size() >= 2) {
    Rng rng(0x61676772ULL);
    band = bootstrap_rank_ci(path, rng);
  } else {
    band.lo = path.mean_rank;
    band.hi = path.mean_rank;
  }

  const std::string out_path =
      results_dir + "/rank_paths_" + axis_name + ".csv";
  std::ofstream out(out_path);
  out << "algorithm,budget,mean_rank,ci_lo,ci_hi\n";
  for (std::size_t ai = 0; ai < path.algorithms.size(); ++ai)
    for (std::size_t pt = 0; pt < path.budget.size(); ++pt)
      out << path.algorithms[ai] << ','
          << detail::format_double(path.budget[pt]) << ','
          << detail::format_double(path.mean_rank[ai][pt]) << ','
          << detail::format_double(band.lo[ai][pt]) << ','
          << detail::format_double(band.hi[ai][pt]) << '\n';
  out.close();

  if (wilcoxon) {
    std::map<std::string, std::map<std::pair<std::string, std::uint64_t>, double>>
        finals;
    for (const auto& run : series)
      finals[run.algorithm][{run.dataset, run.seed}] = run.best_so_far.back();
    std::vector<std::string> algorithms;
    for (const auto& [name, values] : finals) {
      (void)values;
      algorithms.push_back(name);
    }
    std::vector<std::vector<double>> aligned(algorithms.size());
    const auto& units = finals.at(algorithms.front());
    for (const auto& [unit, value] : units) {
      (void)value;
      for (std::size_t ai = 0; ai < algorithms.size(); ++ai) {
        const auto& m = finals.at(algorithms[ai]);
        auto it = m.find(unit);
        if (it == m.end() || std::isnan(it->second)) {
          std::cerr << "aggregate: missing final performance for algorithm '"
                    << algorithms[ai] << "' on dataset '" << unit.first
                    << "' seed " << unit.second << '\n';
          return 2;
        }
        aligned[ai].push_back(it->second);
      }
    }
    PairwiseComparison cmp;
    try {
      cmp = wilcoxon_bh(algorithms, aligned, bh_q);
    } catch (const std::exception& e) {
      std::cerr << "aggregate: " << e.what() << '\n';
      return 2;
    }
    std::ofstream wout(results_dir + "/wilcoxon_bh.csv");
    wout << "algorithm_a,algorithm_b,p_raw,p_adjusted,significant\n";
    for (std::size_t i = 0; i < algorithms.size(); ++i)
      for (std::size_t j = i + 1; j < algorithms.size(); ++j)
        wout << algorithms[i] << ',' << algorithms[j] << ','
             << detail::format_double(cmp.p_raw[i][j]) << ','
             << detail::format_double(cmp.p_adjusted[i][j]) << ','
             << (cmp.significant[i][j] ? "true" : "false") << '\n';
  }
  return 0;
}

}  // namespace cqopt
