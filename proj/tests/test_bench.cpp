#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "cqopt/bench/rank_aggregation.hpp"
#include "cqopt/bench/screens.hpp"
#include "cqopt/bench/synthetic.hpp"
#include "cqopt/bench/tabular.hpp"
#include "cqopt/core/rng.hpp"

using namespace cqopt;
using Catch::Matchers::ContainsSubstring;

namespace {

std::filesystem::path temp_dir() {
  auto dir = std::filesystem::temp_directory_path() / "cqopt_bench_test";
  std::filesystem::create_directories(dir);
  return dir;
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path);
  out << text;
}

const std::string kSpaceJson = R"({
  "name": "toy",
  "params": [
    {"name": "x", "kind": "continuous", "lo": 0.0, "hi": 1.0},
    {"name": "c", "kind": "categorical", "levels": ["a", "b"]}
  ]
})";

TabularBenchmark grid_bench(int n1, int n2,
                            const std::function<double(double, double)>& f,
                            const std::function<double(double, double)>& rt) {
  TabularBenchmark bench;
  bench.space = ParamSpace({ParamSpec::continuous("x1", 0.0, 1.0),
                            ParamSpec::continuous("x2", 0.0, 1.0)});
  bench.name = "grid";
  for (int i = 0; i < n1; ++i) {
    const double x1 = static_cast<double>(i) / (n1 - 1);
    for (int j = 0; j < n2; ++j) {
      const double x2 = static_cast<double>(j) / (n2 - 1);
      Configuration config;
      config.values = {x1, x2};
      bench.rows.emplace(config, std::make_pair(f(x1, x2), rt(x1, x2)));
      bench.configs.push_back(config);
    }
  }
  return bench;
}

RunSeries make_series(std::string algo, std::string dataset, std::uint64_t seed,
                      std::vector<double> best, std::vector<double> cum = {}) {
  RunSeries s;
  s.algorithm = std::move(algo);
  s.dataset = std::move(dataset);
  s.seed = seed;
  s.best_so_far = std::move(best);
  s.cumulative_seconds = std::move(cum);
  return s;
}

}  // namespace

TEST_CASE("tabular files load with sidecar-described spaces", "[bench]") {
  auto dir = temp_dir();
  write_file(dir / "toy.space.json", kSpaceJson);
  write_file(dir / "toy.csv",
             "x,c,__performance,__runtime_seconds\n"
             "0.25,a,1.5,0.1\n"
             "0.5,b,2.5,0.2\n"
             "0.75,a,-3.5,0.3\n");

  TabularBenchmark bench = load_tabular((dir / "toy.csv").string());
  REQUIRE(bench.name == "toy");
  REQUIRE(bench.space.size() == 2);
  REQUIRE(bench.configs.size() == 3);
  Configuration second;
  second.values = {0.5, std::string("b")};
  REQUIRE(bench.rows.at(second).first == 2.5);
  REQUIRE(bench.rows.at(second).second == 0.2);
}

TEST_CASE("tabular parsing pinpoints offending rows and columns", "[bench]") {
  auto dir = temp_dir();
  write_file(dir / "bad.space.json", kSpaceJson);

  write_file(dir / "bad.csv",
             "x,c,__performance,__runtime_seconds\n"
             "0.25,q,1.5,0.1\n");
  REQUIRE_THROWS_WITH(load_tabular((dir / "bad.csv").string()),
                      ContainsSubstring("row 2") &&
                          ContainsSubstring("unknown categorical level") &&
                          ContainsSubstring("'c'"));

  write_file(dir / "bad.csv",
             "x,c,__performance,__runtime_seconds\n"
             "0.25,a,1.5,0.1\n"
             "0.5,b,nan,0.2\n");
  REQUIRE_THROWS_WITH(load_tabular((dir / "bad.csv").string()),
                      ContainsSubstring("row 3") &&
                          ContainsSubstring("non-finite performance"));

  write_file(dir / "bad.csv",
             "x,c,__performance,__runtime_seconds\n"
             "0.25,a,1.5\n");
  REQUIRE_THROWS_WITH(load_tabular((dir / "bad.csv").string()),
                      ContainsSubstring("row 2"));

  write_file(dir / "bad.csv",
             "x,wrong,__performance,__runtime_seconds\n");
  REQUIRE_THROWS_WITH(load_tabular((dir / "bad.csv").string()),
                      ContainsSubstring("row 1"));

  REQUIRE_THROWS(load_tabular((dir / "no_sidecar.csv").string()));
}

TEST_CASE("duplicate configurations keep the later row", "[bench]") {
  auto dir = temp_dir();
  write_file(dir / "dup.space.json", kSpaceJson);
  write_file(dir / "dup.csv",
             "x,c,__performance,__runtime_seconds\n"
             "0.25,a,1.0,0.1\n"
             "0.25,a,9.0,0.9\n");
  TabularBenchmark bench = load_tabular((dir / "dup.csv").string());
  REQUIRE(bench.configs.size() == 1);
  REQUIRE(bench.rows.at(bench.configs[0]).first == 9.0);
  REQUIRE(bench.rows.at(bench.configs[0]).second == 0.9);
}

TEST_CASE("saving and reloading a benchmark is lossless", "[bench]") {
  TabularBenchmark bench = make_synthetic_table(
      SyntheticKind::heteroskedastic_quadratic, 11, 7, 5);
  auto dir = temp_dir();
  const std::string path = (dir / "round.csv").string();
  save_tabular(bench, path);
  TabularBenchmark back = load_tabular(path);

  REQUIRE(back.name == bench.name);
  REQUIRE(back.configs.size() == bench.configs.size());
  for (const auto& config : bench.configs) {
    REQUIRE(back.rows.at(config).first == bench.rows.at(config).first);
    REQUIRE(back.rows.at(config).second == bench.rows.at(config).second);
  }
}

TEST_CASE("lookup objectives reject configurations outside the table",
          "[bench]") {
  TabularBenchmark bench = make_synthetic_table(
      SyntheticKind::heteroskedastic_quadratic, 3, 4, 4);
  TabularObjective objective(bench);
  REQUIRE(objective.finite_candidates() != nullptr);
  REQUIRE(objective.finite_candidates()->size() == 16);

  Configuration known = bench.configs[5];
  auto [perf, rt] = objective.evaluate(known);
  REQUIRE(perf == bench.rows.at(known).first);
  REQUIRE(rt == bench.rows.at(known).second);

  Configuration missing;
  missing.values = {0.123456, -0.5};
  REQUIRE_THROWS_AS(objective.evaluate(missing), EvaluationFailure);
}

TEST_CASE("synthetic tables are pure functions of the noise seed", "[bench]") {
  TabularBenchmark a = make_synthetic_table(SyntheticKind::branin_discretized, 7);
  TabularBenchmark b = make_synthetic_table(SyntheticKind::branin_discretized, 7);
  TabularBenchmark c = make_synthetic_table(SyntheticKind::branin_discretized, 8);

  REQUIRE(a.configs.size() == 2000);  // 50 x 40 grid
  REQUIRE(make_synthetic_table(SyntheticKind::asymmetric_noise_surface, 1)
              .configs.size() == 2025);  // 45 x 45 grid

  bool any_differ = false;
  for (const auto& config : a.configs) {
    REQUIRE(a.rows.at(config).first == b.rows.at(config).first);
    any_differ = any_differ ||
                 a.rows.at(config).first != c.rows.at(config).first;
  }
  REQUIRE(any_differ);
}

TEST_CASE("continuous synthetic objectives return frozen draws", "[bench]") {
  SyntheticObjective objective(SyntheticKind::asymmetric_noise_surface, 42);
  Configuration config;
  config.values = {0.3, 0.6};
  auto first = objective.evaluate(config);
  auto again = objective.evaluate(config);
  REQUIRE(first.first == again.first);
  REQUIRE(first.second == again.second);
  REQUIRE(std::isfinite(first.first));
}

TEST_CASE("synthetic objective factory freezes only grid kinds", "[bench]") {
  auto grid = make_synthetic_objective(SyntheticKind::branin_discretized, 1);
  REQUIRE(grid->finite_candidates() != nullptr);
  auto cont =
      make_synthetic_objective(SyntheticKind::heteroskedastic_quadratic, 1);
  REQUIRE(cont->finite_candidates() == nullptr);

  REQUIRE(synthetic_kind_from_string("branin_discretized") ==
          SyntheticKind::branin_discretized);
  REQUIRE(to_string(SyntheticKind::asymmetric_noise_surface) ==
          "asymmetric_noise_surface");
  REQUIRE_THROWS_AS(synthetic_kind_from_string("nope"), std::invalid_argument);
}

TEST_CASE("the size screen averages sampled runtimes", "[bench]") {
  auto constant_rt = grid_bench(
      4, 4, [](double, double) { return 0.0; },
      [](double, double) { return 3.0; });
  Rng rng(5);
  REQUIRE(screen_size(constant_rt, 100, rng) == 3.0);

  auto split_rt = grid_bench(
      2, 20, [](double, double) { return 0.0; },
      [](double x1, double) { return x1 < 0.5 ? 1.0 : 3.0; });
  Rng rng2(6);
  const double mean_rt = screen_size(split_rt, 4000, rng2);
  REQUIRE(mean_rt > 1.8);
  REQUIRE(mean_rt < 2.2);

  Rng rng3(7);
  REQUIRE_THROWS_AS(screen_size(constant_rt, 0, rng3), std::invalid_argument);
  REQUIRE_THROWS_AS(screen_size(TabularBenchmark{}, 10, rng3),
                    std::invalid_argument);
}

TEST_CASE("the heteroskedasticity screen separates flat from varying noise",
          "[bench]") {
  Rng noise(100);
  auto flat = grid_bench(
      24, 24, [&](double, double) { return 1.0 + 0.3 * noise.normal(); },
      [](double, double) { return 1.0; });
  Rng rng(3);
  const double null_score = screen_heteroskedasticity(flat, 350, rng, 150);
  REQUIRE(null_score < 0.05);

  Rng noise2(101);
  auto split = grid_bench(
      24, 24,
      [&](double x1, double) {
        return (x1 < 0.5 ? 0.1 : 1.0) * noise2.normal();
      },
      [](double, double) { return 1.0; });
  Rng rng2(4);
  const double alt_score = screen_heteroskedasticity(split, 350, rng2, 150);
  REQUIRE(alt_score > 0.1);

  Rng rng3(5);
  REQUIRE_THROWS_AS(screen_heteroskedasticity(flat, 9, rng3),
                    std::invalid_argument);
}

TEST_CASE("the asymmetry screen separates smooth from skew-noise surfaces",
          "[bench]") {
  Rng noise(200);
  auto smooth = grid_bench(
      45, 45,
      [&](double x1, double x2) { return x1 + x2 + 0.01 * noise.normal(); },
      [](double, double) { return 1.0; });
  Rng rng(9);
  // finite neighborhoods put the smooth surface near 0.09, far below the skew
  REQUIRE(screen_asymmetry(smooth, 40, 50, rng) < 0.15);

  Rng noise2(201);
  auto skewed = grid_bench(
      45, 45,
      [&](double, double) {
        return 0.6 * (-std::log(1.0 - noise2.uniform01()) - 1.0);
      },
      [](double, double) { return 1.0; });
  Rng rng2(10);
  const double skew_score = screen_asymmetry(skewed, 40, 50, rng2);
  REQUIRE(skew_score > 0.2);
  REQUIRE(skew_score <= 1.0);

  auto constant = grid_bench(
      6, 6, [](double, double) { return 5.0; },
      [](double, double) { return 1.0; });
  Rng rng3(11);
  REQUIRE(screen_asymmetry(constant, 20, 10, rng3) == 0.0);

  Rng rng4(12);
  REQUIRE_THROWS_AS(screen_asymmetry(smooth, 40, 9, rng4),
                    std::invalid_argument);
  REQUIRE_THROWS_AS(screen_asymmetry(smooth, 0, 50, rng4),
                    std::invalid_argument);
}

TEST_CASE("a uniformly dominant algorithm holds rank one everywhere",
          "[bench]") {
  std::vector<RunSeries> series;
  for (const char* ds : {"d1", "d2"})
    for (std::uint64_t seed : {1ull, 2ull}) {
      series.push_back(make_series("strong", ds, seed, {5, 6, 7}));
      series.push_back(make_series("weak", ds, seed, {1, 2, 3}));
    }
  RankPath path = aggregate_rank_paths(series, BudgetAxis::iteration);
  REQUIRE(path.algorithms == std::vector<std::string>{"strong", "weak"});
  REQUIRE(path.budget == std::vector<double>{0.0, 1.0, 2.0});
  REQUIRE(path.mean_rank[0] == std::vector<double>{1.0, 1.0, 1.0});
  REQUIRE(path.mean_rank[1] == std::vector<double>{2.0, 2.0, 2.0});
}

TEST_CASE("mean ranks conserve the rank total at every budget point",
          "[bench]") {
  Rng rng(77);
  std::vector<RunSeries> series;
  for (const char* algo : {"a", "b", "c"})
    for (const char* ds : {"d1", "d2", "d3"})
      for (std::uint64_t seed : {1ull, 2ull}) {
        std::vector<double> best(6);
        double running = rng.normal();
        for (auto& v : best) running = v = std::max(running, rng.normal());
        series.push_back(make_series(algo, ds, seed, best));
      }
  RankPath path = aggregate_rank_paths(series, BudgetAxis::iteration);
  for (std::size_t pt = 0; pt < path.budget.size(); ++pt) {
    double total = 0.0;
    for (std::size_t ai = 0; ai < 3; ++ai) {
      REQUIRE(path.mean_rank[ai][pt] >= 1.0);
      REQUIRE(path.mean_rank[ai][pt] <= 3.0);
      total += path.mean_rank[ai][pt];
    }
    REQUIRE(total == Catch::Approx(6.0).margin(1e-9));
  }

  std::vector<RunSeries> reversed(series.rbegin(), series.rend());
  RankPath again = aggregate_rank_paths(reversed, BudgetAxis::iteration);
  REQUIRE(again.mean_rank == path.mean_rank);
}

TEST_CASE("failed early iterations rank behind any finite value", "[bench]") {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  std::vector<RunSeries> series{make_series("a", "d", 1, {nan, 5.0}),
                                make_series("b", "d", 1, {1.0, 1.0})};
  RankPath path = aggregate_rank_paths(series, BudgetAxis::iteration);
  REQUIRE(path.mean_rank[0] == std::vector<double>{2.0, 1.0});
  REQUIRE(path.mean_rank[1] == std::vector<double>{1.0, 2.0});
}

TEST_CASE("the runtime axis interpolates best values stepwise", "[bench]") {
  std::vector<RunSeries> series{
      make_series("late", "d", 1, {0.0, 10.0}, {1.0, 2.0}),
      make_series("early", "d", 1, {5.0, 5.0}, {1.0, 2.0})};
  RankPath path = aggregate_rank_paths(series, BudgetAxis::runtime, 4);
  REQUIRE(path.budget == std::vector<double>{0.25, 0.5, 0.75, 1.0});
  // before either result: tied; then "early" leads until "late" finishes
  REQUIRE(path.algorithms == std::vector<std::string>{"early", "late"});
  REQUIRE(path.mean_rank[0] == std::vector<double>{1.5, 1.0, 1.0, 2.0});
  REQUIRE(path.mean_rank[1] == std::vector<double>{1.5, 2.0, 2.0, 1.0});
}

TEST_CASE("rank aggregation validates the result grid", "[bench]") {
  REQUIRE_THROWS_AS(aggregate_rank_paths({}, BudgetAxis::iteration),
                    std::invalid_argument);

  std::vector<RunSeries> dup{make_series("a", "d", 1, {1.0}),
                             make_series("a", "d", 1, {2.0})};
  REQUIRE_THROWS_WITH(aggregate_rank_paths(dup, BudgetAxis::iteration),
                      ContainsSubstring("duplicate"));

  std::vector<RunSeries> holey{make_series("a", "d1", 1, {1.0}),
                               make_series("b", "d1", 1, {2.0}),
                               make_series("a", "d2", 1, {3.0})};
  REQUIRE_THROWS_WITH(aggregate_rank_paths(holey, BudgetAxis::iteration),
                      ContainsSubstring("missing"));

  std::vector<RunSeries> ragged{make_series("a", "d", 1, {1.0, 2.0}),
                                make_series("b", "d", 1, {1.0})};
  REQUIRE_THROWS_AS(aggregate_rank_paths(ragged, BudgetAxis::iteration),
                    std::invalid_argument);

  REQUIRE(budget_axis_from_string("iteration") == BudgetAxis::iteration);
  REQUIRE(budget_axis_from_string("runtime") == BudgetAxis::runtime);
  REQUIRE_THROWS_AS(budget_axis_from_string("steps"), std::invalid_argument);
}

TEST_CASE("bootstrap rank bands collapse on identical datasets", "[bench]") {
  std::vector<RunSeries> series;
  for (const char* ds : {"d1", "d2", "d3"}) {
    series.push_back(make_series("a", ds, 1, {2.0, 4.0}));
    series.push_back(make_series("b", ds, 1, {1.0, 3.0}));
  }
  RankPath path = aggregate_rank_paths(series, BudgetAxis::iteration);
  Rng rng(21);
  RankCiBand band = bootstrap_rank_ci(path, rng, 500);
  for (std::size_t ai = 0; ai < 2; ++ai)
    for (std::size_t pt = 0; pt < 2; ++pt) {
      REQUIRE(band.lo[ai][pt] == path.mean_rank[ai][pt]);
      REQUIRE(band.hi[ai][pt] == path.mean_rank[ai][pt]);
    }
}

TEST_CASE("bootstrap rank bands bracket the point estimate", "[bench]") {
  Rng data_rng(31);
  std::vector<RunSeries> series;
  for (const char* ds : {"d1", "d2", "d3", "d4", "d5", "d6"})
    for (const char* algo : {"a", "b"}) {
      std::vector<double> best(4);
      double running = data_rng.normal();
      for (auto& v : best) running = v = std::max(running, data_rng.normal());
      series.push_back(make_series(algo, ds, 1, best));
    }
  RankPath path = aggregate_rank_paths(series, BudgetAxis::iteration);
  Rng rng(22);
  RankCiBand band = bootstrap_rank_ci(path, rng, 1000);
  for (std::size_t ai = 0; ai < 2; ++ai)
    for (std::size_t pt = 0; pt < 4; ++pt) {
      REQUIRE(band.lo[ai][pt] <= path.mean_rank[ai][pt] + 1e-12);
      REQUIRE(band.hi[ai][pt] >= path.mean_rank[ai][pt] - 1e-12);
    }

  std::vector<RunSeries> single{make_series("a", "d", 1, {1.0}),
                                make_series("b", "d", 1, {2.0})};
  RankPath narrow = aggregate_rank_paths(single, BudgetAxis::iteration);
  Rng rng2(23);
  REQUIRE_THROWS_AS(bootstrap_rank_ci(narrow, rng2), std::invalid_argument);
}
