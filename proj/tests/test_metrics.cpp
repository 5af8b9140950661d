#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "cqopt/core/rng.hpp"
#include "cqopt/metrics/calibration_metrics.hpp"
#include "cqopt/metrics/logistic_regression.hpp"
#include "cqopt/metrics/ranks.hpp"

using namespace cqopt;

TEST_CASE("windowed coverage error vanishes at the exact rate", "[metrics]") {
  std::vector<bool> covered;
  for (int w = 0; w < 15; ++w) {
    for (int i = 0; i < 15; ++i) covered.push_back(true);
    for (int i = 0; i < 5; ++i) covered.push_back(false);
  }
  REQUIRE(rolling_coverage_error(covered, 0.75) == 0.0);
}

TEST_CASE("windowed coverage error averages absolute window deviations",
          "[metrics]") {
  std::vector<bool> covered;
  for (int i = 0; i < 10; ++i) covered.push_back(true);
  for (int i = 0; i < 10; ++i) covered.push_back(false);  // window at 0.5
  for (int i = 0; i < 20; ++i) covered.push_back(true);   // window at 1.0
  REQUIRE(rolling_coverage_error(covered, 0.75) == Catch::Approx(0.25));
}

TEST_CASE("a trailing partial window is ignored", "[metrics]") {
  std::vector<bool> covered(60, true);
  for (int i = 0; i < 8; ++i) covered.push_back(false);  // 68 observations
  REQUIRE(rolling_coverage_error(covered, 0.5) == Catch::Approx(0.5));
}

TEST_CASE("windowed coverage error validates its inputs", "[metrics]") {
  REQUIRE_THROWS_AS(rolling_coverage_error(std::vector<bool>(19, true), 0.5),
                    std::invalid_argument);
  REQUIRE_THROWS_AS(rolling_coverage_error(std::vector<bool>(40, true), 0.5, 0),
                    std::invalid_argument);
  REQUIRE_THROWS_AS(rolling_coverage_error(std::vector<bool>(40, true), 1.0),
                    std::invalid_argument);
}

TEST_CASE("cumulative coverage is the prefix mean", "[metrics]") {
  auto all = cumulative_coverage(std::vector<bool>(5, true));
  for (double v : all) REQUIRE(v == 1.0);

  auto alt = cumulative_coverage({true, false, true, false, true});
  REQUIRE(alt[0] == 1.0);
  REQUIRE(alt[1] == 0.5);
  REQUIRE(alt[2] == Catch::Approx(2.0 / 3.0));
  REQUIRE(alt[3] == 0.5);
  REQUIRE(alt[4] == Catch::Approx(0.6));

  REQUIRE(cumulative_coverage({}).empty());
}

TEST_CASE("mean width averages endpoint gaps", "[metrics]") {
  REQUIRE(mean_interval_width({0.0, 1.0}, {1.0, 4.0}) == 2.0);
  REQUIRE_THROWS_AS(mean_interval_width({0.0}, {1.0, 2.0}),
                    std::invalid_argument);
  REQUIRE_THROWS_AS(mean_interval_width({}, {}), std::invalid_argument);
}

TEST_CASE("breach regression needs both outcome classes", "[metrics]") {
  Eigen::MatrixXd X = Eigen::MatrixXd::Random(30, 2);
  REQUIRE(llr_statistic(std::vector<bool>(30, true), X) == 0.0);
  REQUIRE(llr_statistic(std::vector<bool>(30, false), X) == 0.0);

  std::vector<bool> one_breach(30, false);
  one_breach[4] = true;
  REQUIRE(llr_statistic(one_breach, X) == 0.0);

  REQUIRE_THROWS_AS(llr_statistic(std::vector<bool>(29, false), X),
                    std::invalid_argument);
}

TEST_CASE("separable breach structure produces a huge statistic", "[metrics]") {
  const int n = 100;
  Eigen::MatrixXd X(n, 1);
  std::vector<bool> breaches(n);
  for (int i = 0; i < n; ++i) {
    X(i, 0) = static_cast<double>(i) / (n - 1);
    breaches[static_cast<std::size_t>(i)] = X(i, 0) > 0.5;
  }
  REQUIRE(llr_statistic(breaches, X) > 20.0);
}

TEST_CASE("unstructured breaches stay below the chi-square bar", "[metrics]") {
  Rng rng(53);
  const int n = 60, sims = 200;
  int below = 0;
  for (int s = 0; s < sims; ++s) {
    Eigen::MatrixXd X(n, 2);
    std::vector<bool> breaches(n);
    for (int i = 0; i < n; ++i) {
      X(i, 0) = rng.uniform01();
      X(i, 1) = rng.normal();
      breaches[static_cast<std::size_t>(i)] = rng.uniform01() < 0.25;
    }
    const double stat = llr_statistic(breaches, X);
    REQUIRE(stat >= 0.0);
    if (stat < 5.991) ++below;  // 0.95 quantile, two degrees of freedom
  }
  REQUIRE(below >= 178);
}

TEST_CASE("average ranks split ties evenly", "[metrics]") {
  REQUIRE(average_ranks({3.0, 1.0, 3.0}) ==
          std::vector<double>{2.5, 1.0, 2.5});
  REQUIRE(average_ranks({5.0}) == std::vector<double>{1.0});
  REQUIRE(average_ranks({2.0, 2.0, 2.0}) ==
          std::vector<double>{2.0, 2.0, 2.0});
  REQUIRE(average_ranks({10.0, -1.0, 4.0}) ==
          std::vector<double>{3.0, 1.0, 2.0});
}

TEST_CASE("a dominant variant earns rank one with a degenerate interval",
          "[metrics]") {
  std::vector<std::vector<double>> values{{1, 1, 1, 1, 1, 1},
                                          {2, 2, 2, 2, 2, 2}};
  RankSummary s = rank_metrics_across_variants(values, 17);
  REQUIRE(s.n_cells == 6);
  REQUIRE(s.mean_rank == std::vector<double>{1.0, 2.0});
  REQUIRE(s.ci_lo[0] == 1.0);
  REQUIRE(s.ci_hi[0] == 1.0);
  REQUIRE(s.ci_lo[1] == 2.0);
  REQUIRE(s.ci_hi[1] == 2.0);
}

TEST_CASE("tied variants share the average rank", "[metrics]") {
  std::vector<std::vector<double>> values{{3, 3, 3}, {3, 3, 3}};
  RankSummary s = rank_metrics_across_variants(values, 5);
  REQUIRE(s.mean_rank[0] == 1.5);
  REQUIRE(s.mean_rank[1] == 1.5);
}

TEST_CASE("mean ranks conserve the per-cell total", "[metrics]") {
  Rng rng(71);
  const std::size_t variants = 7, cells = 12;
  std::vector<std::vector<double>> values(variants,
                                          std::vector<double>(cells));
  for (auto& row : values)
    for (auto& v : row) v = rng.normal();

  RankSummary s = rank_metrics_across_variants(values, 9);
  double total = 0.0;
  for (std::size_t v = 0; v < variants; ++v) {
    total += s.mean_rank[v];
    REQUIRE(s.ci_lo[v] <= s.mean_rank[v] + 1e-12);
    REQUIRE(s.ci_hi[v] >= s.mean_rank[v] - 1e-12);
  }
  REQUIRE(total == Catch::Approx(28.0).margin(1e-9));  // 7 * 8 / 2
}

TEST_CASE("rank aggregation validates cell alignment", "[metrics]") {
  REQUIRE_THROWS_AS(rank_metrics_across_variants({}, 1),
                    std::invalid_argument);
  REQUIRE_THROWS_AS(rank_metrics_across_variants({{}}, 1),
                    std::invalid_argument);
  REQUIRE_THROWS_AS(rank_metrics_across_variants({{1.0, 2.0}, {1.0}}, 1),
                    std::invalid_argument);
}
