#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "cqopt/bench/stats.hpp"
#include "cqopt/core/rng.hpp"

using namespace cqopt;

TEST_CASE("all-zero differences give an uninformative test", "[stats]") {
  std::vector<double> x{1.0, 2.0, 3.0};
  WilcoxonResult res = wilcoxon_signed_rank(x, x);
  REQUIRE(res.n_used == 0);
  REQUIRE(res.p_value == 1.0);
  REQUIRE(res.statistic == 0.0);
  REQUIRE(res.exact);
}

TEST_CASE("six strict wins reach the exact two-sided floor", "[stats]") {
  std::vector<double> x{1.0, 2.0, 3.0, 4.0, 5.0, 6.0};
  std::vector<double> y(6, 0.0);
  WilcoxonResult res = wilcoxon_signed_rank(x, y);
  REQUIRE(res.n_used == 6);
  REQUIRE(res.exact);
  REQUIRE(res.statistic == 21.0);
  REQUIRE(res.p_value == Catch::Approx(0.03125).margin(1e-12));  // 2 / 2^6
}

TEST_CASE("the signed-rank test is invariant to affine rescaling", "[stats]") {
  Rng rng(41);
  std::vector<double> x(10), y(10);
  for (std::size_t i = 0; i < x.size(); ++i) {
    x[i] = rng.normal();
    y[i] = rng.normal();
  }
  std::vector<double> xs(10), ys(10);
  for (std::size_t i = 0; i < x.size(); ++i) {
    xs[i] = 11.0 + 3.5 * x[i];
    ys[i] = 11.0 + 3.5 * y[i];
  }
  WilcoxonResult base = wilcoxon_signed_rank(x, y);
  WilcoxonResult scaled = wilcoxon_signed_rank(xs, ys);
  REQUIRE(base.statistic == scaled.statistic);
  REQUIRE(base.p_value == scaled.p_value);
}

TEST_CASE("swapping the samples mirrors the statistic", "[stats]") {
  std::vector<double> x{3.0, 1.0, 4.0, 1.5, 9.0, 2.0, 6.0};
  std::vector<double> y{2.0, 5.0, 3.0, 0.5, 1.0, 8.0, 7.0};
  WilcoxonResult ab = wilcoxon_signed_rank(x, y);
  WilcoxonResult ba = wilcoxon_signed_rank(y, x);
  REQUIRE(ab.p_value == ba.p_value);
  const double total = ab.n_used * (ab.n_used + 1) / 2.0;
  REQUIRE(ab.statistic + ba.statistic == total);
}

TEST_CASE("tied absolute differences use average ranks", "[stats]") {
  std::vector<double> x{1.0, 1.0, 0.0, 2.0};
  std::vector<double> y{0.0, 0.0, 1.0, 0.0};
  WilcoxonResult res = wilcoxon_signed_rank(x, y);
  REQUIRE(res.n_used == 4);
  REQUIRE(res.exact);
  REQUIRE(res.statistic == 8.0);  // ranks 2, 2, 4 on the positive side
  REQUIRE(res.p_value > 0.0);
  REQUIRE(res.p_value <= 1.0);
}

TEST_CASE("large samples switch to a calibrated normal tail", "[stats]") {
  Rng rng(43);
  std::vector<double> x(40), y(40);
  for (std::size_t i = 0; i < x.size(); ++i) {
    y[i] = rng.normal();
    x[i] = y[i] + 2.0 + 0.1 * rng.normal();  // overwhelming paired shift
  }
  WilcoxonResult shifted = wilcoxon_signed_rank(x, y);
  REQUIRE_FALSE(shifted.exact);
  REQUIRE(shifted.p_value < 1e-4);

  for (std::size_t i = 0; i < x.size(); ++i) x[i] = rng.normal();
  WilcoxonResult null = wilcoxon_signed_rank(x, y);
  REQUIRE_FALSE(null.exact);
  REQUIRE(null.p_value > 0.01);

  REQUIRE_THROWS_AS(wilcoxon_signed_rank({1.0}, {1.0, 2.0}),
                    std::invalid_argument);
}

TEST_CASE("step-up adjustment matches the textbook example", "[stats]") {
  BhResult res = benjamini_hochberg({0.01, 0.04, 0.03}, 0.05);
  REQUIRE(res.adjusted[0] == Catch::Approx(0.03).margin(1e-12));
  REQUIRE(res.adjusted[1] == Catch::Approx(0.04).margin(1e-12));
  REQUIRE(res.adjusted[2] == Catch::Approx(0.04).margin(1e-12));
  REQUIRE(res.reject == std::vector<bool>{true, true, true});
}

TEST_CASE("adjusted p-values dominate raw and never exceed one", "[stats]") {
  Rng rng(47);
  std::vector<double> p(25);
  for (auto& v : p) v = rng.uniform01();
  BhResult res = benjamini_hochberg(p, 0.1);

  int bh_rejections = 0, bonferroni = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    REQUIRE(res.adjusted[i] >= p[i]);
    REQUIRE(res.adjusted[i] <= 1.0);
    if (res.reject[i]) ++bh_rejections;
    if (p[i] <= 0.1 / static_cast<double>(p.size())) ++bonferroni;
  }
  REQUIRE(bh_rejections >= bonferroni);

  REQUIRE(benjamini_hochberg({}).adjusted.empty());
  REQUIRE_THROWS_AS(benjamini_hochberg({0.5}, 0.0), std::invalid_argument);
  REQUIRE_THROWS_AS(benjamini_hochberg({0.5}, 1.0), std::invalid_argument);
  REQUIRE_THROWS_AS(benjamini_hochberg({-0.1}), std::invalid_argument);
  REQUIRE_THROWS_AS(benjamini_hochberg({1.5}), std::invalid_argument);
}

TEST_CASE("pairwise comparisons correct across every distinct pair",
          "[stats]") {
  Rng rng(49);
  const std::size_t units = 10;
  std::vector<double> a(units), b(units), c(units);
  for (std::size_t i = 0; i < units; ++i) {
    c[i] = rng.normal();
    b[i] = c[i] + 1.0 + 0.2 * rng.normal();
    a[i] = b[i] + 1.0 + 0.2 * rng.normal();
  }
  PairwiseComparison cmp = wilcoxon_bh({"a", "b", "c"}, {a, b, c}, 0.05);

  for (std::size_t i = 0; i < 3; ++i) {
    REQUIRE(cmp.p_raw[i][i] == 1.0);
    REQUIRE_FALSE(cmp.significant[i][i]);
    for (std::size_t j = 0; j < 3; ++j) {
      REQUIRE(cmp.p_raw[i][j] == cmp.p_raw[j][i]);
      REQUIRE(cmp.p_adjusted[i][j] == cmp.p_adjusted[j][i]);
      REQUIRE(cmp.significant[i][j] == cmp.significant[j][i]);
      REQUIRE(cmp.p_adjusted[i][j] >= cmp.p_raw[i][j]);
    }
  }
  REQUIRE(cmp.significant[0][2]);  // largest separation survives correction
}

TEST_CASE("pairwise comparisons validate their inputs", "[stats]") {
  std::vector<double> six{1, 2, 3, 4, 5, 6};
  std::vector<double> five{1, 2, 3, 4, 5};
  REQUIRE_THROWS_AS(wilcoxon_bh({"a"}, {six}), std::invalid_argument);
  REQUIRE_THROWS_AS(wilcoxon_bh({"a", "b"}, {six}), std::invalid_argument);
  REQUIRE_THROWS_AS(wilcoxon_bh({"a", "b"}, {five, five}),
                    std::invalid_argument);
  REQUIRE_THROWS_AS(wilcoxon_bh({"a", "b"}, {six, five}),
                    std::invalid_argument);
}
