#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "cqopt/adaptive/aci.hpp"
#include "cqopt/adaptive/dtaci.hpp"
#include "cqopt/core/normal.hpp"
#include "cqopt/core/rng.hpp"

using namespace cqopt;

TEST_CASE("online alpha moves against the breach direction", "[adaptive]") {
  AciState s = make_aci(0.25, 0.05);
  REQUIRE(s.alpha == 0.25);

  AciState after_breach = aci_update(s, true);
  REQUIRE(after_breach.alpha == Catch::Approx(0.25 - 0.0375));

  AciState after_cover = aci_update(s, false);
  REQUIRE(after_cover.alpha == Catch::Approx(0.25 + 0.0125));
}

TEST_CASE("exact-rate breach cycles leave alpha unchanged", "[adaptive]") {
  AciState s = make_aci(0.25, 0.05);
  for (int t = 0; t < 1000; ++t) s = aci_update(s, t % 4 == 0);
  REQUIRE(s.alpha == Catch::Approx(0.25).margin(1e-9));
}

TEST_CASE("controller construction rejects degenerate settings", "[adaptive]") {
  REQUIRE_THROWS_AS(make_aci(0.0), std::invalid_argument);
  REQUIRE_THROWS_AS(make_aci(1.0), std::invalid_argument);
  REQUIRE_THROWS_AS(make_aci(0.5, 0.0), std::invalid_argument);
  REQUIRE_THROWS_AS(make_aci(0.5, -0.1), std::invalid_argument);
}

TEST_CASE("telescoped updates tie breach frequency to alpha displacement",
          "[adaptive]") {
  const int T = 5000;
  const double gamma = 0.01, target = 0.25;
  AciState s = make_aci(target, gamma);
  Rng rng(41);
  int breaches = 0;
  for (int t = 0; t < T; ++t) {
    const bool b = rng.uniform01() < 0.3;
    breaches += b ? 1 : 0;
    s = aci_update(s, b);
  }
  const double freq = static_cast<double>(breaches) / T;
  // alpha_{T} - alpha_0 = gamma * sum(target - err) holds exactly
  REQUIRE(std::abs(freq - target) ==
          Catch::Approx(std::abs(s.alpha - target) / (gamma * T)).margin(1e-9));
}

TEST_CASE("expert-tracking defaults follow the closed-form schedule",
          "[adaptive]") {
  DtaciParams p = dtaci_default_params(0.5, 50, 8);
  REQUIRE(p.sigma == Catch::Approx(0.01));
  REQUIRE(p.eta == Catch::Approx(2.7698027).margin(1e-4));

  REQUIRE(dtaci_default_params(0.5, 200, 8).eta < p.eta);
  REQUIRE_THROWS_AS(dtaci_default_params(0.5, 0, 8), std::invalid_argument);
  REQUIRE_THROWS_AS(dtaci_default_params(1.5, 50, 8), std::invalid_argument);

  auto g = dtaci_default_gammas();
  REQUIRE(g.size() == 8);
  REQUIRE(g.front() == 0.001);
  REQUIRE(g.back() == 0.128);
  for (std::size_t i = 1; i < g.size(); ++i)
    REQUIRE(g[i] == Catch::Approx(2.0 * g[i - 1]));

  REQUIRE_THROWS_AS(make_dtaci(0.25, {}), std::invalid_argument);
  REQUIRE_THROWS_AS(make_dtaci(0.0), std::invalid_argument);
}

TEST_CASE("feedback level matches the smallest containing interval",
          "[adaptive]") {
  // widths shrink linearly with miscoverage: [-(1-a), (1-a)]
  auto family = [](double alpha) {
    return Interval{-(1.0 - alpha), 1.0 - alpha};
  };
  REQUIRE(dtaci_feedback_beta(0.5, family) == Catch::Approx(0.5).margin(1e-3));
  REQUIRE(dtaci_feedback_beta(0.0, family) == 0.001);
  REQUIRE(dtaci_feedback_beta(2.0, family) == 0.999);
}

TEST_CASE("gaussian feedback reproduces the two-sided confidence",
          "[adaptive]") {
  const double mu = 1.0, sd = 2.0;
  auto family = [&](double alpha) {
    const double z = normal_quantile(1.0 - alpha / 2.0);
    return Interval{mu - z * sd, mu + z * sd};
  };
  const double y = mu + 1.2 * sd;
  const double expected = 2.0 * normal_cdf(1.2) - 1.0;
  REQUIRE(dtaci_feedback_beta(y, family) ==
          Catch::Approx(expected).margin(1e-3));
}

TEST_CASE("a single expert collapses to the plain online update", "[adaptive]") {
  DtaciState multi = make_dtaci(0.25, {0.01});
  AciState single = make_aci(0.25, 0.01);
  Rng noise(77), sampler(5);
  for (int t = 0; t < 1000; ++t) {
    const bool b = noise.uniform01() < 0.25;
    single = aci_update(single, b);
    dtaci_update(multi, 0.5, {b}, sampler);
    REQUIRE(multi.alphas[0] == single.alpha);       // bitwise identical
    REQUIRE(multi.alpha_current == single.alpha);
  }
  REQUIRE(multi.steps == 1000);
}

TEST_CASE("identical experts keep identical weight", "[adaptive]") {
  DtaciState s = make_dtaci(0.2, {0.01, 0.01});
  Rng rng(3);
  for (int t = 0; t < 50; ++t) {
    const bool b = rng.uniform01() < 0.2;
    dtaci_update(s, rng.uniform01(), {b, b}, rng);
    REQUIRE(s.weights[0] == s.weights[1]);
    REQUIRE(s.alphas[0] == s.alphas[1]);
  }
}

TEST_CASE("the better-calibrated expert absorbs the weight", "[adaptive]") {
  DtaciState s;
  s.alpha_target = 0.25;
  s.eta = dtaci_default_params(0.25).eta;
  s.sigma = 1e-6;
  s.gammas = {0.0, 0.0};  // freeze the candidate alphas
  s.weights = {0.5, 0.5};
  s.alphas = {0.25, 0.9};
  Rng rng(11);
  double prev_share = 0.5;
  for (int t = 0; t < 100; ++t) {
    dtaci_update(s, 0.75, {false, false}, rng);
    const double share = s.weights[0] / (s.weights[0] + s.weights[1]);
    REQUIRE(share >= prev_share - 1e-12);
    prev_share = share;
  }
  REQUIRE(prev_share > 0.99);
}

TEST_CASE("weights stay positive and the sampled alpha is an expert's",
          "[adaptive]") {
  DtaciState s = make_dtaci(0.2);
  Rng rng(19);
  for (int t = 0; t < 200; ++t) {
    std::vector<bool> breaches(s.gammas.size());
    for (std::size_t i = 0; i < breaches.size(); ++i)
      breaches[i] = rng.uniform01() < 0.2;
    dtaci_update(s, rng.uniform01(), breaches, rng);

    double total = 0.0;
    for (double w : s.weights) {
      REQUIRE(w > 0.0);
      total += w;
    }
    for (double w : s.weights) REQUIRE(w <= total + 1e-12);

    bool found = false;
    for (double a : s.alphas)
      if (a == s.alpha_current) found = true;
    REQUIRE(found);
  }
  REQUIRE_THROWS_AS(dtaci_update(s, 0.5, {true}, rng), std::invalid_argument);
}

TEST_CASE("collapsed weight mass recovers by rescaling or reset", "[adaptive]") {
  // underflowed but positive mass: rescaled in place, ratios preserved
  DtaciState tiny;
  tiny.alpha_target = 0.25;
  tiny.eta = 1.0;
  tiny.sigma = 0.01;
  tiny.gammas = {0.01};
  tiny.weights = {1e-120};
  tiny.alphas = {0.9};
  Rng rng(2);
  dtaci_update(tiny, 0.5, {false}, rng);
  REQUIRE(tiny.weights[0] == Catch::Approx(1.0).margin(1e-12));

  // hard zero mass: reset to uniform
  DtaciState zero;
  zero.alpha_target = 0.25;
  zero.eta = 1e6;
  zero.sigma = 0.01;
  zero.gammas = {0.01, 0.02};
  zero.weights = {0.5, 0.5};
  zero.alphas = {0.9, 0.8};
  dtaci_update(zero, 0.5, {false, false}, rng);
  REQUIRE(zero.weights[0] == Catch::Approx(0.5).margin(1e-12));
  REQUIRE(zero.weights[1] == Catch::Approx(0.5).margin(1e-12));
}
