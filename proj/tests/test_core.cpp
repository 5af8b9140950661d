#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <set>
#include <unordered_set>

#include "cqopt/core/encoding.hpp"
#include "cqopt/core/normal.hpp"
#include "cqopt/core/param_space.hpp"
#include "cqopt/core/rng.hpp"
#include "cqopt/core/sampling.hpp"
#include "cqopt/core/trial.hpp"

using namespace cqopt;

TEST_CASE("rng forks are pure functions of seed and tag", "[core]") {
  Rng a(42);
  Rng b(42);
  // consume draws from one stream only; forks must not care
  for (int i = 0; i < 17; ++i) a.uniform01();

  Rng fa = a.fork(0x10u);
  Rng fb = b.fork(0x10u);
  for (int i = 0; i < 32; ++i) REQUIRE(fa.next_u64() == fb.next_u64());

  Rng f2a = a.fork(0x10u, 3);
  Rng f2b = b.fork(0x10u, 3);
  for (int i = 0; i < 8; ++i) REQUIRE(f2a.next_u64() == f2b.next_u64());
}

TEST_CASE("rng distinct tags give distinct streams", "[core]") {
  Rng base(7);
  Rng f1 = base.fork(1);
  Rng f2 = base.fork(2);
  bool any_diff = false;
  for (int i = 0; i < 16; ++i)
    if (f1.next_u64() != f2.next_u64()) any_diff = true;
  REQUIRE(any_diff);

  // two-level forks with distinct second tags differ as well
  Rng g1 = base.fork(9, 0);
  Rng g2 = base.fork(9, 1);
  any_diff = false;
  for (int i = 0; i < 16; ++i)
    if (g1.next_u64() != g2.next_u64()) any_diff = true;
  REQUIRE(any_diff);
}

TEST_CASE("rng uniform draws respect their ranges", "[core]") {
  Rng rng(123);
  for (int i = 0; i < 1000; ++i) {
    double u = rng.uniform01();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
  }
  for (int i = 0; i < 1000; ++i) {
    std::size_t k = rng.uniform_index(7);
    REQUIRE(k < 7);
  }
  for (int i = 0; i < 1000; ++i) {
    long long v = rng.uniform_int(-3, 3);
    REQUIRE(v >= -3);
    REQUIRE(v <= 3);
  }
  REQUIRE_THROWS_AS(rng.uniform_index(0), std::invalid_argument);
  REQUIRE_THROWS_AS(rng.uniform_int(2, 1), std::invalid_argument);
}

TEST_CASE("rng normal draws have the right first two moments", "[core]") {
  Rng rng(5);
  const int n = 200000;
  double sum = 0.0, sumsq = 0.0;
  for (int i = 0; i < n; ++i) {
    double z = rng.normal();
    sum += z;
    sumsq += z * z;
  }
  double mean = sum / n;
  double var = sumsq / n - mean * mean;
  REQUIRE(std::abs(mean) < 0.01);
  REQUIRE(std::abs(var - 1.0) < 0.02);
}

TEST_CASE("normal quantile and cdf are mutually consistent", "[core]") {
  REQUIRE(normal_quantile(0.5) == 0.0);
  REQUIRE(normal_quantile(0.975) == Catch::Approx(1.959963985).margin(1e-7));
  REQUIRE(normal_quantile(0.8413447460685429) == Catch::Approx(1.0).margin(1e-9));
  REQUIRE(normal_pdf(0.0) == Catch::Approx(0.3989422804014327).margin(1e-12));
  REQUIRE(normal_cdf(0.0) == Catch::Approx(0.5).margin(1e-15));

  for (double p : {0.001, 0.01, 0.2, 0.4, 0.6, 0.9, 0.99, 0.999}) {
    REQUIRE(normal_cdf(normal_quantile(p)) == Catch::Approx(p).margin(1e-12));
  }
  // antisymmetry used by the symmetric-quantile checks elsewhere
  REQUIRE(normal_quantile(0.25) == -normal_quantile(0.75));
  REQUIRE_THROWS_AS(normal_quantile(-0.1), std::invalid_argument);
  REQUIRE(std::isinf(normal_quantile(0.0)));
}

TEST_CASE("param space construction validates its specs", "[core]") {
  REQUIRE_NOTHROW(ParamSpace({ParamSpec::continuous("x", 0.0, 1.0)}));
  REQUIRE_THROWS_AS(ParamSpace({ParamSpec::continuous("x", 1.0, 1.0)}),
                    std::invalid_argument);
  REQUIRE_THROWS_AS(ParamSpace({ParamSpec::continuous("x", 0.0, 1.0),
                                ParamSpec::integer("x", 0, 3)}),
                    std::invalid_argument);
  REQUIRE_THROWS_AS(ParamSpace({ParamSpec::categorical("c", {"a"})}),
                    std::invalid_argument);
  REQUIRE_THROWS_AS(ParamSpace({ParamSpec::categorical("c", {"a", "a"})}),
                    std::invalid_argument);
  REQUIRE_THROWS_AS(ParamSpace({ParamSpec::integer("k", 2, 1)}),
                    std::invalid_argument);
}

TEST_CASE("configuration validation catches type and bound errors", "[core]") {
  ParamSpace space({ParamSpec::continuous("x", 0.0, 10.0),
                    ParamSpec::categorical("c", {"a", "b", "c"})});
  Configuration ok;
  ok.values = {5.0, std::string("b")};
  REQUIRE_NOTHROW(space.validate(ok));

  Configuration wrong_arity;
  wrong_arity.values = {5.0};
  REQUIRE_THROWS_AS(space.validate(wrong_arity), std::invalid_argument);

  Configuration out_of_bounds;
  out_of_bounds.values = {11.0, std::string("b")};
  REQUIRE_THROWS_AS(space.validate(out_of_bounds), std::invalid_argument);

  Configuration bad_level;
  bad_level.values = {5.0, std::string("z")};
  REQUIRE_THROWS_MATCHES(space.validate(bad_level), std::invalid_argument,
                         Catch::Matchers::MessageMatches(
                             Catch::Matchers::ContainsSubstring("'z'")));

  Configuration wrong_type;
  wrong_type.values = {std::string("a"), std::string("b")};
  REQUIRE_THROWS_AS(space.validate(wrong_type), std::invalid_argument);
}

TEST_CASE("finite spaces enumerate lexicographically", "[core]") {
  ParamSpace space({ParamSpec::integer("i", 0, 1),
                    ParamSpec::categorical("c", {"p", "q", "r"})});
  REQUIRE(space.is_finite());
  REQUIRE(space.finite_cardinality() == 6);
  auto all = space.enumerate();
  REQUIRE(all.size() == 6);
  REQUIRE(std::get<long long>(all[0].values[0]) == 0);
  REQUIRE(std::get<std::string>(all[0].values[1]) == "p");
  REQUIRE(std::get<long long>(all[5].values[0]) == 1);
  REQUIRE(std::get<std::string>(all[5].values[1]) == "r");

  ParamSpace cont({ParamSpec::continuous("x", 0.0, 1.0)});
  REQUIRE_FALSE(cont.is_finite());
  REQUIRE_THROWS_AS(cont.enumerate(), std::logic_error);
}

TEST_CASE("encoding scales numerics and expands categoricals", "[core]") {
  ParamSpace space({ParamSpec::continuous("x", 0.0, 10.0)});
  Configuration c;
  c.values = {5.0};
  auto v = encode(c, space, EncodingScheme::one_hot);
  REQUIRE(v.size() == 1);
  REQUIRE(v[0] == Catch::Approx(0.5));

  ParamSpace cat({ParamSpec::categorical("c", {"a", "b", "c"})});
  Configuration cb;
  cb.values = {std::string("b")};
  auto one_hot = encode(cb, cat, EncodingScheme::one_hot);
  REQUIRE(one_hot == std::vector<double>{0.0, 1.0, 0.0});

  Configuration cc;
  cc.values = {std::string("c")};
  auto ordinal = encode(cc, cat, EncodingScheme::ordinal);
  REQUIRE(ordinal == std::vector<double>{2.0});

  ParamSpace mixed({ParamSpec::continuous("x", 0.0, 10.0),
                    ParamSpec::categorical("c", {"a", "b", "c"}),
                    ParamSpec::integer("k", 0, 4)});
  REQUIRE(encoded_dimension(mixed, EncodingScheme::one_hot) == 5);
  REQUIRE(encoded_dimension(mixed, EncodingScheme::ordinal) == 3);
  Configuration m;
  m.values = {2.5, std::string("a"), 3LL};
  auto mv = encode(m, mixed, EncodingScheme::one_hot);
  REQUIRE(mv == std::vector<double>{0.25, 1.0, 0.0, 0.0, 0.75});
}

TEST_CASE("candidate sampling is seeded and exhausts finite spaces", "[core]") {
  ParamSpace cont({ParamSpec::continuous("x", 0.0, 1.0),
                   ParamSpec::continuous("y", -1.0, 1.0)});
  Rng r1(99), r2(99);
  auto a = sample_candidates(cont, 2000, r1);
  auto b = sample_candidates(cont, 2000, r2);
  REQUIRE(a.size() == 2000);
  REQUIRE(a == b);
  std::unordered_set<Configuration, ConfigurationHash> uniq(a.begin(), a.end());
  REQUIRE(uniq.size() == a.size());

  ParamSpace tiny({ParamSpec::integer("i", 0, 1),
                   ParamSpec::integer("j", 0, 1)});
  auto full = tiny.enumerate();
  Rng r3(1);
  auto none_left = sample_candidates(tiny, 10, r3, full);
  REQUIRE(none_left.empty());

  std::vector<Configuration> partial(full.begin(), full.begin() + 3);
  Rng r4(1);
  auto rest = sample_candidates(tiny, 10, r4, partial);
  REQUIRE(rest.size() == 1);
  REQUIRE(rest[0] == full[3]);
}

TEST_CASE("uniform sampling stays inside the space", "[core]") {
  ParamSpace space({ParamSpec::continuous("x", -2.0, 3.0),
                    ParamSpec::integer("k", 1, 5),
                    ParamSpec::categorical("c", {"u", "v"})});
  Rng rng(11);
  for (int i = 0; i < 500; ++i) {
    Configuration c = sample_uniform(space, rng);
    REQUIRE_NOTHROW(space.validate(c));
  }
}

TEST_CASE("trials are usable only with a finite, non-failed outcome", "[core]") {
  Trial t;
  REQUIRE_FALSE(t.usable());  // NaN performance
  t.performance = 1.5;
  REQUIRE(t.usable());
  t.failed = true;
  REQUIRE_FALSE(t.usable());
}

TEST_CASE("configuration hashing matches equality", "[core]") {
  ConfigurationHash h;
  Configuration a, b;
  a.values = {1.0, std::string("x"), 5LL};
  b.values = {1.0, std::string("x"), 5LL};
  REQUIRE(a == b);
  REQUIRE(h(a) == h(b));

  Configuration neg_zero, pos_zero;
  neg_zero.values = {-0.0};
  pos_zero.values = {0.0};
  REQUIRE(neg_zero == pos_zero);
  REQUIRE(h(neg_zero) == h(pos_zero));

  Configuration c = b;
  c.values[2] = 6LL;
  REQUIRE_FALSE(a == c);
}
