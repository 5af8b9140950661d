#pragma once

#include <cmath>
#include <memory>
#include <stdexcept>
#include <string>

#include "cqopt/bench/tabular.hpp"
#include "cqopt/core/param_space.hpp"
#include "cqopt/core/rng.hpp"
#include "cqopt/optimizer/objective.hpp"

namespace cqopt {

enum class SyntheticKind {
  branin_discretized,
  heteroskedastic_quadratic,
  asymmetric_noise_surface,
};

inline SyntheticKind synthetic_kind_from_string(const std::string& s) {
  if (s == "branin_discretized") return SyntheticKind::branin_discretized;
  if (s == "heteroskedastic_quadratic")
    return SyntheticKind::heteroskedastic_quadratic;
  if (s == "asymmetric_noise_surface")
    return SyntheticKind::asymmetric_noise_surface;
  throw std::invalid_argument("unknown synthetic objective '" + s + "'");
}

inline std::string to_string(SyntheticKind kind) {
  switch (kind) {
    case SyntheticKind::branin_discretized: return "branin_discretized";
    case SyntheticKind::heteroskedastic_quadratic:
      return "heteroskedastic_quadratic";
    case SyntheticKind::asymmetric_noise_surface:
      return "asymmetric_noise_surface";
  }
  throw std::invalid_argument("unknown synthetic kind");
}

namespace detail {

// The conditional noise law is a pure function of (noise seed, configuration),
// so re-evaluating a configuration always returns the same value.
inline double synthetic_u01(std::uint64_t noise_seed, const Configuration& config,
                            std::uint64_t salt) {
  const auto h = static_cast<std::uint64_t>(ConfigurationHash{}(config));
  std::uint64_t state = noise_seed ^ (h + 0x9e3779b97f4a7c15ULL + salt * 0x2545f4914f6cdd1dULL);
  std::uint64_t bits = splitmix64_next(state);
  bits ^= splitmix64_next(state);
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

inline double synthetic_normal(std::uint64_t noise_seed,
                               const Configuration& config) {
  const double u1 = synthetic_u01(noise_seed, config, 1);
  const double u2 = synthetic_u01(noise_seed, config, 2);
  const double r = std::sqrt(-2.0 * std::log(1.0 - u1));
  return r * std::cos(6.283185307179586476925286766559 * u2);
}

inline double synthetic_exponential(std::uint64_t noise_seed,
                                    const Configuration& config) {
  const double u = synthetic_u01(noise_seed, config, 3);
  return -std::log(1.0 - u);
}

inline double branin_value(double x1, double x2) {
  constexpr double pi = 3.14159265358979323846;
  const double a = 1.0;
  const double b = 5.1 / (4.0 * pi * pi);
  const double c = 5.0 / pi;
  const double r = 6.0;
  const double s = 10.0;
  const double t = 1.0 / (8.0 * pi);
  const double inner = x2 - b * x1 * x1 + c * x1 - r;
  return a * inner * inner + s * (1.0 - t) * std::cos(x1) + s;
}

struct SyntheticLaw {
  ParamSpace space;
  std::function<double(const Configuration&)> mean;
  std::function<double(const Configuration&, std::uint64_t)> noise;
  std::function<double(const Configuration&)> runtime;
};

inline SyntheticLaw synthetic_law(SyntheticKind kind) {
  SyntheticLaw law;
  switch (kind) {
    case SyntheticKind::branin_discretized:
      law.space = ParamSpace({ParamSpec::continuous("x1", -5.0, 10.0),
                              ParamSpec::continuous("x2", 0.0, 15.0)});
      law.mean = [](const Configuration& c) {
        return -branin_value(std::get<double>(c.values[0]),
                             std::get<double>(c.values[1]));
      };
      law.noise = [](const Configuration& c, std::uint64_t seed) {
        return 0.5 * synthetic_normal(seed, c);
      };
      law.runtime = [](const Configuration& c) {
        return 0.25 + 0.5 * (std::get<double>(c.values[0]) + 5.0) / 15.0;
      };
      break;
    case SyntheticKind::heteroskedastic_quadratic:
      law.space = ParamSpace({ParamSpec::continuous("x1", -2.0, 2.0),
                              ParamSpec::continuous("x2", -2.0, 2.0)});
      law.mean = [](const Configuration& c) {
        const double x1 = std::get<double>(c.values[0]);
        const double x2 = std::get<double>(c.values[1]);
        return 4.0 - (x1 * x1 + x2 * x2);
      };
      law.noise = [](const Configuration& c, std::uint64_t seed) {
        const double x1 = std::get<double>(c.values[0]);
        const double sd = 0.25 + 0.375 * std::abs(x1);
        return sd * synthetic_normal(seed, c);
      };
      law.runtime = [](const Configuration& c) {
        return 0.1 + 0.05 * (std::get<double>(c.values[0]) + 2.0) / 4.0;
      };
      break;
    case SyntheticKind::asymmetric_noise_surface:
      law.space = ParamSpace({ParamSpec::continuous("x1", 0.0, 1.0),
                              ParamSpec::continuous("x2", 0.0, 1.0)});
      law.mean = [](const Configuration& c) {
        const double x1 = std::get<double>(c.values[0]);
        const double x2 = std::get<double>(c.values[1]);
        return 2.0 - 3.0 * ((x1 - 0.7) * (x1 - 0.7) + (x2 - 0.3) * (x2 - 0.3));
      };
      law.noise = [](const Configuration& c, std::uint64_t seed) {
        return 0.6 * (synthetic_exponential(seed, c) - 1.0);
      };
      law.runtime = [](const Configuration& c) {
        return 0.15 + 0.1 * std::get<double>(c.values[1]);
      };
      break;
  }
  return law;
}

}  // namespace detail

// Evaluates a synthetic law on an inclusive n1 x n2 grid and freezes the
// noisy draws into a lookup table.
inline TabularBenchmark make_synthetic_table(SyntheticKind kind,
                                             std::uint64_t noise_seed,
                                             int n1 = 0, int n2 = 0) {
  if (n1 <= 0) n1 = kind == SyntheticKind::branin_discretized ? 50 : 45;
  if (n2 <= 0) n2 = kind == SyntheticKind::branin_discretized ? 40 : 45;
  if (n1 < 2 || n2 < 2)
    throw std::invalid_argument("synthetic table needs at least a 2x2 grid");
  detail::SyntheticLaw law = detail::synthetic_law(kind);

  TabularBenchmark bench;
  bench.space = law.space;
  bench.name = to_string(kind);
  const ParamSpec& p1 = law.space[0];
  const ParamSpec& p2 = law.space[1];
  for (int i = 0; i < n1; ++i) {
    const double x1 = p1.lo + (p1.hi - p1.lo) * static_cast<double>(i) /
                                  static_cast<double>(n1 - 1);
    for (int j = 0; j < n2; ++j) {
      const double x2 = p2.lo + (p2.hi - p2.lo) * static_cast<double>(j) /
                                    static_cast<double>(n2 - 1);
      Configuration config;
      config.values = {x1, x2};
      const double perf = law.mean(config) + law.noise(config, noise_seed);
      bench.rows.emplace(config, std::make_pair(perf, law.runtime(config)));
      bench.configs.push_back(config);
    }
  }
  return bench;
}

// Continuous synthetic objective; every evaluation of the same configuration
// returns the same noisy value.
class SyntheticObjective : public Objective {
 public:
  SyntheticObjective(SyntheticKind kind, std::uint64_t noise_seed)
      : kind_(kind), noise_seed_(noise_seed), law_(detail::synthetic_law(kind)) {}

  const ParamSpace& space() const override { return law_.space; }
  std::string name() const override { return to_string(kind_); }

  std::pair<double, double> evaluate(const Configuration& config) override {
    const double perf = law_.mean(config) + law_.noise(config, noise_seed_);
    return {perf, law_.runtime(config)};
  }

  SyntheticKind kind() const { return kind_; }

 private:
  SyntheticKind kind_;
  std::uint64_t noise_seed_;
  detail::SyntheticLaw law_;
};

// Grid kinds become frozen lookup tables; the others stay continuous.
inline std::unique_ptr<Objective> make_synthetic_objective(
    SyntheticKind kind, std::uint64_t noise_seed, int n1 = 0, int n2 = 0) {
  if (kind == SyntheticKind::branin_discretized)
    return std::make_unique<TabularObjective>(
        make_synthetic_table(kind, noise_seed, n1, n2));
  return std::make_unique<SyntheticObjective>(kind, noise_seed);
}

}  // namespace cqopt
