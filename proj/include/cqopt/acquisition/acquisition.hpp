#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "cqopt/core/rng.hpp"
#include "cqopt/surrogates/quantile_levels.hpp"

namespace cqopt {

enum class AcquisitionKind { thompson, obs, ei, ucb_optimistic };
enum class EiMethod { interval_uniform, monte_carlo };

struct AcquisitionSpec {
  AcquisitionKind kind = AcquisitionKind::thompson;
  EiMethod ei_method = EiMethod::interval_uniform;
  int ei_mc_samples = 256;
  double ucb_alpha = 0.4;  // pair (alpha/2, 1-alpha/2) used for the upper bound

  void validate() const {
    if (ei_mc_samples < 1)
      throw std::invalid_argument("acquisition: ei_mc_samples must be >= 1");
    if (!(ucb_alpha > 0.0 && ucb_alpha < 1.0))
      throw std::invalid_argument("acquisition: ucb_alpha must lie in (0,1)");
  }
};

namespace detail {
constexpr std::uint64_t kAcqStreamTag = 0x6163u;
}

// Per-candidate draw of one grid value, index uniform over the M levels.
// Candidate c draws from the substream fork(tag, c) of `rng`, so scores are
// a pure function of (rng base seed, candidate index).
inline std::vector<double> thompson_scores(const Eigen::MatrixXd& grid,
                                           const Rng& rng) {
  const Eigen::Index m = grid.cols();
  if (m == 0) throw std::invalid_argument("thompson: empty grid");
  std::vector<double> scores(static_cast<std::size_t>(grid.rows()));
  for (Eigen::Index c = 0; c < grid.rows(); ++c) {
    Rng sub = rng.fork(detail::kAcqStreamTag, static_cast<std::uint64_t>(c));
    scores[static_cast<std::size_t>(c)] =
        grid(c, static_cast<Eigen::Index>(sub.uniform_index(
                    static_cast<std::size_t>(m))));
  }
  return scores;
}

// Optimistic variant: the same coupled index draw, floored by the model's
// conditional expectation proxy.
inline std::vector<double> obs_scores(const Eigen::MatrixXd& grid,
                                      const Eigen::VectorXd& expectation,
                                      const Rng& rng) {
  if (expectation.size() != grid.rows())
    throw std::invalid_argument("obs: one expectation per candidate required");
  std::vector<double> scores = thompson_scores(grid, rng);
  for (Eigen::Index c = 0; c < grid.rows(); ++c)
    scores[static_cast<std::size_t>(c)] =
        std::max(scores[static_cast<std::size_t>(c)], expectation(c));
  return scores;
}

namespace detail {

inline double uniform_segment_ei(double a, double b, double f_star) {
  // E[max(V - f_star, 0)] for V ~ Uniform[a, b]
  if (b <= f_star) return 0.0;
  if (a >= f_star) return 0.5 * (a + b) - f_star;
  if (b <= a) return std::max(a - f_star, 0.0);
  const double d = b - f_star;
  return d * d / (2.0 * (b - a));
}

// Inverse CDF of the censored piecewise-uniform grid distribution: tail mass
// collapses onto the outermost quantile values.
inline double grid_inverse_cdf(const double* v, const std::vector<double>& taus,
                               double u) {
  const std::size_t m = taus.size();
  if (u <= taus.front()) return v[0];
  if (u >= taus.back()) return v[m - 1];
  std::size_t i =
      static_cast<std::size_t>(std::upper_bound(taus.begin(), taus.end(), u) -
                               taus.begin()) -
      1;
  if (i >= m - 1) return v[m - 1];
  const double t = (u - taus[i]) / (taus[i + 1] - taus[i]);
  return v[i] + t * (v[i + 1] - v[i]);
}

}  // namespace detail

// Closed-form EI over the censored piecewise-uniform reading of a sorted
// quantile row: mass tau_{i+1}-tau_i uniform between adjacent quantiles,
// tail mass tau_1 and 1-tau_M as atoms at the outermost values.
inline double ei_interval_uniform(const double* v, const QuantileLevels& levels,
                                  double f_star) {
  const std::size_t m = levels.size();
  double ei = levels[0] * std::max(v[0] - f_star, 0.0) +
              (1.0 - levels[m - 1]) * std::max(v[m - 1] - f_star, 0.0);
  for (std::size_t i = 0; i + 1 < m; ++i)
    ei += (levels[i + 1] - levels[i]) *
          detail::uniform_segment_ei(v[i], v[i + 1], f_star);
  return ei;
}

// Stratified inverse-CDF Monte Carlo estimate of the same expectation: one
// jittered draw per stratum over the censored grid distribution.
inline double ei_monte_carlo(const double* v, const QuantileLevels& levels,
                             double f_star, int n_samples, Rng& rng) {
  double total = 0.0;
  for (int s = 0; s < n_samples; ++s) {
    const double u = (static_cast<double>(s) + rng.uniform01()) /
                     static_cast<double>(n_samples);
    const double draw = detail::grid_inverse_cdf(v, levels.taus, u);
    total += std::max(draw - f_star, 0.0);
  }
  return total / static_cast<double>(n_samples);
}

inline std::vector<double> expected_improvement(const Eigen::MatrixXd& grid,
                                                const QuantileLevels& levels,
                                                double f_star, EiMethod method,
                                                int mc_samples, const Rng& rng) {
  if (static_cast<std::size_t>(grid.cols()) != levels.size())
    throw std::invalid_argument("ei: grid/levels width mismatch");
  std::vector<double> scores(static_cast<std::size_t>(grid.rows()));
  std::vector<double> row(static_cast<std::size_t>(grid.cols()));
  for (Eigen::Index c = 0; c < grid.rows(); ++c) {
    for (Eigen::Index k = 0; k < grid.cols(); ++k)
      row[static_cast<std::size_t>(k)] = grid(c, k);
    if (method == EiMethod::interval_uniform) {
      scores[static_cast<std::size_t>(c)] =
          ei_interval_uniform(row.data(), levels, f_star);
    } else {
      Rng sub = rng.fork(detail::kAcqStreamTag, static_cast<std::uint64_t>(c));
      scores[static_cast<std::size_t>(c)] =
          ei_monte_carlo(row.data(), levels, f_star, mc_samples, sub);
    }
  }
  return scores;
}

// Calibrated optimistic upper bound: raw upper quantile plus the pair's
// conformal adjustment.
inline double ucb_optimistic_score(double q_hi_raw, double adjustment) {
  return q_hi_raw + adjustment;
}

inline std::size_t select_next(const std::vector<double>& scores) {
  if (scores.empty())
    throw std::invalid_argument("select_next: no candidates to select from");
  std::size_t best = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (!std::isfinite(scores[i]))
      throw std::invalid_argument("select_next: non-finite acquisition score");
    if (scores[i] > scores[best]) best = i;
  }
  return best;
}

inline AcquisitionKind acquisition_kind_from_string(const std::string& name) {
  if (name == "thompson" || name == "ts") return AcquisitionKind::thompson;
  if (name == "obs") return AcquisitionKind::obs;
  if (name == "ei") return AcquisitionKind::ei;
  if (name == "ucb" || name == "ucb_optimistic") return AcquisitionKind::ucb_optimistic;
  throw std::invalid_argument("unknown acquisition '" + name + "'");
}

inline std::string to_string(AcquisitionKind kind) {
  switch (kind) {
    case AcquisitionKind::thompson: return "thompson";
    case AcquisitionKind::obs: return "obs";
    case AcquisitionKind::ei: return "ei";
    case AcquisitionKind::ucb_optimistic: return "ucb";
  }
  return "?";
}

}  // namespace cqopt
