#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace cqopt {

struct QuantileLevels {
  std::vector<double> taus;  // strictly increasing, all in (0,1)

  std::size_t size() const { return taus.size(); }
  double operator[](std::size_t i) const { return taus[i]; }

  void validate() const {
    if (taus.empty()) throw std::invalid_argument("quantile grid is empty");
    for (std::size_t i = 0; i < taus.size(); ++i) {
      if (!(taus[i] > 0.0 && taus[i] < 1.0))
        throw std::invalid_argument("quantile levels must lie in (0,1)");
      if (i > 0 && !(taus[i] > taus[i - 1]))
        throw std::invalid_argument("quantile levels must be strictly increasing");
    }
  }
};

// Equally spaced interior grid tau_i = i/(M+1), i = 1..M.
inline QuantileLevels make_quantile_grid(int m) {
  if (m < 1) throw std::invalid_argument("quantile grid size must be positive");
  QuantileLevels levels;
  levels.taus.reserve(m);
  for (int i = 1; i <= m; ++i)
    levels.taus.push_back(static_cast<double>(i) / (m + 1));
  return levels;
}

// A symmetric pair (tau_lo, tau_hi) with tau_lo + tau_hi = 1; the interval
// between the two quantiles targets miscoverage alpha = 2 * tau_lo.
struct QuantilePair {
  std::size_t lo_index = 0;
  std::size_t hi_index = 0;
  double tau_lo = 0.0;
  double tau_hi = 0.0;

  double alpha_nominal() const { return 2.0 * tau_lo; }
  double confidence() const { return 1.0 - alpha_nominal(); }
};

// Nested symmetric pairs of a grid, outermost first. Requires every level
// to have its mirror in the grid.
inline std::vector<QuantilePair> symmetric_pairs(const QuantileLevels& levels) {
  levels.validate();
  if (levels.size() % 2 != 0)
    throw std::invalid_argument("symmetric pairing needs an even grid");
  std::vector<QuantilePair> pairs;
  const std::size_t m = levels.size();
  for (std::size_t i = 0; i < m / 2; ++i) {
    const double lo = levels[i];
    const double hi = levels[m - 1 - i];
    if (std::abs(lo + hi - 1.0) > 1e-9)
      throw std::invalid_argument("quantile grid is not symmetric around 0.5");
    pairs.push_back({i, m - 1 - i, lo, hi});
  }
  return pairs;
}

// Levels for a set of central confidence values: confidence c maps to the
// pair ((1-c)/2, (1+c)/2). Returns the sorted union.
inline QuantileLevels levels_for_confidences(const std::vector<double>& confidences) {
  std::vector<double> taus;
  for (double c : confidences) {
    if (!(c > 0.0 && c < 1.0))
      throw std::invalid_argument("confidence must lie in (0,1)");
    taus.push_back((1.0 - c) / 2.0);
    taus.push_back((1.0 + c) / 2.0);
  }
  std::sort(taus.begin(), taus.end());
  taus.erase(std::unique(taus.begin(), taus.end(),
                         [](double a, double b) { return std::abs(a - b) < 1e-12; }),
             taus.end());
  QuantileLevels levels{std::move(taus)};
  levels.validate();
  return levels;
}

}  // namespace cqopt
