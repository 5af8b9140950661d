#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "cqopt/core/rng.hpp"
#include "cqopt/metrics/ranks.hpp"

namespace cqopt {

// Mean absolute deviation between empirical coverage and the target
// confidence over consecutive non-overlapping windows; a trailing partial
// window is dropped. Fewer observations than one window is an error.
inline double rolling_coverage_error(const std::vector<bool>& covered,
                                     double confidence, int window = 20) {
  if (window <= 0)
    throw std::invalid_argument("rolling coverage error: window must be positive");
  if (!(confidence > 0.0 && confidence < 1.0))
    throw std::invalid_argument("rolling coverage error: confidence must be in (0, 1)");
  const std::size_t w = static_cast<std::size_t>(window);
  const std::size_t n_windows = covered.size() / w;
  if (n_windows == 0)
    throw std::invalid_argument(
        "rolling coverage error: need at least one full window of observations");
  double total = 0.0;
  for (std::size_t b = 0; b < n_windows; ++b) {
    int hits = 0;
    for (std::size_t i = 0; i < w; ++i) hits += covered[b * w + i] ? 1 : 0;
    total += std::abs(static_cast<double>(hits) / static_cast<double>(w) -
                      confidence);
  }
  return total / static_cast<double>(n_windows);
}

// Running mean of the coverage indicator, one entry per observation.
inline std::vector<double> cumulative_coverage(const std::vector<bool>& covered) {
  std::vector<double> out;
  out.reserve(covered.size());
  double hits = 0.0;
  for (std::size_t i = 0; i < covered.size(); ++i) {
    hits += covered[i] ? 1.0 : 0.0;
    out.push_back(hits / static_cast<double>(i + 1));
  }
  return out;
}

inline double mean_interval_width(const std::vector<double>& lo,
                                  const std::vector<double>& hi) {
  if (lo.size() != hi.size())
    throw std::invalid_argument("mean width: endpoint series must align");
  if (lo.empty())
    throw std::invalid_argument("mean width: empty series");
  double total = 0.0;
  for (std::size_t i = 0; i < lo.size(); ++i) total += hi[i] - lo[i];
  return total / static_cast<double>(lo.size());
}

struct RankSummary {
  std::vector<double> mean_rank;  // per variant, lower is better
  std::vector<double> ci_lo;      // bootstrap percentile bounds
  std::vector<double> ci_hi;
  std::size_t n_cells = 0;
};

namespace detail {

inline double percentile_interpolated(std::vector<double> v, double q) {
  std::sort(v.begin(), v.end());
  if (v.size() == 1) return v[0];
  const double pos = q * static_cast<double>(v.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return v[lo] * (1.0 - frac) + v[hi] * frac;
}

}  // namespace detail

// Ranks each variant within every cell (smaller value is better, ties get
// average ranks), averages ranks across cells, and attaches a bootstrap
// percentile interval from resampling cells with replacement.
inline RankSummary rank_metrics_across_variants(
    const std::vector<std::vector<double>>& values_by_variant,
    std::uint64_t seed, int n_bootstrap = 2000, double ci_level = 0.95) {
  const std::size_t n_variants = values_by_variant.size();
  if (n_variants == 0)
    throw std::invalid_argument("rank metrics: no variants");
  const std::size_t n_cells = values_by_variant[0].size();
  if (n_cells == 0)
    throw std::invalid_argument("rank metrics: no cells");
  for (const auto& v : values_by_variant)
    if (v.size() != n_cells)
      throw std::invalid_argument("rank metrics: ragged cell values");
  if (n_bootstrap < 0 || !(ci_level > 0.0 && ci_level < 1.0))
    throw std::invalid_argument("rank metrics: bad bootstrap parameters");

  std::vector<std::vector<double>> cell_ranks(n_cells);
  for (std::size_t c = 0; c < n_cells; ++c) {
    std::vector<double> cell(n_variants);
    for (std::size_t v = 0; v < n_variants; ++v)
      cell[v] = values_by_variant[v][c];
    cell_ranks[c] = average_ranks(cell);
  }

  RankSummary out;
  out.n_cells = n_cells;
  out.mean_rank.assign(n_variants, 0.0);
  for (std::size_t c = 0; c < n_cells; ++c)
    for (std::size_t v = 0; v < n_variants; ++v)
      out.mean_rank[v] += cell_ranks[c][v];
  for (auto& m : out.mean_rank) m /= static_cast<double>(n_cells);

  out.ci_lo = out.mean_rank;
  out.ci_hi = out.mean_rank;
  if (n_bootstrap == 0) return out;

  Rng rng(seed);
  std::vector<std::vector<double>> boot(n_variants);
  for (auto& b : boot) b.reserve(static_cast<std::size_t>(n_bootstrap));
  std::vector<double> acc(n_variants);
  for (int b = 0; b < n_bootstrap; ++b) {
    std::fill(acc.begin(), acc.end(), 0.0);
    for (std::size_t c = 0; c < n_cells; ++c) {
      const std::size_t pick = rng.uniform_index(n_cells);
      for (std::size_t v = 0; v < n_variants; ++v) acc[v] += cell_ranks[pick][v];
    }
    for (std::size_t v = 0; v < n_variants; ++v)
      boot[v].push_back(acc[v] / static_cast<double>(n_cells));
  }
  const double tail = 0.5 * (1.0 - ci_level);
  for (std::size_t v = 0; v < n_variants; ++v) {
    out.ci_lo[v] = detail::percentile_interpolated(boot[v], tail);
    out.ci_hi[v] = detail::percentile_interpolated(boot[v], 1.0 - tail);
  }
  return out;
}

}  // namespace cqopt
