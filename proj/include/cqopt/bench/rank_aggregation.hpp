#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "cqopt/core/rng.hpp"
#include "cqopt/metrics/calibration_metrics.hpp"
#include "cqopt/metrics/ranks.hpp"

namespace cqopt {

enum class BudgetAxis { iteration, runtime };

inline BudgetAxis budget_axis_from_string(const std::string& s) {
  if (s == "iteration") return BudgetAxis::iteration;
  if (s == "runtime") return BudgetAxis::runtime;
  throw std::invalid_argument("unknown budget axis '" + s + "'");
}

// One study's trajectory, reduced to what rank aggregation needs.
struct RunSeries {
  std::string algorithm;
  std::string dataset;
  std::uint64_t seed = 0;
  std::vector<double> best_so_far;          // running best, NaN before any success
  std::vector<double> cumulative_seconds;   // objective runtime plus overhead
};

struct RankPath {
  std::vector<std::string> algorithms;  // sorted
  std::vector<std::string> datasets;    // sorted
  std::vector<double> budget;           // iteration index or relative budget
  std::vector<std::vector<double>> mean_rank;  // [algorithm][point]
  // dataset-level means kept for the bootstrap: [dataset][algorithm][point]
  std::vector<std::vector<std::vector<double>>> per_dataset_mean_rank;
};

struct RankCiBand {
  std::vector<std::vector<double>> lo;  // [algorithm][point]
  std::vector<std::vector<double>> hi;
};

namespace detail {

inline double step_value_at(const std::vector<double>& values,
                            const std::vector<double>& axis, double budget) {
  // latest observation whose axis position is within the budget
  double out = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (axis[i] <= budget + 1e-12)
      out = values[i];
    else
      break;
  }
  return out;
}

}  // namespace detail

// Ranks algorithms by cumulative best within every (dataset, seed, budget
// point) cell, then averages over seeds and datasets. Rank 1 is the best
// performer; ties share average ranks.
inline RankPath aggregate_rank_paths(const std::vector<RunSeries>& series,
                                     BudgetAxis axis, int n_points = 100) {
  if (series.empty()) throw std::invalid_argument("rank paths: no run series");
  if (n_points < 1) throw std::invalid_argument("rank paths: n_points must be >= 1");

  std::set<std::string> algo_set, ds_set;
  std::set<std::uint64_t> seed_set;
  for (const auto& s : series) {
    algo_set.insert(s.algorithm);
    ds_set.insert(s.dataset);
    seed_set.insert(s.seed);
  }
  RankPath path;
  path.algorithms.assign(algo_set.begin(), algo_set.end());
  path.datasets.assign(ds_set.begin(), ds_set.end());
  std::vector<std::uint64_t> seeds(seed_set.begin(), seed_set.end());

  std::map<std::tuple<std::string, std::string, std::uint64_t>, const RunSeries*>
      cells;
  for (const auto& s : series) {
    auto key = std::make_tuple(s.algorithm, s.dataset, s.seed);
    if (cells.count(key))
      throw std::invalid_argument("rank paths: duplicate result for algorithm '" +
                                  s.algorithm + "' dataset '" + s.dataset +
                                  "' seed " + std::to_string(s.seed));
    cells[key] = &s;
  }
  std::string missing;
  for (const auto& a : path.algorithms)
    for (const auto& d : path.datasets)
      for (auto sd : seeds)
        if (!cells.count(std::make_tuple(a, d, sd)))
          missing += "\n  algorithm '" + a + "' dataset '" + d + "' seed " +
                     std::to_string(sd);
  if (!missing.empty())
    throw std::invalid_argument("rank paths: incomplete grid, missing cells:" +
                                missing);

  std::size_t n_pts = 0;
  if (axis == BudgetAxis::iteration) {
    const std::size_t len = series.front().best_so_far.size();
    if (len == 0) throw std::invalid_argument("rank paths: empty series");
    for (const auto& s : series)
      if (s.best_so_far.size() != len)
        throw std::invalid_argument(
            "rank paths: iteration axis requires equal-length series");
    n_pts = len;
    for (std::size_t i = 0; i < len; ++i)
      path.budget.push_back(static_cast<double>(i));
  } else {
    n_pts = static_cast<std::size_t>(n_points);
    for (std::size_t j = 0; j < n_pts; ++j)
      path.budget.push_back(static_cast<double>(j + 1) /
                            static_cast<double>(n_pts));
    for (const auto& s : series) {
      if (s.cumulative_seconds.size() != s.best_so_far.size() ||
          s.best_so_far.empty())
        throw std::invalid_argument("rank paths: runtime axis needs aligned "
                                    "cumulative wallclock per iteration");
      if (!(s.cumulative_seconds.back() > 0.0))
        throw std::invalid_argument(
            "rank paths: non-positive total wallclock for algorithm '" +
            s.algorithm + "'");
    }
  }

  const std::size_t A = path.algorithms.size();
  const std::size_t D = path.datasets.size();
  path.per_dataset_mean_rank.assign(
      D, std::vector<std::vector<double>>(A, std::vector<double>(n_pts, 0.0)));

  std::vector<double> cell(A);
  for (std::size_t di = 0; di < D; ++di) {
    for (auto sd : seeds) {
      std::vector<const RunSeries*> runs(A);
      for (std::size_t ai = 0; ai < A; ++ai)
        runs[ai] = cells.at(
            std::make_tuple(path.algorithms[ai], path.datasets[di], sd));
      for (std::size_t pt = 0; pt < n_pts; ++pt) {
        for (std::size_t ai = 0; ai < A; ++ai) {
          double value;
          if (axis == BudgetAxis::iteration) {
            value = runs[ai]->best_so_far[pt];
          } else {
            const auto& cum = runs[ai]->cumulative_seconds;
            std::vector<double> rel(cum.size());
            for (std::size_t i = 0; i < cum.size(); ++i)
              rel[i] = cum[i] / cum.back();
            value = detail::step_value_at(runs[ai]->best_so_far, rel,
                                          path.budget[pt]);
          }
          if (std::isnan(value)) value = -std::numeric_limits<double>::infinity();
          cell[ai] = -value;  // rank 1 = highest performance
        }
        std::vector<double> ranks = average_ranks(cell);
        for (std::size_t ai = 0; ai < A; ++ai)
          path.per_dataset_mean_rank[di][ai][pt] += ranks[ai];
      }
    }
  }
  const double n_seeds = static_cast<double>(seeds.size());
  for (auto& per_algo : path.per_dataset_mean_rank)
    for (auto& ranks : per_algo)
      for (auto& r : ranks) r /= n_seeds;

  path.mean_rank.assign(A, std::vector<double>(n_pts, 0.0));
  for (std::size_t di = 0; di < D; ++di)
    for (std::size_t ai = 0; ai < A; ++ai)
      for (std::size_t pt = 0; pt < n_pts; ++pt)
        path.mean_rank[ai][pt] += path.per_dataset_mean_rank[di][ai][pt];
  for (auto& ranks : path.mean_rank)
    for (auto& r : ranks) r /= static_cast<double>(D);

  return path;
}

// Percentile band from resampling datasets with replacement.
inline RankCiBand bootstrap_rank_ci(const RankPath& path, Rng& rng,
                                    int n_boot = 2000, double level = 0.95) {
  const std::size_t D = path.per_dataset_mean_rank.size();
  if (D < 2)
    throw std::invalid_argument("rank bootstrap: need at least two datasets");
  if (n_boot < 1 || !(level > 0.0 && level < 1.0))
    throw std::invalid_argument("rank bootstrap: bad parameters");
  const std::size_t A = path.algorithms.size();
  const std::size_t P = path.budget.size();

  std::vector<std::vector<std::vector<double>>> boot(
      A, std::vector<std::vector<double>>(P));
  for (auto& per_algo : boot)
    for (auto& per_pt : per_algo) per_pt.reserve(static_cast<std::size_t>(n_boot));

  for (int b = 0; b < n_boot; ++b) {
    std::vector<std::size_t> picks(D);
    for (auto& p : picks) p = rng.uniform_index(D);
    for (std::size_t ai = 0; ai < A; ++ai)
      for (std::size_t pt = 0; pt < P; ++pt) {
        double acc = 0.0;
        for (auto p : picks) acc += path.per_dataset_mean_rank[p][ai][pt];
        boot[ai][pt].push_back(acc / static_cast<double>(D));
      }
  }

  RankCiBand band;
  band.lo.assign(A, std::vector<double>(P, 0.0));
  band.hi.assign(A, std::vector<double>(P, 0.0));
  const double tail = 0.5 * (1.0 - level);
  for (std::size_t ai = 0; ai < A; ++ai)
    for (std::size_t pt = 0; pt < P; ++pt) {
      band.lo[ai][pt] = detail::percentile_interpolated(boot[ai][pt], tail);
      band.hi[ai][pt] = detail::percentile_interpolated(boot[ai][pt], 1.0 - tail);
    }
  return band;
}

}  // namespace cqopt
