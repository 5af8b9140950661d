#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "cqopt/core/normal.hpp"
#include "cqopt/metrics/ranks.hpp"

namespace cqopt {

struct WilcoxonResult {
  double statistic = 0.0;  // rank sum of positive differences
  double p_value = 1.0;    // two-sided
  int n_used = 0;          // pairs remaining after dropping zero differences
  bool exact = false;
};

// Two-sided Wilcoxon signed-rank test on paired samples. Zero differences
// are dropped; tied absolute differences get average ranks. Small samples
// (n <= 25) use exact enumeration over sign patterns via a subset-sum count
// on doubled ranks (integral even with .5 average ranks); larger samples use
// the normal approximation with continuity and tie corrections.
inline WilcoxonResult wilcoxon_signed_rank(const std::vector<double>& x,
                                           const std::vector<double>& y) {
  if (x.size() != y.size())
    throw std::invalid_argument("wilcoxon: samples must be paired");
  std::vector<double> abs_d;
  std::vector<bool> positive;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = x[i] - y[i];
    if (d == 0.0) continue;
    abs_d.push_back(std::abs(d));
    positive.push_back(d > 0.0);
  }
  WilcoxonResult res;
  res.n_used = static_cast<int>(abs_d.size());
  if (abs_d.empty()) {
    res.exact = true;
    return res;  // all-zero differences: p = 1
  }

  const std::vector<double> ranks = average_ranks(abs_d);
  double w_plus = 0.0;
  for (std::size_t i = 0; i < ranks.size(); ++i)
    if (positive[i]) w_plus += ranks[i];
  res.statistic = w_plus;
  const int n = res.n_used;

  if (n <= 25) {
    res.exact = true;
    std::vector<long long> r2(ranks.size());
    long long total = 0;
    for (std::size_t i = 0; i < ranks.size(); ++i) {
      r2[i] = std::llround(2.0 * ranks[i]);
      total += r2[i];
    }
    std::vector<double> count(static_cast<std::size_t>(total) + 1, 0.0);
    count[0] = 1.0;
    for (long long r : r2)
      for (long long s = total; s >= r; --s)
        count[static_cast<std::size_t>(s)] +=
            count[static_cast<std::size_t>(s - r)];
    const long long w2 = std::llround(2.0 * w_plus);
    double le = 0.0, ge = 0.0;
    for (long long s = 0; s <= total; ++s) {
      if (s <= w2) le += count[static_cast<std::size_t>(s)];
      if (s >= w2) ge += count[static_cast<std::size_t>(s)];
    }
    const double denom = std::ldexp(1.0, n);  // 2^n sign patterns
    res.p_value = std::min(1.0, 2.0 * std::min(le, ge) / denom);
    return res;
  }

  const double nd = static_cast<double>(n);
  const double mu = nd * (nd + 1.0) / 4.0;
  double tie_term = 0.0;
  std::map<double, int> tie_groups;
  for (double a : abs_d) tie_groups[a] += 1;
  for (const auto& [value, t] : tie_groups) {
    (void)value;
    const double td = static_cast<double>(t);
    tie_term += td * td * td - td;
  }
  const double var = nd * (nd + 1.0) * (2.0 * nd + 1.0) / 24.0 - tie_term / 48.0;
  if (var <= 0.0) {
    res.p_value = 1.0;
    return res;
  }
  const double diff = w_plus - mu;
  const double cc = diff > 0.0 ? -0.5 : (diff < 0.0 ? 0.5 : 0.0);
  const double z = (diff + cc) / std::sqrt(var);
  res.p_value = std::min(1.0, 2.0 * (1.0 - normal_cdf(std::abs(z))));
  return res;
}

struct BhResult {
  std::vector<double> adjusted;
  std::vector<bool> reject;
};

// Benjamini-Hochberg step-up: adjusted p_(i) = min_{j >= i} m * p_(j) / j,
// capped at 1; reject where adjusted <= q.
inline BhResult benjamini_hochberg(const std::vector<double>& p_values,
                                   double q = 0.05) {
  if (!(q > 0.0 && q < 1.0))
    throw std::invalid_argument("benjamini-hochberg: q must be in (0, 1)");
  for (double p : p_values)
    if (!(p >= 0.0 && p <= 1.0))
      throw std::invalid_argument("benjamini-hochberg: p-values must lie in [0, 1]");
  const std::size_t m = p_values.size();
  BhResult res;
  res.adjusted.assign(m, 1.0);
  res.reject.assign(m, false);
  if (m == 0) return res;

  std::vector<std::size_t> order(m);
  for (std::size_t i = 0; i < m; ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return p_values[a] < p_values[b];
  });

  double running = 1.0;
  for (std::size_t i = m; i-- > 0;) {
    const double scaled = static_cast<double>(m) * p_values[order[i]] /
                          static_cast<double>(i + 1);
    running = std::min(running, scaled);
    res.adjusted[order[i]] = std::min(1.0, running);
  }
  for (std::size_t i = 0; i < m; ++i) res.reject[i] = res.adjusted[i] <= q;
  return res;
}

struct PairwiseComparison {
  std::vector<std::string> algorithms;
  std::vector<std::vector<double>> p_raw;       // symmetric, unit diagonal
  std::vector<std::vector<double>> p_adjusted;  // BH over the upper triangle
  std::vector<std::vector<bool>> significant;
};

// Pairwise Wilcoxon over aligned final performances, BH-corrected across all
// distinct pairs.
inline PairwiseComparison wilcoxon_bh(
    const std::vector<std::string>& algorithms,
    const std::vector<std::vector<double>>& finals, double q = 0.05) {
  const std::size_t A = algorithms.size();
  if (finals.size() != A)
    throw std::invalid_argument("pairwise comparison: one series per algorithm");
  if (A < 2)
    throw std::invalid_argument("pairwise comparison: need at least two algorithms");
  const std::size_t n = finals.front().size();
  for (const auto& f : finals)
    if (f.size() != n)
      throw std::invalid_argument("pairwise comparison: unit counts must align");
  if (n < 6)
    throw std::invalid_argument("pairwise comparison: need at least 6 paired units");

  PairwiseComparison out;
  out.algorithms = algorithms;
  out.p_raw.assign(A, std::vector<double>(A, 1.0));
  out.p_adjusted.assign(A, std::vector<double>(A, 1.0));
  out.significant.assign(A, std::vector<bool>(A, false));

  std::vector<double> flat;
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t i = 0; i < A; ++i)
    for (std::size_t j = i + 1; j < A; ++j) {
      const double p = wilcoxon_signed_rank(finals[i], finals[j]).p_value;
      out.p_raw[i][j] = out.p_raw[j][i] = p;
      flat.push_back(p);
      pairs.emplace_back(i, j);
    }
  const BhResult bh = benjamini_hochberg(flat, q);
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    const auto [i, j] = pairs[k];
    out.p_adjusted[i][j] = out.p_adjusted[j][i] = bh.adjusted[k];
    out.significant[i][j] = out.significant[j][i] = bh.reject[k];
  }
  return out;
}

}  // namespace cqopt
