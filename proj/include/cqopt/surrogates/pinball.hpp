#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace cqopt {

// Pinball (check) loss of a residual u = y - prediction at level tau.
inline double pinball_loss(double u, double tau) {
  return u >= 0.0 ? tau * u : (tau - 1.0) * u;
}

template <typename YVec, typename PVec>
double mean_pinball_loss(const YVec& y, const PVec& pred, double tau) {
  const std::size_t n = static_cast<std::size_t>(y.size());
  if (n == 0) throw std::invalid_argument("mean_pinball_loss: empty input");
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    total += pinball_loss(y[i] - pred[i], tau);
  return total / static_cast<double>(n);
}

// tau-quantile as the ceil(tau * n)-th order statistic (1-indexed).
inline double empirical_quantile(std::vector<double> values, double tau) {
  if (values.empty())
    throw std::invalid_argument("empirical_quantile: empty input");
  const std::size_t n = values.size();
  double raw = std::ceil(tau * static_cast<double>(n));
  std::size_t k = raw < 1.0 ? 1 : static_cast<std::size_t>(raw);
  if (k > n) k = n;
  std::nth_element(values.begin(), values.begin() + (k - 1), values.end());
  return values[k - 1];
}

// Smallest value whose cumulative weight reaches tau * total. Equal weights
// reduce to empirical_quantile.
inline double weighted_quantile(const std::vector<double>& values,
                                const std::vector<double>& weights, double tau) {
  if (values.empty() || values.size() != weights.size())
    throw std::invalid_argument("weighted_quantile: bad input sizes");
  std::vector<std::size_t> order(values.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  double total = 0.0;
  for (double w : weights) {
    if (w < 0.0) throw std::invalid_argument("weighted_quantile: negative weight");
    total += w;
  }
  if (total <= 0.0)
    throw std::invalid_argument("weighted_quantile: zero total weight");
  const double target = tau * total - 1e-12 * total;
  double cum = 0.0;
  for (std::size_t i = 0; i < order.size(); ++i) {
    cum += weights[order[i]];
    if (cum >= target && weights[order[i]] > 0.0) return values[order[i]];
  }
  return values[order.back()];
}

}  // namespace cqopt
