#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "cqopt/bench/tabular.hpp"
#include "cqopt/core/encoding.hpp"
#include "cqopt/core/rng.hpp"
#include "cqopt/surrogates/factory.hpp"
#include "cqopt/surrogates/features.hpp"
#include "cqopt/surrogates/pinball.hpp"

namespace cqopt {

// Mean training runtime over rows sampled with replacement.
inline double screen_size(const TabularBenchmark& bench, int n_sample, Rng& rng) {
  if (bench.configs.empty())
    throw std::invalid_argument("size screen: benchmark has no rows");
  if (n_sample <= 0)
    throw std::invalid_argument("size screen: sample count must be positive");
  double total = 0.0;
  for (int i = 0; i < n_sample; ++i) {
    const auto& config = bench.configs[rng.uniform_index(bench.configs.size())];
    const double rt = bench.rows.at(config).second;
    if (!std::isfinite(rt))
      throw std::runtime_error("size screen: benchmark lacks finite runtimes");
    total += rt;
  }
  return total / static_cast<double>(n_sample);
}

// Adjusted R-squared of an ordinary least squares regression of squared
// point-estimate residuals on the encoded configurations. The point estimator
// is a Gaussian process mean fitted on a subsample (cubic cost cap).
inline double screen_heteroskedasticity(const TabularBenchmark& bench,
                                        int n_sample, Rng& rng,
                                        int gp_subsample = 1000) {
  if (bench.configs.empty())
    throw std::invalid_argument("heteroskedasticity screen: benchmark has no rows");
  if (n_sample < 10)
    throw std::invalid_argument("heteroskedasticity screen: sample too small");
  std::vector<Configuration> sampled;
  std::vector<double> perf;
  sampled.reserve(static_cast<std::size_t>(n_sample));
  for (int i = 0; i < n_sample; ++i) {
    const auto& config = bench.configs[rng.uniform_index(bench.configs.size())];
    sampled.push_back(config);
    perf.push_back(bench.rows.at(config).first);
  }
  FeatureSet fs = build_features(sampled, bench.space);
  Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(
      perf.data(), static_cast<Eigen::Index>(perf.size()));

  const Eigen::Index n_fit =
      std::min<Eigen::Index>(gp_subsample, static_cast<Eigen::Index>(n_sample));
  std::vector<Eigen::Index> fit_idx(static_cast<std::size_t>(n_fit));
  for (Eigen::Index i = 0; i < n_fit; ++i) fit_idx[static_cast<std::size_t>(i)] = i;

  SurrogateSpec gp_spec;
  gp_spec.kind = SurrogateKind::qgp;
  auto gp = make_surrogate(gp_spec);
  QuantileLevels median_only{{0.5}};
  Eigen::VectorXd y_fit = y.head(n_fit);
  Rng fit_rng = rng.fork(0x6873u);
  gp->fit(fs.subset(fit_idx), y_fit, median_only, fit_rng);
  Eigen::VectorXd mu = gp->expectation(fs);

  Eigen::VectorXd sq_resid = (y - mu).array().square();

  const Eigen::Index n = sq_resid.size();
  const Eigen::Index p = fs.one_hot.cols();
  Eigen::MatrixXd A(n, p + 1);
  A.leftCols(p) = fs.one_hot;
  A.col(p).setOnes();
  // least-squares via SVD subsumes the singular-design fallback
  Eigen::VectorXd beta =
      A.bdcSvd(Eigen::ComputeThinU | Eigen::ComputeThinV).solve(sq_resid);
  Eigen::VectorXd fitted = A * beta;

  const double mean_r = sq_resid.mean();
  const double sst = (sq_resid.array() - mean_r).square().sum();
  const double ssr = (sq_resid - fitted).squaredNorm();
  if (sst <= 0.0) return 0.0;
  const double r2 = 1.0 - ssr / sst;
  const double denom =
      static_cast<double>(std::max<Eigen::Index>(1, n - p - 1));
  return 1.0 - (1.0 - r2) * static_cast<double>(n - 1) / denom;
}

// Mean absolute quantile skew of k-nearest-neighbor performance
// neighborhoods: ((q75-q50)-(q50-q25))/(q75-q25), zero-width IQR counts 0.
inline double screen_asymmetry(const TabularBenchmark& bench, int n_sample,
                               int k_neighbors, Rng& rng) {
  if (bench.configs.empty())
    throw std::invalid_argument("asymmetry screen: benchmark has no rows");
  if (k_neighbors < 10)
    throw std::invalid_argument("asymmetry screen: need at least 10 neighbors");
  if (n_sample <= 0)
    throw std::invalid_argument("asymmetry screen: sample count must be positive");

  const std::size_t n_rows = bench.configs.size();
  FeatureSet fs = build_features(bench.configs, bench.space);
  std::vector<double> perf(n_rows);
  for (std::size_t i = 0; i < n_rows; ++i)
    perf[i] = bench.rows.at(bench.configs[i]).first;

  const std::size_t k = std::min<std::size_t>(
      static_cast<std::size_t>(k_neighbors), n_rows);
  std::vector<std::pair<double, std::size_t>> dist(n_rows);
  double total = 0.0;
  for (int s = 0; s < n_sample; ++s) {
    const std::size_t pick = rng.uniform_index(n_rows);
    const Eigen::RowVectorXd x = fs.one_hot.row(static_cast<Eigen::Index>(pick));
    for (std::size_t i = 0; i < n_rows; ++i)
      dist[i] = {(fs.one_hot.row(static_cast<Eigen::Index>(i)) - x).squaredNorm(), i};
    std::nth_element(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k - 1),
                     dist.end());
    std::vector<double> neighborhood;
    neighborhood.reserve(k);
    for (std::size_t i = 0; i < k; ++i) neighborhood.push_back(perf[dist[i].second]);
    const double q25 = empirical_quantile(neighborhood, 0.25);
    const double q50 = empirical_quantile(neighborhood, 0.50);
    const double q75 = empirical_quantile(neighborhood, 0.75);
    const double iqr = q75 - q25;
    if (iqr > 0.0) total += std::abs(((q75 - q50) - (q50 - q25)) / iqr);
  }
  return total / static_cast<double>(n_sample);
}

}  // namespace cqopt
