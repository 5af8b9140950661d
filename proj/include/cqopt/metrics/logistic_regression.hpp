#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace cqopt {

struct LogisticFit {
  Eigen::VectorXd w;
  double intercept = 0.0;
  double log_likelihood = 0.0;
  bool converged = false;
};

namespace detail {

inline double bernoulli_log_likelihood(const Eigen::VectorXd& eta,
                                       const Eigen::VectorXd& y) {
  double ll = 0.0;
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    double p = 1.0 / (1.0 + std::exp(-eta(i)));
    p = std::min(1.0 - 1e-12, std::max(1e-12, p));
    ll += y(i) > 0.5 ? std::log(p) : std::log(1.0 - p);
  }
  return ll;
}

}  // namespace detail

// IRLS with a small ridge for numerical stability. Expects standardized
// columns; callers drop or zero constant features beforehand.
inline LogisticFit fit_logistic(const Eigen::MatrixXd& X,
                                const Eigen::VectorXd& y,
                                double ridge = 1e-8, int max_iters = 100) {
  if (X.rows() != y.size())
    throw std::invalid_argument("logistic fit: row mismatch");
  const Eigen::Index n = X.rows();
  const Eigen::Index d = X.cols();

  Eigen::MatrixXd A(n, d + 1);
  A.leftCols(d) = X;
  A.col(d).setOnes();

  Eigen::VectorXd beta = Eigen::VectorXd::Zero(d + 1);
  const double p0 = std::min(1.0 - 1e-12, std::max(1e-12, y.mean()));
  beta(d) = std::log(p0 / (1.0 - p0));

  LogisticFit fit;
  double best_ll = -std::numeric_limits<double>::infinity();
  Eigen::VectorXd best_beta = beta;

  for (int it = 0; it < max_iters; ++it) {
    Eigen::VectorXd eta = A * beta;
    const double ll = detail::bernoulli_log_likelihood(eta, y);
    if (ll > best_ll) {
      best_ll = ll;
      best_beta = beta;
    }

    Eigen::VectorXd p(n), wgt(n), z(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      p(i) = 1.0 / (1.0 + std::exp(-eta(i)));
      wgt(i) = std::max(1e-10, p(i) * (1.0 - p(i)));
      z(i) = eta(i) + (y(i) - p(i)) / wgt(i);
    }
    Eigen::MatrixXd G = A.transpose() * wgt.asDiagonal() * A;
    G.diagonal().array() += ridge;
    Eigen::VectorXd rhs = A.transpose() * (wgt.cwiseProduct(z));
    Eigen::VectorXd next = G.ldlt().solve(rhs);

    const double delta = (next - beta).template lpNorm<Eigen::Infinity>();
    beta = next;
    if (delta < 1e-10) {
      fit.converged = true;
      break;
    }
  }

  Eigen::VectorXd eta = A * beta;
  const double ll = detail::bernoulli_log_likelihood(eta, y);
  if (ll > best_ll) {
    best_ll = ll;
    best_beta = beta;
  }

  fit.w = best_beta.head(d);
  fit.intercept = best_beta(d);
  fit.log_likelihood = best_ll;
  return fit;
}

// Likelihood-ratio statistic of breach indicators against the encoded
// configuration features: 2 * (ll_full - ll_intercept). Returns 0 when either
// class has fewer than two observations; never negative.
inline double llr_statistic(const std::vector<bool>& breaches,
                            const Eigen::MatrixXd& features) {
  const Eigen::Index n = static_cast<Eigen::Index>(breaches.size());
  if (features.rows() != n)
    throw std::invalid_argument("llr: feature rows must match breach count");
  int n1 = 0;
  for (bool b : breaches) n1 += b ? 1 : 0;
  const int n0 = static_cast<int>(breaches.size()) - n1;
  if (n1 < 2 || n0 < 2) return 0.0;

  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) y(i) = breaches[static_cast<std::size_t>(i)] ? 1.0 : 0.0;

  Eigen::MatrixXd X = features;
  for (Eigen::Index j = 0; j < X.cols(); ++j) {
    const double mean = X.col(j).mean();
    X.col(j).array() -= mean;
    const double sd = std::sqrt(X.col(j).squaredNorm() /
                                static_cast<double>(std::max<Eigen::Index>(1, n - 1)));
    if (sd > 1e-12)
      X.col(j) /= sd;
    else
      X.col(j).setZero();
  }

  const LogisticFit full = fit_logistic(X, y);

  const double p_bar = y.mean();
  const double ll_intercept =
      static_cast<double>(n1) * std::log(p_bar) +
      static_cast<double>(n0) * std::log(1.0 - p_bar);

  const double llr = 2.0 * (full.log_likelihood - ll_intercept);
  return std::max(0.0, llr);
}

}  // namespace cqopt
