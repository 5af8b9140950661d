#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "cqopt/core/normal.hpp"
#include "cqopt/surrogates/surrogate.hpp"

namespace cqopt {

// Gaussian-process quantile model: ARD squared-exponential kernel plus white
// noise, hyperparameters from multi-start gradient ascent on the log marginal
// likelihood; quantiles are Gaussian (mu + z(tau) * sigma) with sigma taken
// from the noisy predictive distribution.
class QuantileGp : public QuantileSurrogate {
 public:
  explicit QuantileGp(const SurrogateSpec& spec) : spec_(spec) {}

  void fit(const FeatureSet& X, const Eigen::VectorXd& y,
           const QuantileLevels& levels, Rng& rng) override {
    levels.validate();
    levels_ = levels;
    fitted_ = true;
    cols_ = X.one_hot.cols();
    if (maybe_constant_fallback(y, levels)) return;

    const Eigen::Index n = X.one_hot.rows();
    X_ = X.one_hot;
    y_mean_ = y.mean();
    double var = (y.array() - y_mean_).square().sum() / static_cast<double>(n);
    y_sd_ = std::sqrt(var);
    if (y_sd_ < 1e-12) {  // constant outcomes: flat posterior at the mean
      constant_ = true;
      constant_values_.assign(levels.size(), y_mean_);
      return;
    }
    y_std_ = (y.array() - y_mean_) / y_sd_;

    const Eigen::Index d = cols_;
    sqdist_.clear();
    sqdist_.reserve(static_cast<std::size_t>(d));
    for (Eigen::Index j = 0; j < d; ++j) {
      Eigen::MatrixXd D(n, n);
      for (Eigen::Index a = 0; a < n; ++a)
        for (Eigen::Index b = 0; b < n; ++b) {
          double diff = X_(a, j) - X_(b, j);
          D(a, b) = diff * diff;
        }
      sqdist_.push_back(std::move(D));
    }

    best_lml_ = -std::numeric_limits<double>::infinity();
    Eigen::VectorXd best_theta;
    for (int s = 0; s < spec_.gp_starts; ++s) {
      Eigen::VectorXd theta = initial_theta(s, rng);
      double lml = optimize(theta);
      if (lml > best_lml_) {
        best_lml_ = lml;
        best_theta = theta;
      }
    }
    if (!best_theta.size())
      throw std::runtime_error("gp fit: no usable hyperparameter start");
    theta_ = best_theta;
    finalize();
    sqdist_.clear();  // only needed during optimization
  }

  Eigen::MatrixXd predict_raw(const FeatureSet& X) const override {
    require_fitted();
    if (X.one_hot.cols() != cols_)
      throw std::invalid_argument("gp model: feature dimension mismatch");
    if (constant_) return constant_predict(X.one_hot.rows());
    Eigen::VectorXd mu, sigma;
    posterior(X, mu, sigma);
    Eigen::MatrixXd out(X.one_hot.rows(), static_cast<Eigen::Index>(levels_.size()));
    for (std::size_t k = 0; k < levels_.size(); ++k) {
      const double z = normal_quantile(levels_[k]);
      out.col(static_cast<Eigen::Index>(k)) = mu + z * sigma;
    }
    return out;
  }

  Eigen::VectorXd expectation(const FeatureSet& X) const override {
    require_fitted();
    if (constant_)
      return Eigen::VectorXd::Constant(X.one_hot.rows(), constant_values_.front());
    Eigen::VectorXd mu, sigma;
    posterior(X, mu, sigma);
    return mu;
  }

  // Predictive mean and (noise-inclusive) standard deviation per row.
  void posterior(const FeatureSet& X, Eigen::VectorXd& mu,
                 Eigen::VectorXd& sigma) const {
    require_fitted();
    if (constant_) {
      mu = Eigen::VectorXd::Constant(X.one_hot.rows(), y_mean_);
      sigma = Eigen::VectorXd::Zero(X.one_hot.rows());
      return;
    }
    const Eigen::Index m = X.one_hot.rows(), n = X_.rows(), d = cols_;
    const double sf2 = std::exp(theta_(d)), sn2 = std::exp(theta_(d + 1));
    mu.resize(m);
    sigma.resize(m);
    Eigen::VectorXd kstar(n);
    for (Eigen::Index r = 0; r < m; ++r) {
      for (Eigen::Index i = 0; i < n; ++i) {
        double s = 0.0;
        for (Eigen::Index j = 0; j < d; ++j) {
          double diff = X.one_hot(r, j) - X_(i, j);
          double ell = std::exp(theta_(j));
          s += diff * diff / (ell * ell);
        }
        kstar(i) = sf2 * std::exp(-0.5 * s);
      }
      mu(r) = y_mean_ + y_sd_ * kstar.dot(alpha_);
      Eigen::VectorXd v = chol_.matrixL().solve(kstar);
      double var = sf2 + sn2 + jitter_ - v.squaredNorm();
      sigma(r) = y_sd_ * std::sqrt(std::max(var, 0.0));
    }
  }

  double log_marginal_likelihood() const { return best_lml_; }
  const Eigen::VectorXd& log_hyperparameters() const { return theta_; }

 private:
  Eigen::VectorXd initial_theta(int start, Rng& rng) const {
    const Eigen::Index d = cols_;
    Eigen::VectorXd theta(d + 2);
    if (start <= 1) {
      for (Eigen::Index j = 0; j < d; ++j) {
        std::vector<double> dist;
        for (Eigen::Index a = 0; a < X_.rows(); ++a)
          for (Eigen::Index b = a + 1; b < X_.rows(); ++b) {
            double v = std::abs(X_(a, j) - X_(b, j));
            if (v > 0.0) dist.push_back(v);
          }
        double ell = dist.empty() ? 0.5 : empirical_quantile(dist, 0.5);
        theta(j) = std::log(std::clamp(ell, 1e-2, 1e2));
      }
      theta(d) = 0.0;  // sf2 = 1 on standardized outcomes
      // Start 1 probes the near-interpolation regime; on noisy data its log
      // marginal likelihood loses the multi-start comparison.
      theta(d + 1) = start == 0 ? std::log(0.1) : std::log(1e-9);
    } else {
      Rng r = rng.fork(0x675fu, static_cast<std::uint64_t>(start));
      for (Eigen::Index j = 0; j < d; ++j)
        theta(j) = r.uniform(std::log(0.05), std::log(10.0));
      theta(d) = r.uniform(std::log(0.1), std::log(10.0));
      theta(d + 1) = r.uniform(std::log(1e-6), std::log(0.5));
    }
    return theta;
  }

  // Builds K(theta), its Cholesky factor (with escalating jitter) and alpha.
  // Returns the log marginal likelihood.
  double decompose(const Eigen::VectorXd& theta, Eigen::MatrixXd& Kse,
                   Eigen::LLT<Eigen::MatrixXd>& chol, Eigen::VectorXd& alpha,
                   double& jitter_used) const {
    const Eigen::Index n = X_.rows(), d = cols_;
    const double sf2 = std::exp(theta(d)), sn2 = std::exp(theta(d + 1));
    Eigen::MatrixXd S = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index j = 0; j < d; ++j) {
      double ell = std::exp(theta(j));
      S += sqdist_[static_cast<std::size_t>(j)] / (ell * ell);
    }
    Kse = (-0.5 * S.array()).exp();
    Eigen::MatrixXd K = sf2 * Kse;
    K.diagonal().array() += sn2;

    jitter_used = 0.0;
    for (double jitter = 0.0;; jitter = jitter == 0.0 ? 1e-10 : jitter * 100.0) {
      Eigen::MatrixXd Kj = K;
      Kj.diagonal().array() += jitter;
      chol.compute(Kj);
      if (chol.info() == Eigen::Success) {
        jitter_used = jitter;
        break;
      }
      if (jitter >= 1e-4)
        throw std::runtime_error("gp fit: covariance not positive definite");
    }
    alpha = chol.solve(y_std_);
    double logdet = 0.0;
    for (Eigen::Index i = 0; i < n; ++i)
      logdet += std::log(chol.matrixL()(i, i));
    return -0.5 * y_std_.dot(alpha) - logdet -
           0.5 * static_cast<double>(n) * std::log(2.0 * 3.14159265358979323846);
  }

  // Adam ascent on the log marginal likelihood in log-parameter space.
  double optimize(Eigen::VectorXd& theta) const {
    const Eigen::Index d = cols_, n = X_.rows();
    Eigen::VectorXd lo(d + 2), hi(d + 2);
    for (Eigen::Index j = 0; j < d; ++j) {
      lo(j) = std::log(1e-2);
      hi(j) = std::log(1e2);
    }
    lo(d) = std::log(1e-4);
    hi(d) = std::log(1e2);
    lo(d + 1) = std::log(1e-10);
    hi(d + 1) = std::log(10.0);
    auto project = [&](Eigen::VectorXd& t) {
      for (Eigen::Index j = 0; j < t.size(); ++j)
        t(j) = std::clamp(t(j), lo(j), hi(j));
    };
    project(theta);

    Eigen::VectorXd m = Eigen::VectorXd::Zero(d + 2);
    Eigen::VectorXd v = Eigen::VectorXd::Zero(d + 2);
    double lml = -std::numeric_limits<double>::infinity();
    Eigen::MatrixXd Kse;
    Eigen::LLT<Eigen::MatrixXd> chol;
    Eigen::VectorXd alpha;
    double jitter = 0.0;

    Eigen::VectorXd best_theta = theta;
    double best_lml = -std::numeric_limits<double>::infinity();
    for (int it = 0; it < spec_.gp_opt_iters; ++it) {
      try {
        lml = decompose(theta, Kse, chol, alpha, jitter);
      } catch (const std::runtime_error&) {
        break;  // hopeless corner of the space; keep the best seen so far
      }
      if (lml > best_lml) {
        best_lml = lml;
        best_theta = theta;
      }

      Eigen::MatrixXd Kinv = chol.solve(Eigen::MatrixXd::Identity(n, n));
      Eigen::MatrixXd M = alpha * alpha.transpose() - Kinv;
      const double sf2 = std::exp(theta(d)), sn2 = std::exp(theta(d + 1));
      Eigen::VectorXd grad(d + 2);
      for (Eigen::Index j = 0; j < d; ++j) {
        double ell = std::exp(theta(j));
        grad(j) = 0.5 * (M.array() * (sf2 * Kse.array()) *
                         sqdist_[static_cast<std::size_t>(j)].array() / (ell * ell))
                            .sum();
      }
      grad(d) = 0.5 * (M.array() * (sf2 * Kse.array())).sum();
      grad(d + 1) = 0.5 * sn2 * M.trace();
      if (grad.lpNorm<Eigen::Infinity>() < 1e-5) break;

      // Adam (ascent)
      const double lr = 0.05, b1 = 0.9, b2 = 0.999;
      m = b1 * m + (1.0 - b1) * grad;
      v = b2 * v.array().matrix() + (1.0 - b2) * grad.cwiseProduct(grad);
      double t = it + 1;
      Eigen::VectorXd mhat = m / (1.0 - std::pow(b1, t));
      Eigen::VectorXd vhat = v / (1.0 - std::pow(b2, t));
      Eigen::VectorXd step =
          lr * mhat.array().matrix().cwiseQuotient(
                   (vhat.array().sqrt() + 1e-8).matrix());
      if (step.lpNorm<Eigen::Infinity>() < 1e-9) break;
      theta += step;
      project(theta);
    }
    theta = best_theta;
    return best_lml;
  }

  void finalize() {
    Eigen::MatrixXd Kse;
    double lml = decompose(theta_, Kse, chol_, alpha_, jitter_);
    best_lml_ = lml;
  }

  SurrogateSpec spec_;
  Eigen::Index cols_ = 0;
  Eigen::MatrixXd X_;
  Eigen::VectorXd y_std_;
  double y_mean_ = 0.0, y_sd_ = 1.0;
  std::vector<Eigen::MatrixXd> sqdist_;
  Eigen::VectorXd theta_;
  Eigen::LLT<Eigen::MatrixXd> chol_;
  Eigen::VectorXd alpha_;
  double jitter_ = 0.0;
  double best_lml_ = 0.0;
};

}  // namespace cqopt
