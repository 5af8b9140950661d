#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <vector>

#include "cqopt/surrogates/surrogate.hpp"

namespace cqopt {

struct PinballLinearFit {
  Eigen::VectorXd w;
  double b = 0.0;
  double objective = std::numeric_limits<double>::infinity();
};

namespace detail {

inline double pinball_objective(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                const Eigen::VectorXd& w, double b, double tau,
                                double lambda) {
  Eigen::VectorXd pred = X * w;
  pred.array() += b;
  double loss = 0.0;
  for (Eigen::Index i = 0; i < y.size(); ++i)
    loss += pinball_loss(y(i) - pred(i), tau);
  return loss / static_cast<double>(y.size()) + lambda * w.lpNorm<1>();
}

// One iteratively-reweighted pass: weighted least squares against the
// current residuals, optional nonnegativity via active-set clamping.
inline void irls_step(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                      Eigen::VectorXd& w, double& b, double tau, double lambda,
                      bool nonneg, double scale) {
  const Eigen::Index n = X.rows(), d = X.cols();
  Eigen::VectorXd u = y - X * w;
  u.array() -= b;
  Eigen::VectorXd wts(n);
  const double floor_eps = 1e-8 * (1.0 + scale);
  for (Eigen::Index i = 0; i < n; ++i) {
    double c = u(i) >= 0.0 ? tau : (1.0 - tau);
    wts(i) = c / std::max(std::abs(u(i)), floor_eps);
  }

  std::vector<bool> active(static_cast<std::size_t>(d), true);
  for (int pass = 0; pass <= d; ++pass) {
    Eigen::Index k = 0;
    for (Eigen::Index j = 0; j < d; ++j)
      if (active[static_cast<std::size_t>(j)]) ++k;
    Eigen::MatrixXd A(n, k + 1);
    Eigen::Index col = 0;
    for (Eigen::Index j = 0; j < d; ++j)
      if (active[static_cast<std::size_t>(j)]) A.col(col++) = X.col(j);
    A.col(k).setOnes();

    Eigen::MatrixXd G = A.transpose() * wts.asDiagonal() * A;
    Eigen::VectorXd r = A.transpose() * (wts.asDiagonal() * y);
    col = 0;
    for (Eigen::Index j = 0; j < d; ++j)
      if (active[static_cast<std::size_t>(j)]) {
        // adaptive ridge stand-in for the L1 term, plus a tiny stabilizer
        G(col, col) += lambda / (std::abs(w(j)) + 1e-8) + 1e-12;
        ++col;
      }
    G(k, k) += 1e-12;
    Eigen::VectorXd beta = G.ldlt().solve(r);

    bool clamped = false;
    col = 0;
    Eigen::VectorXd w_new = Eigen::VectorXd::Zero(d);
    for (Eigen::Index j = 0; j < d; ++j) {
      if (!active[static_cast<std::size_t>(j)]) continue;
      double v = beta(col++);
      if (nonneg && v < 0.0) {
        active[static_cast<std::size_t>(j)] = false;
        clamped = true;
      } else {
        w_new(j) = v;
      }
    }
    if (!clamped) {
      w = w_new;
      b = beta(k);
      return;
    }
  }
  // every coefficient clamped away: intercept-only weighted fit
  w.setZero();
  b = (wts.array() * y.array()).sum() / wts.sum();
}

// Multi-start IRLS minimizer of mean pinball + lambda * ||w||_1. The best
// iterate across all starts (inits included) is returned, so the objective
// never exceeds the best warm start's.
inline PinballLinearFit fit_pinball_linear(
    const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double tau, double lambda,
    bool nonneg, int max_iters, const std::vector<PinballLinearFit>& warm_starts) {
  const Eigen::Index d = X.cols();
  std::vector<double> ys(y.data(), y.data() + y.size());
  double scale = 0.0;
  for (double v : ys) scale = std::max(scale, std::abs(v));

  std::vector<PinballLinearFit> starts = warm_starts;
  {
    PinballLinearFit zero;
    zero.w = Eigen::VectorXd::Zero(d);
    zero.b = empirical_quantile(ys, tau);
    starts.push_back(zero);
  }

  PinballLinearFit best;
  for (const auto& start : starts) {
    Eigen::VectorXd w = start.w;
    double b = start.b;
    double obj = pinball_objective(X, y, w, b, tau, lambda);
    if (obj < best.objective) best = {w, b, obj};
    Eigen::VectorXd prev_w = w;
    double prev_b = b;
    for (int it = 0; it < max_iters; ++it) {
      irls_step(X, y, w, b, tau, lambda, nonneg, scale);
      obj = pinball_objective(X, y, w, b, tau, lambda);
      if (obj < best.objective) best = {w, b, obj};
      if ((w - prev_w).lpNorm<Eigen::Infinity>() + std::abs(b - prev_b) < 1e-12)
        break;
      prev_w = w;
      prev_b = b;
    }
  }
  return best;
}

}  // namespace detail

// Linear quantile regression with an L1 penalty, one coefficient vector per
// level. Features are standardized internally; zero-variance columns drop out.
class QuantileLasso : public QuantileSurrogate {
 public:
  explicit QuantileLasso(const SurrogateSpec& spec) : spec_(spec) {}

  void fit(const FeatureSet& X, const Eigen::VectorXd& y,
           const QuantileLevels& levels, Rng& /*rng*/) override {
    levels.validate();
    levels_ = levels;
    fitted_ = true;
    cols_ = X.one_hot.cols();
    if (maybe_constant_fallback(y, levels)) return;

    const Eigen::Index n = X.one_hot.rows(), d = X.one_hot.cols();
    mean_ = X.one_hot.colwise().mean();
    sd_.resize(d);
    Eigen::MatrixXd Z(n, d);
    for (Eigen::Index j = 0; j < d; ++j) {
      double var = (X.one_hot.col(j).array() - mean_(j)).square().sum() /
                   static_cast<double>(n);
      sd_(j) = std::sqrt(var);
      if (sd_(j) < 1e-12) {
        sd_(j) = 0.0;  // column carries no signal; keep its weight at zero
        Z.col(j).setZero();
      } else {
        Z.col(j) = (X.one_hot.col(j).array() - mean_(j)) / sd_(j);
      }
    }

    fits_.clear();
    for (double tau : levels_.taus)
      fits_.push_back(detail::fit_pinball_linear(Z, y, tau, spec_.ql_lambda,
                                                 /*nonneg=*/false,
                                                 spec_.ql_max_iters, {}));
  }

  Eigen::MatrixXd predict_raw(const FeatureSet& X) const override {
    require_fitted();
    if (X.one_hot.cols() != cols_)
      throw std::invalid_argument("quantile lasso: feature dimension mismatch");
    if (constant_) return constant_predict(X.one_hot.rows());
    Eigen::MatrixXd out(X.one_hot.rows(), static_cast<Eigen::Index>(fits_.size()));
    Eigen::MatrixXd Z(X.one_hot.rows(), cols_);
    for (Eigen::Index j = 0; j < cols_; ++j) {
      if (sd_(j) > 0.0)
        Z.col(j) = (X.one_hot.col(j).array() - mean_(j)) / sd_(j);
      else
        Z.col(j).setZero();
    }
    for (std::size_t k = 0; k < fits_.size(); ++k) {
      out.col(static_cast<Eigen::Index>(k)) = Z * fits_[k].w;
      out.col(static_cast<Eigen::Index>(k)).array() += fits_[k].b;
    }
    return out;
  }

  // Coefficients on the standardized feature scale.
  const PinballLinearFit& fit_for_level(std::size_t k) const { return fits_[k]; }

 private:
  SurrogateSpec spec_;
  Eigen::Index cols_ = 0;
  Eigen::VectorXd mean_, sd_;
  std::vector<PinballLinearFit> fits_;
};

}  // namespace cqopt
