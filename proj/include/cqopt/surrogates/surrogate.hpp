#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <memory>
#include <stdexcept>
#include <vector>

#include "cqopt/core/rng.hpp"
#include "cqopt/surrogates/features.hpp"
#include "cqopt/surrogates/pinball.hpp"
#include "cqopt/surrogates/quantile_levels.hpp"

namespace cqopt {

enum class SurrogateKind { ql, qgbm, qrf, qgp, qe };

struct SurrogateSpec {
  SurrogateKind kind = SurrogateKind::qgbm;

  // gradient boosting
  int gbm_stages = 50;
  int gbm_max_depth = 3;
  int gbm_min_leaf = 5;
  double gbm_learning_rate = 0.1;

  // random forest
  int rf_trees = 100;
  int rf_min_leaf = 5;
  int rf_max_depth = 32;
  int rf_mtry = 0;  // 0: ceil(d/3)
  bool rf_bootstrap = true;

  // linear quantile model
  double ql_lambda = 1e-6;
  int ql_max_iters = 200;

  // gaussian process
  int gp_starts = 3;
  int gp_opt_iters = 120;

  // stacked ensemble
  int qe_folds = 5;
  std::vector<SurrogateKind> qe_members = {SurrogateKind::qgbm, SurrogateKind::ql,
                                           SurrogateKind::qgp};
  double qe_meta_lambda = 1e-8;
};

// Shared interface: fit on a feature batch against scalar outcomes, then
// emit the raw (possibly crossing) quantile matrix for candidate batches.
class QuantileSurrogate {
 public:
  virtual ~QuantileSurrogate() = default;

  virtual void fit(const FeatureSet& X, const Eigen::VectorXd& y,
                   const QuantileLevels& levels, Rng& rng) = 0;

  // n_candidates x n_levels, columns aligned with levels(); no repair.
  virtual Eigen::MatrixXd predict_raw(const FeatureSet& X) const = 0;

  // Point prediction used by expectation-based acquisition; the default is
  // the mean of the repaired quantile grid.
  virtual Eigen::VectorXd expectation(const FeatureSet& X) const {
    Eigen::MatrixXd grid = predict_raw(X);
    Eigen::VectorXd out(grid.rows());
    std::vector<double> row(static_cast<std::size_t>(grid.cols()));
    for (Eigen::Index r = 0; r < grid.rows(); ++r) {
      for (Eigen::Index c = 0; c < grid.cols(); ++c)
        row[static_cast<std::size_t>(c)] = grid(r, c);
      std::sort(row.begin(), row.end());
      double s = 0.0;
      for (double v : row) s += v;
      out(r) = s / static_cast<double>(row.size());
    }
    return out;
  }

  const QuantileLevels& levels() const { return levels_; }
  bool fitted() const { return fitted_; }

 protected:
  // Degenerate-data guard: below 5 usable rows every architecture falls back
  // to the constant model at the empirical level quantiles.
  bool maybe_constant_fallback(const Eigen::VectorXd& y, const QuantileLevels& levels) {
    if (y.size() >= 5) {
      constant_ = false;
      return false;
    }
    if (y.size() == 0)
      throw std::invalid_argument("surrogate fit: no usable observations");
    std::vector<double> ys(y.data(), y.data() + y.size());
    constant_values_.clear();
    for (double tau : levels.taus)
      constant_values_.push_back(empirical_quantile(ys, tau));
    constant_ = true;
    return true;
  }

  Eigen::MatrixXd constant_predict(Eigen::Index n) const {
    Eigen::MatrixXd out(n, static_cast<Eigen::Index>(constant_values_.size()));
    for (Eigen::Index r = 0; r < n; ++r)
      for (Eigen::Index c = 0; c < out.cols(); ++c)
        out(r, c) = constant_values_[static_cast<std::size_t>(c)];
    return out;
  }

  void require_fitted() const {
    if (!fitted_) throw std::logic_error("surrogate used before fit");
  }

  QuantileLevels levels_;
  bool fitted_ = false;
  bool constant_ = false;
  std::vector<double> constant_values_;
};

// Repaired quantile predictions: each row sorted ascending so the grid is
// monotone in the level index.
inline Eigen::MatrixXd predict_quantiles(const QuantileSurrogate& model,
                                         const FeatureSet& X) {
  Eigen::MatrixXd grid = model.predict_raw(X);
  std::vector<double> row(static_cast<std::size_t>(grid.cols()));
  for (Eigen::Index r = 0; r < grid.rows(); ++r) {
    for (Eigen::Index c = 0; c < grid.cols(); ++c)
      row[static_cast<std::size_t>(c)] = grid(r, c);
    std::sort(row.begin(), row.end());
    for (Eigen::Index c = 0; c < grid.cols(); ++c)
      grid(r, c) = row[static_cast<std::size_t>(c)];
  }
  return grid;
}

inline Eigen::VectorXd predict_expectation(const QuantileSurrogate& model,
                                           const FeatureSet& X) {
  return model.expectation(X);
}

}  // namespace cqopt
