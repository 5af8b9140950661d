#pragma once

#include <Eigen/Dense>
#include <vector>

#include "cqopt/surrogates/regression_tree.hpp"
#include "cqopt/surrogates/surrogate.hpp"

namespace cqopt {

// Boosted quantile regression. Each stage fits a squared-error tree to the
// current residuals, then replaces every leaf value with the
// learning-rate-scaled within-leaf residual quantile; shrinking toward a
// leaf's own residual quantile cannot increase the convex pinball loss, so
// the recorded training-loss path is non-increasing. Splitting on residuals
// rather than pinball sign gradients keeps the stage informative even where
// the sign pattern is constant (e.g. an upper quantile initialized at the
// sample maximum of a region).
class QuantileGbm : public QuantileSurrogate {
 public:
  explicit QuantileGbm(const SurrogateSpec& spec) : spec_(spec) {}

  void fit(const FeatureSet& X, const Eigen::VectorXd& y,
           const QuantileLevels& levels, Rng& /*rng*/) override {
    levels.validate();
    levels_ = levels;
    fitted_ = true;
    cols_ = X.ordinal.cols();
    trees_.assign(levels.size(), {});
    f0_.assign(levels.size(), 0.0);
    loss_paths_.assign(levels.size(), {});
    if (maybe_constant_fallback(y, levels)) return;

    const Eigen::Index n = X.ordinal.rows();
    std::vector<double> ys(y.data(), y.data() + y.size());
    TreeOptions opts{spec_.gbm_max_depth, spec_.gbm_min_leaf, 0};
    std::vector<int> all_rows(static_cast<std::size_t>(n));
    for (std::size_t i = 0; i < all_rows.size(); ++i) all_rows[i] = static_cast<int>(i);

    for (std::size_t k = 0; k < levels.size(); ++k) {
      const double tau = levels[k];
      f0_[k] = empirical_quantile(ys, tau);
      Eigen::VectorXd f = Eigen::VectorXd::Constant(n, f0_[k]);
      loss_paths_[k].push_back(stage_loss(y, f, tau));

      for (int stage = 0; stage < spec_.gbm_stages; ++stage) {
        Eigen::VectorXd resid = y - f;

        RegressionTree tree;
        tree.fit(X.ordinal, resid, all_rows, opts, nullptr);

        // leaf update: learning-rate-scaled residual quantile
        const auto& index = tree.sample_index();
        std::vector<double> leaf_resid;
        tree.for_each_leaf([&](RegressionTree::Node& leaf) {
          leaf_resid.clear();
          for (int i = leaf.start; i < leaf.end; ++i) {
            int row = index[static_cast<std::size_t>(i)];
            leaf_resid.push_back(y(row) - f(row));
          }
          leaf.value = spec_.gbm_learning_rate * empirical_quantile(leaf_resid, tau);
        });

        for (Eigen::Index i = 0; i < n; ++i)
          f(i) += tree.predict(X.ordinal.row(i));
        loss_paths_[k].push_back(stage_loss(y, f, tau));
        trees_[k].push_back(std::move(tree));
      }
    }
  }

  Eigen::MatrixXd predict_raw(const FeatureSet& X) const override {
    require_fitted();
    if (X.ordinal.cols() != cols_)
      throw std::invalid_argument("boosting model: feature dimension mismatch");
    if (constant_) return constant_predict(X.ordinal.rows());
    Eigen::MatrixXd out(X.ordinal.rows(), static_cast<Eigen::Index>(levels_.size()));
    for (Eigen::Index r = 0; r < X.ordinal.rows(); ++r) {
      for (std::size_t k = 0; k < levels_.size(); ++k) {
        double v = f0_[k];
        for (const auto& tree : trees_[k]) v += tree.predict(X.ordinal.row(r));
        out(r, static_cast<Eigen::Index>(k)) = v;
      }
    }
    return out;
  }

  // Mean training pinball after the initial constant and after each stage.
  const std::vector<double>& loss_path(std::size_t level) const {
    return loss_paths_[level];
  }

 private:
  static double stage_loss(const Eigen::VectorXd& y, const Eigen::VectorXd& f,
                           double tau) {
    double total = 0.0;
    for (Eigen::Index i = 0; i < y.size(); ++i)
      total += pinball_loss(y(i) - f(i), tau);
    return total / static_cast<double>(y.size());
  }

  SurrogateSpec spec_;
  Eigen::Index cols_ = 0;
  std::vector<std::vector<RegressionTree>> trees_;
  std::vector<double> f0_;
  std::vector<std::vector<double>> loss_paths_;
};

}  // namespace cqopt
