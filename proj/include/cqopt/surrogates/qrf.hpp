#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <vector>

#include "cqopt/surrogates/regression_tree.hpp"
#include "cqopt/surrogates/surrogate.hpp"

namespace cqopt {

// Quantile regression forest: quantiles of the forest-weighted empirical
// distribution of training outcomes, where a training point's weight is its
// leaf co-occupancy frequency with the query point.
class QuantileForest : public QuantileSurrogate {
 public:
  explicit QuantileForest(const SurrogateSpec& spec) : spec_(spec) {}

  void fit(const FeatureSet& X, const Eigen::VectorXd& y,
           const QuantileLevels& levels, Rng& rng) override {
    levels.validate();
    levels_ = levels;
    fitted_ = true;
    cols_ = X.ordinal.cols();
    if (maybe_constant_fallback(y, levels)) return;

    const Eigen::Index n = X.ordinal.rows();
    y_ = y;
    int mtry = spec_.rf_mtry > 0
                   ? spec_.rf_mtry
                   : static_cast<int>(std::ceil(static_cast<double>(cols_) / 3.0));
    TreeOptions opts{spec_.rf_max_depth, spec_.rf_min_leaf, mtry};

    trees_.clear();
    trees_.reserve(static_cast<std::size_t>(spec_.rf_trees));
    for (int t = 0; t < spec_.rf_trees; ++t) {
      Rng tree_rng = rng.fork(0x5157u, static_cast<std::uint64_t>(t));
      std::vector<int> samples(static_cast<std::size_t>(n));
      if (spec_.rf_bootstrap) {
        for (auto& s : samples)
          s = static_cast<int>(tree_rng.uniform_index(static_cast<std::size_t>(n)));
      } else {
        for (std::size_t i = 0; i < samples.size(); ++i) samples[i] = static_cast<int>(i);
      }
      RegressionTree tree;
      tree.fit(X.ordinal, y, std::move(samples), opts, &tree_rng);
      trees_.push_back(std::move(tree));
    }
  }

  // Per-query forest weights over training points (sums to 1).
  std::vector<double> query_weights(const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
    require_fitted();
    std::vector<double> w(static_cast<std::size_t>(y_.size()), 0.0);
    const double per_tree = 1.0 / static_cast<double>(trees_.size());
    for (const auto& tree : trees_) {
      int leaf = tree.leaf_of(x);
      const auto& nd = tree.nodes()[static_cast<std::size_t>(leaf)];
      const auto& index = tree.sample_index();
      const double share = per_tree / static_cast<double>(nd.end - nd.start);
      for (int i = nd.start; i < nd.end; ++i)
        w[static_cast<std::size_t>(index[static_cast<std::size_t>(i)])] += share;
    }
    return w;
  }

  Eigen::MatrixXd predict_raw(const FeatureSet& X) const override {
    require_fitted();
    if (X.ordinal.cols() != cols_)
      throw std::invalid_argument("forest model: feature dimension mismatch");
    if (constant_) return constant_predict(X.ordinal.rows());
    Eigen::MatrixXd out(X.ordinal.rows(), static_cast<Eigen::Index>(levels_.size()));
    std::vector<double> yvals(y_.data(), y_.data() + y_.size());
    for (Eigen::Index r = 0; r < X.ordinal.rows(); ++r) {
      std::vector<double> w = query_weights(X.ordinal.row(r));
      for (std::size_t k = 0; k < levels_.size(); ++k)
        out(r, static_cast<Eigen::Index>(k)) = weighted_quantile(yvals, w, levels_[k]);
    }
    return out;
  }

 private:
  SurrogateSpec spec_;
  Eigen::Index cols_ = 0;
  Eigen::VectorXd y_;
  std::vector<RegressionTree> trees_;
};

}  // namespace cqopt
