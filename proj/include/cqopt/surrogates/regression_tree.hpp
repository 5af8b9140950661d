#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <stdexcept>
#include <vector>

#include "cqopt/core/rng.hpp"

namespace cqopt {

struct TreeOptions {
  int max_depth = 3;
  int min_leaf = 5;
  int mtry = 0;  // 0: consider every feature
};

// Axis-aligned CART with squared-error splits. Leaves keep their sample
// ranges so callers can re-aggregate leaf membership (residual quantiles,
// forest weights).
class RegressionTree {
 public:
  struct Node {
    int feature = -1;
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double value = 0.0;
    int start = 0;  // [start, end) into index_
    int end = 0;
  };

  // `samples` may contain repeated row indices (bootstrap multiplicity).
  void fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& targets,
           std::vector<int> samples, const TreeOptions& opts, Rng* rng) {
    if (samples.empty()) throw std::invalid_argument("tree fit: no samples");
    X_cols_ = X.cols();
    nodes_.clear();
    index_ = std::move(samples);
    build(X, targets, 0, static_cast<int>(index_.size()), 0, opts, rng);
  }

  int leaf_of(const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
    int node = 0;
    while (nodes_[static_cast<std::size_t>(node)].feature >= 0) {
      const Node& nd = nodes_[static_cast<std::size_t>(node)];
      node = x(nd.feature) <= nd.threshold ? nd.left : nd.right;
    }
    return node;
  }

  double predict(const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
    return nodes_[static_cast<std::size_t>(leaf_of(x))].value;
  }

  const std::vector<Node>& nodes() const { return nodes_; }
  std::vector<Node>& nodes() { return nodes_; }
  const std::vector<int>& sample_index() const { return index_; }
  Eigen::Index feature_count() const { return X_cols_; }

  template <typename Fn>
  void for_each_leaf(Fn&& fn) {
    for (auto& nd : nodes_)
      if (nd.feature < 0) fn(nd);
  }

 private:
  int build(const Eigen::MatrixXd& X, const Eigen::VectorXd& t, int start, int end,
            int depth, const TreeOptions& opts, Rng* rng) {
    const int node_id = static_cast<int>(nodes_.size());
    nodes_.emplace_back();
    nodes_[static_cast<std::size_t>(node_id)].start = start;
    nodes_[static_cast<std::size_t>(node_id)].end = end;

    const int n = end - start;
    double sum = 0.0;
    for (int i = start; i < end; ++i) sum += t(index_[static_cast<std::size_t>(i)]);
    nodes_[static_cast<std::size_t>(node_id)].value = sum / n;

    if (depth >= opts.max_depth || n < 2 * opts.min_leaf) return node_id;

    int best_feature = -1;
    double best_threshold = 0.0, best_gain = 1e-12;
    std::vector<int> features = candidate_features(opts, rng);
    std::vector<std::pair<double, double>> vals;  // (x, target)
    vals.reserve(static_cast<std::size_t>(n));
    for (int f : features) {
      vals.clear();
      for (int i = start; i < end; ++i) {
        int row = index_[static_cast<std::size_t>(i)];
        vals.emplace_back(X(row, f), t(row));
      }
      std::stable_sort(vals.begin(), vals.end(),
                       [](const auto& a, const auto& b) { return a.first < b.first; });
      double left_sum = 0.0;
      for (int i = 0; i < n - 1; ++i) {
        left_sum += vals[static_cast<std::size_t>(i)].second;
        const int n_left = i + 1, n_right = n - n_left;
        if (n_left < opts.min_leaf || n_right < opts.min_leaf) continue;
        double x_here = vals[static_cast<std::size_t>(i)].first;
        double x_next = vals[static_cast<std::size_t>(i + 1)].first;
        if (!(x_next > x_here)) continue;
        double right_sum = sum - left_sum;
        double gain = left_sum * left_sum / n_left +
                      right_sum * right_sum / n_right - sum * sum / n;
        if (gain > best_gain) {
          best_gain = gain;
          best_feature = f;
          best_threshold = 0.5 * (x_here + x_next);
        }
      }
    }
    if (best_feature < 0) return node_id;

    auto mid_it = std::stable_partition(
        index_.begin() + start, index_.begin() + end,
        [&](int row) { return X(row, best_feature) <= best_threshold; });
    int mid = static_cast<int>(mid_it - index_.begin());
    if (mid == start || mid == end) return node_id;  // numeric guard

    nodes_[static_cast<std::size_t>(node_id)].feature = best_feature;
    nodes_[static_cast<std::size_t>(node_id)].threshold = best_threshold;
    int left = build(X, t, start, mid, depth + 1, opts, rng);
    int right = build(X, t, mid, end, depth + 1, opts, rng);
    nodes_[static_cast<std::size_t>(node_id)].left = left;
    nodes_[static_cast<std::size_t>(node_id)].right = right;
    return node_id;
  }

  std::vector<int> candidate_features(const TreeOptions& opts, Rng* rng) const {
    std::vector<int> all(static_cast<std::size_t>(X_cols_));
    for (std::size_t j = 0; j < all.size(); ++j) all[j] = static_cast<int>(j);
    if (opts.mtry <= 0 || opts.mtry >= X_cols_ || rng == nullptr) return all;
    // partial Fisher-Yates: first mtry entries are a uniform subset
    for (int j = 0; j < opts.mtry; ++j) {
      std::size_t pick = static_cast<std::size_t>(j) +
                         rng->uniform_index(all.size() - static_cast<std::size_t>(j));
      std::swap(all[static_cast<std::size_t>(j)], all[pick]);
    }
    all.resize(static_cast<std::size_t>(opts.mtry));
    std::sort(all.begin(), all.end());
    return all;
  }

  std::vector<Node> nodes_;
  std::vector<int> index_;
  Eigen::Index X_cols_ = 0;
};

}  // namespace cqopt
