#pragma once

#include <Eigen/Dense>
#include <memory>
#include <vector>

#include "cqopt/conformal/nonconformity.hpp"
#include "cqopt/surrogates/factory.hpp"
#include "cqopt/surrogates/surrogate.hpp"

namespace cqopt {

// CV+ calibrator: K fold-complement models under a round-robin chronological
// fold assignment; every training point carries one nonconformity score per
// symmetric pair, computed by the model that never saw the point.
class CvPlusCalibrator {
 public:
  // Repaired fold predictions for one candidate batch: fold -> (n x M).
  struct FoldPredictions {
    std::vector<Eigen::MatrixXd> per_fold;
  };

  void fit(const FeatureSet& X, const Eigen::VectorXd& y,
           const QuantileLevels& levels, const SurrogateSpec& spec, int K,
           Rng& rng) {
    if (K < 2) throw std::invalid_argument("cv+ needs at least 2 folds");
    const Eigen::Index n = X.rows();
    if (n < K)
      throw std::invalid_argument("cv+ fold would be empty: fewer rows than folds");
    levels.validate();
    levels_ = levels;
    pairs_ = symmetric_pairs(levels);
    K_ = K;
    fold_of_.resize(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i)
      fold_of_[static_cast<std::size_t>(i)] = static_cast<int>(i % K);

    models_.clear();
    models_.reserve(static_cast<std::size_t>(K));
    Eigen::MatrixXd holdout_pred(n, static_cast<Eigen::Index>(levels.size()));
    for (int k = 0; k < K; ++k) {
      std::vector<Eigen::Index> train_idx, test_idx;
      for (Eigen::Index i = 0; i < n; ++i)
        (fold_of_[static_cast<std::size_t>(i)] == k ? test_idx : train_idx)
            .push_back(i);
      FeatureSet Xtr = X.subset(train_idx);
      Eigen::VectorXd ytr(static_cast<Eigen::Index>(train_idx.size()));
      for (std::size_t i = 0; i < train_idx.size(); ++i)
        ytr(static_cast<Eigen::Index>(i)) = y(train_idx[i]);
      auto model = make_surrogate(spec);
      Rng fold_rng = rng.fork(0x6376u, static_cast<std::uint64_t>(k));
      model->fit(Xtr, ytr, levels, fold_rng);
      Eigen::MatrixXd pred = predict_quantiles(*model, X.subset(test_idx));
      for (std::size_t i = 0; i < test_idx.size(); ++i)
        holdout_pred.row(test_idx[i]) = pred.row(static_cast<Eigen::Index>(i));
      models_.push_back(std::move(model));
    }

    scores_.assign(pairs_.size(), std::vector<double>(static_cast<std::size_t>(n)));
    for (std::size_t p = 0; p < pairs_.size(); ++p) {
      const auto& pair = pairs_[p];
      for (Eigen::Index i = 0; i < n; ++i)
        scores_[p][static_cast<std::size_t>(i)] =
            cqr_score(y(i), holdout_pred(i, static_cast<Eigen::Index>(pair.lo_index)),
                      holdout_pred(i, static_cast<Eigen::Index>(pair.hi_index)));
    }
  }

  FoldPredictions predict_candidates(const FeatureSet& X) const {
    FoldPredictions out;
    out.per_fold.reserve(models_.size());
    for (const auto& model : models_)
      out.per_fold.push_back(predict_quantiles(*model, X));
    return out;
  }

  // Lower endpoint is the floor(alpha*(n+1))-th smallest of the
  // score-lowered fold predictions, upper the ceil((1-alpha)*(n+1))-th
  // smallest of the score-raised ones; ranks clamp to [1, n].
  CalibratedInterval interval(const FoldPredictions& preds, Eigen::Index candidate,
                              std::size_t pair_idx, double alpha_eff) const {
    const auto& pair = pairs_[pair_idx];
    const std::size_t n = scores_[pair_idx].size();
    std::vector<double> lo_set(n), hi_set(n);
    for (std::size_t i = 0; i < n; ++i) {
      const Eigen::MatrixXd& fp =
          preds.per_fold[static_cast<std::size_t>(fold_of_[i])];
      const double d = scores_[pair_idx][i];
      lo_set[i] = fp(candidate, static_cast<Eigen::Index>(pair.lo_index)) - d;
      hi_set[i] = fp(candidate, static_cast<Eigen::Index>(pair.hi_index)) + d;
    }
    auto clamp_rank = [n](double raw) {
      if (raw < 1.0) return std::size_t{1};
      std::size_t r = static_cast<std::size_t>(raw);
      return r > n ? n : r;
    };
    const std::size_t k_lo =
        clamp_rank(std::floor(alpha_eff * static_cast<double>(n + 1)));
    const std::size_t k_hi =
        clamp_rank(std::ceil((1.0 - alpha_eff) * static_cast<double>(n + 1)));
    std::nth_element(lo_set.begin(), lo_set.begin() + (k_lo - 1), lo_set.end());
    std::nth_element(hi_set.begin(), hi_set.begin() + (k_hi - 1), hi_set.end());

    CalibratedInterval out;
    out.nominal_alpha = pair.alpha_nominal();
    out.effective_alpha = alpha_eff;
    out.lo = lo_set[k_lo - 1];
    out.hi = hi_set[k_hi - 1];
    if (out.lo > out.hi) {
      const double mid = 0.5 * (out.lo + out.hi);
      out.lo = out.hi = mid;
      out.collapsed = true;
    }
    return out;
  }

  const std::vector<QuantilePair>& pairs() const { return pairs_; }
  const std::vector<double>& pair_scores(std::size_t pair_idx) const {
    return scores_[pair_idx];
  }
  const std::vector<int>& fold_assignment() const { return fold_of_; }
  std::size_t n_rows() const { return fold_of_.size(); }
  const QuantileLevels& levels() const { return levels_; }

 private:
  QuantileLevels levels_;
  std::vector<QuantilePair> pairs_;
  int K_ = 0;
  std::vector<int> fold_of_;
  std::vector<std::unique_ptr<QuantileSurrogate>> models_;
  std::vector<std::vector<double>> scores_;  // per pair, per training point
};

}  // namespace cqopt
