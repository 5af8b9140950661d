#pragma once

#include <Eigen/Dense>
#include <iostream>
#include <memory>
#include <vector>

#include "cqopt/surrogates/quantile_lasso.hpp"
#include "cqopt/surrogates/surrogate.hpp"

namespace cqopt {

std::unique_ptr<QuantileSurrogate> make_surrogate(const SurrogateSpec& spec);

// Per-level stacking weights learned on out-of-fold member predictions.
struct StackingFit {
  Eigen::VectorXd weights;  // nonnegative, one per surviving member
  double intercept = 0.0;
  double meta_pinball = 0.0;            // meta-model out-of-fold pinball
  std::vector<double> member_pinball;   // per-member out-of-fold pinball
};

// Stacked ensemble: members produce out-of-fold quantile predictions under a
// round-robin chronological fold split; a nonnegative-weight L1 pinball
// meta-learner combines them per level; members are refit on all data.
class StackedEnsemble : public QuantileSurrogate {
 public:
  explicit StackedEnsemble(const SurrogateSpec& spec) : spec_(spec) {}

  void fit(const FeatureSet& X, const Eigen::VectorXd& y,
           const QuantileLevels& levels, Rng& rng) override {
    levels.validate();
    levels_ = levels;
    fitted_ = true;
    cols_one_hot_ = X.one_hot.cols();
    cols_ordinal_ = X.ordinal.cols();
    members_.clear();
    stacks_.clear();
    member_kinds_.clear();
    if (maybe_constant_fallback(y, levels)) return;

    const Eigen::Index n = X.rows();
    const int K = std::min<int>(spec_.qe_folds, static_cast<int>(n));
    std::vector<int> fold(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i)
      fold[static_cast<std::size_t>(i)] = static_cast<int>(i % K);

    // out-of-fold member predictions, one matrix (n x members) per level
    std::vector<Eigen::MatrixXd> oof(levels.size());
    std::vector<SurrogateKind> survivors;
    std::vector<Eigen::MatrixXd> oof_cols;  // per member: n x levels
    for (std::size_t m = 0; m < spec_.qe_members.size(); ++m) {
      SurrogateSpec member_spec = spec_;
      member_spec.kind = spec_.qe_members[m];
      Eigen::MatrixXd preds(n, static_cast<Eigen::Index>(levels.size()));
      bool ok = true;
      for (int k = 0; k < K && ok; ++k) {
        std::vector<Eigen::Index> train_idx, test_idx;
        for (Eigen::Index i = 0; i < n; ++i)
          (fold[static_cast<std::size_t>(i)] == k ? test_idx : train_idx).push_back(i);
        if (test_idx.empty()) continue;
        try {
          FeatureSet Xtr = X.subset(train_idx);
          Eigen::VectorXd ytr(static_cast<Eigen::Index>(train_idx.size()));
          for (std::size_t i = 0; i < train_idx.size(); ++i)
            ytr(static_cast<Eigen::Index>(i)) = y(train_idx[i]);
          auto model = make_surrogate(member_spec);
          Rng fold_rng = rng.fork(0x5145u, m * 131 + static_cast<std::uint64_t>(k));
          model->fit(Xtr, ytr, levels, fold_rng);
          Eigen::MatrixXd fold_pred = predict_quantiles(*model, X.subset(test_idx));
          for (std::size_t i = 0; i < test_idx.size(); ++i)
            preds.row(test_idx[i]) = fold_pred.row(static_cast<Eigen::Index>(i));
        } catch (const std::exception& e) {
          std::cerr << "stacking: dropping member " << m << " (" << e.what() << ")\n";
          ok = false;
        }
      }
      if (ok) {
        survivors.push_back(spec_.qe_members[m]);
        oof_cols.push_back(std::move(preds));
      }
    }
    if (survivors.empty())
      throw std::runtime_error("stacking: every member failed to fit");

    for (std::size_t lv = 0; lv < levels.size(); ++lv) {
      Eigen::MatrixXd Z(n, static_cast<Eigen::Index>(survivors.size()));
      for (std::size_t m = 0; m < survivors.size(); ++m)
        Z.col(static_cast<Eigen::Index>(m)) =
            oof_cols[m].col(static_cast<Eigen::Index>(lv));
      oof[lv] = std::move(Z);
    }

    // per-level nonnegative pinball meta-learner; warm starts at every basis
    // vector keep the stacked fit at least as good as the best single member
    for (std::size_t lv = 0; lv < levels.size(); ++lv) {
      const double tau = levels[lv];
      const Eigen::MatrixXd& Z = oof[lv];
      std::vector<PinballLinearFit> starts;
      std::vector<double> member_pb;
      for (Eigen::Index m = 0; m < Z.cols(); ++m) {
        PinballLinearFit basis;
        basis.w = Eigen::VectorXd::Zero(Z.cols());
        basis.w(m) = 1.0;
        Eigen::VectorXd resid = y - Z.col(m);
        std::vector<double> rv(resid.data(), resid.data() + resid.size());
        basis.b = empirical_quantile(rv, tau);
        starts.push_back(basis);
        member_pb.push_back(mean_pinball_loss(y, Z.col(m), tau));
        // the bare member (no intercept) is a start as well
        PinballLinearFit bare = basis;
        bare.b = 0.0;
        starts.push_back(bare);
      }
      PinballLinearFit fit = detail::fit_pinball_linear(
          Z, y, tau, spec_.qe_meta_lambda, /*nonneg=*/true, spec_.ql_max_iters,
          starts);
      StackingFit sf;
      sf.weights = fit.w;
      sf.intercept = fit.b;
      Eigen::VectorXd meta_pred = Z * fit.w;
      meta_pred.array() += fit.b;
      sf.meta_pinball = mean_pinball_loss(y, meta_pred, tau);
      sf.member_pinball = std::move(member_pb);
      stacks_.push_back(std::move(sf));
    }

    // final members see all data
    for (std::size_t m = 0; m < survivors.size(); ++m) {
      SurrogateSpec member_spec = spec_;
      member_spec.kind = survivors[m];
      auto model = make_surrogate(member_spec);
      Rng member_rng = rng.fork(0x5146u, m);
      model->fit(X, y, levels, member_rng);
      members_.push_back(std::move(model));
    }
    member_kinds_ = std::move(survivors);
  }

  Eigen::MatrixXd predict_raw(const FeatureSet& X) const override {
    require_fitted();
    if (constant_) return constant_predict(X.rows());
    if (X.one_hot.cols() != cols_one_hot_ || X.ordinal.cols() != cols_ordinal_)
      throw std::invalid_argument("stacked ensemble: feature dimension mismatch");
    std::vector<Eigen::MatrixXd> member_pred;
    member_pred.reserve(members_.size());
    for (const auto& model : members_)
      member_pred.push_back(predict_quantiles(*model, X));
    Eigen::MatrixXd out(X.rows(), static_cast<Eigen::Index>(levels_.size()));
    for (std::size_t lv = 0; lv < levels_.size(); ++lv) {
      Eigen::VectorXd combined =
          Eigen::VectorXd::Constant(X.rows(), stacks_[lv].intercept);
      for (std::size_t m = 0; m < members_.size(); ++m)
        combined += stacks_[lv].weights(static_cast<Eigen::Index>(m)) *
                    member_pred[m].col(static_cast<Eigen::Index>(lv));
      out.col(static_cast<Eigen::Index>(lv)) = combined;
    }
    return out;
  }

  const std::vector<StackingFit>& stacking_fits() const { return stacks_; }
  const std::vector<SurrogateKind>& member_kinds() const { return member_kinds_; }

 private:
  SurrogateSpec spec_;
  Eigen::Index cols_one_hot_ = 0, cols_ordinal_ = 0;
  std::vector<std::unique_ptr<QuantileSurrogate>> members_;
  std::vector<SurrogateKind> member_kinds_;
  std::vector<StackingFit> stacks_;
};

}  // namespace cqopt
