#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <string>
#include <unordered_set>
#include <vector>

#include "cqopt/adaptive/aci.hpp"
#include "cqopt/adaptive/dtaci.hpp"
#include "cqopt/conformal/cvplus.hpp"
#include "cqopt/conformal/nonconformity.hpp"
#include "cqopt/core/sampling.hpp"
#include "cqopt/core/study_config.hpp"
#include "cqopt/core/trial.hpp"
#include "cqopt/optimizer/objective.hpp"
#include "cqopt/optimizer/study.hpp"
#include "cqopt/surrogates/factory.hpp"

namespace cqopt {

enum class CalibrationVariant {
  raw,           // surrogate quantiles, no calibration
  scp,           // split-conformal, fixed alpha
  scp_aci,       // split-conformal + per-level ACI
  scp_dtaci,     // split-conformal + per-level DtACI
  cvplus,        // cross-validation+, fixed alpha
  cvplus_aci,    // cross-validation+ + per-level ACI
  cvplus_dtaci,  // cross-validation+ + per-level DtACI
};

inline std::vector<CalibrationVariant> default_calibration_variants() {
  return {CalibrationVariant::raw,      CalibrationVariant::scp,
          CalibrationVariant::scp_aci,  CalibrationVariant::scp_dtaci,
          CalibrationVariant::cvplus,   CalibrationVariant::cvplus_aci,
          CalibrationVariant::cvplus_dtaci};
}

inline std::string to_string(CalibrationVariant v) {
  switch (v) {
    case CalibrationVariant::raw: return "raw";
    case CalibrationVariant::scp: return "scp";
    case CalibrationVariant::scp_aci: return "scp_aci";
    case CalibrationVariant::scp_dtaci: return "scp_dtaci";
    case CalibrationVariant::cvplus: return "cvplus";
    case CalibrationVariant::cvplus_aci: return "cvplus_aci";
    case CalibrationVariant::cvplus_dtaci: return "cvplus_dtaci";
  }
  throw std::invalid_argument("unknown calibration variant");
}

struct CalibrationRecord {
  int iteration = -1;
  double confidence = 0.0;
  double lo = 0.0;
  double hi = 0.0;
  bool breach = false;
  bool collapsed = false;
};

struct CalibrationSeries {
  CalibrationVariant variant = CalibrationVariant::raw;
  std::vector<CalibrationRecord> records;
};

struct CalibrationRunResult {
  std::vector<Trial> trials;
  std::vector<CalibrationSeries> series;
};

namespace detail {

constexpr std::uint64_t kCalSplitTag = 0x6373u;
constexpr std::uint64_t kCalCvTag = 0x6363u;
constexpr std::uint64_t kCalFullTag = 0x6366u;
constexpr std::uint64_t kCalCtrlTag = 0x6372u;

inline bool variant_uses_scp(CalibrationVariant v) {
  return v == CalibrationVariant::scp || v == CalibrationVariant::scp_aci ||
         v == CalibrationVariant::scp_dtaci;
}
inline bool variant_uses_cvplus(CalibrationVariant v) {
  return v == CalibrationVariant::cvplus ||
         v == CalibrationVariant::cvplus_aci ||
         v == CalibrationVariant::cvplus_dtaci;
}
inline AlphaMode variant_alpha_mode(CalibrationVariant v) {
  if (v == CalibrationVariant::scp_aci || v == CalibrationVariant::cvplus_aci)
    return AlphaMode::aci;
  if (v == CalibrationVariant::scp_dtaci ||
      v == CalibrationVariant::cvplus_dtaci)
    return AlphaMode::dtaci;
  return AlphaMode::fixed;
}

}  // namespace detail

// Runs one greedy trajectory (expectation argmax, no exploration) and scores
// every interval variant against the same out-of-sample observations. The
// trajectory is identical across variants because selection never consults
// the calibration state.
inline CalibrationRunResult greedy_calibration_run(
    Objective& objective, const StudyConfig& cfg,
    const SurrogateSpec& surrogate_spec,
    const std::vector<CalibrationVariant>& variants =
        default_calibration_variants()) {
  cfg.validate();
  if (variants.empty())
    throw std::invalid_argument("calibration run needs at least one variant");
  const ParamSpace& space = objective.space();

  QuantileLevels levels = levels_for_confidences(cfg.monitored_confidences);
  std::vector<QuantilePair> pairs = symmetric_pairs(levels);
  const std::size_t n_pairs = pairs.size();

  Rng rng(cfg.seed);
  CalibrationRunResult result;
  result.series.resize(variants.size());
  for (std::size_t v = 0; v < variants.size(); ++v)
    result.series[v].variant = variants[v];

  // per variant x pair alpha controllers (fixed variants keep the nominal)
  std::vector<std::vector<AciState>> aci(variants.size());
  std::vector<std::vector<DtaciState>> dtaci(variants.size());
  for (std::size_t v = 0; v < variants.size(); ++v) {
    const AlphaMode mode = detail::variant_alpha_mode(variants[v]);
    for (std::size_t p = 0; p < n_pairs; ++p) {
      const double nominal = pairs[p].alpha_nominal();
      if (mode == AlphaMode::aci)
        aci[v].push_back(make_aci(nominal, cfg.aci_gamma));
      else if (mode == AlphaMode::dtaci)
        dtaci[v].push_back(make_dtaci(nominal));
    }
  }

  std::vector<Trial> history;
  std::vector<Configuration> evaluated;
  std::unordered_set<Configuration, ConfigurationHash> evaluated_set;

  auto draw_candidates = [&](std::size_t n, Rng pool_rng) {
    if (const auto* all = objective.finite_candidates()) {
      std::vector<Configuration> fresh;
      for (const auto& c : *all)
        if (!evaluated_set.count(c)) fresh.push_back(c);
      pool_rng.shuffle(fresh);
      if (fresh.size() > n) fresh.resize(n);
      return fresh;
    }
    return sample_candidates(space, n, pool_rng, evaluated);
  };

  for (int t = 0; t < cfg.budget; ++t) {
    Configuration chosen;
    bool scored = false;

    Eigen::RowVectorXd raw_row;    // full-data model quantiles at the choice
    Eigen::RowVectorXd split_row;  // split-model quantiles at the choice
    std::vector<std::vector<double>> scp_scores_by_pair;
    CvPlusCalibrator cvplus;
    CvPlusCalibrator::FoldPredictions chosen_fold_preds;
    bool have_scp = false, have_cvplus = false;

    if (t < cfg.n_warm_starts) {
      auto pool = draw_candidates(
          1, rng.fork(detail::kWarmTag, static_cast<std::uint64_t>(t)));
      if (pool.empty()) break;
      chosen = pool.front();
    } else {
      auto candidates = draw_candidates(
          static_cast<std::size_t>(cfg.n_candidates),
          rng.fork(detail::kCandTag, static_cast<std::uint64_t>(t)));
      if (candidates.empty()) break;

      std::vector<Configuration> usable_configs;
      std::vector<double> usable_y;
      for (const auto& tr : history)
        if (tr.usable()) {
          usable_configs.push_back(tr.config);
          usable_y.push_back(tr.performance);
        }
      if (usable_y.size() < 6) {
        Rng pick = rng.fork(detail::kCalFullTag, static_cast<std::uint64_t>(t));
        chosen = candidates[pick.uniform_index(candidates.size())];
      } else {
        FeatureSet hist_fs = build_features(usable_configs, space);
        FeatureSet cand_fs = build_features(candidates, space);
        Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(
            usable_y.data(), static_cast<Eigen::Index>(usable_y.size()));

        Rng full_rng =
            rng.fork(detail::kCalFullTag, static_cast<std::uint64_t>(t));
        auto full_model = make_surrogate(surrogate_spec);
        full_model->fit(hist_fs, y, levels, full_rng);
        Eigen::VectorXd mu = full_model->expectation(cand_fs);
        Eigen::Index best_idx = 0;
        mu.maxCoeff(&best_idx);
        chosen = candidates[static_cast<std::size_t>(best_idx)];

        const bool record_now =
            t >= cfg.min_observations &&
            static_cast<int>(history.size()) >= cfg.min_observations;
        if (record_now) {
          scored = true;
          FeatureSet chosen_fs = build_features({chosen}, space);
          raw_row = predict_quantiles(*full_model, chosen_fs).row(0);

          bool need_scp = false, need_cvplus = false;
          for (auto v : variants) {
            need_scp = need_scp || detail::variant_uses_scp(v);
            need_cvplus = need_cvplus || detail::variant_uses_cvplus(v);
          }

          if (need_scp) {
            const Eigen::Index n = y.size();
            const Eigen::Index n_cal = std::max<Eigen::Index>(1, n / 3);
            const Eigen::Index n_train = n - n_cal;
            std::vector<Eigen::Index> train_idx, cal_idx;
            for (Eigen::Index i = 0; i < n_train; ++i) train_idx.push_back(i);
            for (Eigen::Index i = n_train; i < n; ++i) cal_idx.push_back(i);
            Rng split_rng =
                rng.fork(detail::kCalSplitTag, static_cast<std::uint64_t>(t));
            auto split_model = make_surrogate(surrogate_spec);
            Eigen::VectorXd ytr = y.head(n_train);
            split_model->fit(hist_fs.subset(train_idx), ytr, levels, split_rng);
            Eigen::MatrixXd cal_pred =
                predict_quantiles(*split_model, hist_fs.subset(cal_idx));
            split_row = predict_quantiles(*split_model, chosen_fs).row(0);
            scp_scores_by_pair.assign(n_pairs, {});
            for (std::size_t p = 0; p < n_pairs; ++p) {
              std::vector<double> sc(static_cast<std::size_t>(n_cal));
              for (Eigen::Index i = 0; i < n_cal; ++i)
                sc[static_cast<std::size_t>(i)] = cqr_score(
                    y(n_train + i),
                    cal_pred(i, static_cast<Eigen::Index>(pairs[p].lo_index)),
                    cal_pred(i, static_cast<Eigen::Index>(pairs[p].hi_index)));
              scp_scores_by_pair[p] = std::move(sc);
            }
            have_scp = true;
          }
          if (need_cvplus) {
            Rng cv_rng =
                rng.fork(detail::kCalCvTag, static_cast<std::uint64_t>(t));
            cvplus.fit(hist_fs, y, levels, surrogate_spec, cfg.cv_folds,
                       cv_rng);
            chosen_fold_preds = cvplus.predict_candidates(chosen_fs);
            have_cvplus = true;
          }
        }
      }
    }

    Trial trial;
    trial.config = chosen;
    trial.iteration = t;
    try {
      auto [perf, rt] = objective.evaluate(chosen);
      if (!std::isfinite(perf))
        throw EvaluationFailure("objective returned non-finite performance");
      trial.performance = perf;
      trial.runtime_seconds = rt;
    } catch (const std::exception&) {
      trial.failed = true;
    }

    if (scored && trial.usable()) {
      const double y_new = trial.performance;
      for (std::size_t v = 0; v < variants.size(); ++v) {
        const CalibrationVariant variant = variants[v];
        const AlphaMode mode = detail::variant_alpha_mode(variant);
        for (std::size_t p = 0; p < n_pairs; ++p) {
          std::function<Interval(double)> family;
          bool conformal = true;
          if (variant == CalibrationVariant::raw) {
            conformal = false;
            const double lo =
                raw_row(static_cast<Eigen::Index>(pairs[p].lo_index));
            const double hi =
                raw_row(static_cast<Eigen::Index>(pairs[p].hi_index));
            family = [lo, hi](double) { return Interval{lo, hi}; };
          } else if (detail::variant_uses_scp(variant)) {
            if (!have_scp) continue;
            const double q_lo =
                split_row(static_cast<Eigen::Index>(pairs[p].lo_index));
            const double q_hi =
                split_row(static_cast<Eigen::Index>(pairs[p].hi_index));
            const auto& sc = scp_scores_by_pair[p];
            family = [q_lo, q_hi, &sc](double a) {
              const double adj = conformal_adjustment(sc, a);
              double lo = q_lo - adj, hi = q_hi + adj;
              if (lo > hi) lo = hi = 0.5 * (lo + hi);
              return Interval{lo, hi};
            };
          } else {
            if (!have_cvplus) continue;
            const CvPlusCalibrator* cal = &cvplus;
            const auto* preds = &chosen_fold_preds;
            family = [cal, preds, p](double a) {
              return cal->interval(*preds, 0, p, a).interval();
            };
          }

          double alpha_eff = clamp_alpha(pairs[p].alpha_nominal());
          if (mode == AlphaMode::aci) alpha_eff = clamp_alpha(aci[v][p].alpha);
          if (mode == AlphaMode::dtaci)
            alpha_eff = clamp_alpha(dtaci[v][p].alpha_current);

          Interval iv = family(alpha_eff);
          CalibrationRecord rec;
          rec.iteration = t;
          rec.confidence = pairs[p].confidence();
          rec.lo = iv.lo;
          rec.hi = iv.hi;
          rec.breach = !iv.contains(y_new);
          rec.collapsed = conformal && iv.lo == iv.hi;
          result.series[v].records.push_back(rec);

          if (mode == AlphaMode::aci) {
            const bool breach =
                !family(clamp_alpha(aci[v][p].alpha)).contains(y_new);
            aci[v][p] = aci_update(aci[v][p], breach);
          } else if (mode == AlphaMode::dtaci) {
            const double beta = dtaci_feedback_beta(y_new, family);
            std::vector<bool> breaches(dtaci[v][p].alphas.size());
            for (std::size_t i = 0; i < breaches.size(); ++i)
              breaches[i] = !family(clamp_alpha(dtaci[v][p].alphas[i]))
                                 .contains(y_new);
            Rng ctrl = rng.fork(detail::kCalCtrlTag + v * 131 + p,
                                static_cast<std::uint64_t>(t));
            dtaci_update(dtaci[v][p], beta, breaches, ctrl);
          }
        }
      }
    }

    history.push_back(trial);
    evaluated.push_back(trial.config);
    evaluated_set.insert(trial.config);
    result.trials.push_back(trial);
  }

  return result;
}

}  // namespace cqopt
