#pragma once

#include <Eigen/Dense>
#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <unordered_set>
#include <vector>

#include "cqopt/acquisition/acquisition.hpp"
#include "cqopt/adaptive/aci.hpp"
#include "cqopt/adaptive/dtaci.hpp"
#include "cqopt/conformal/cvplus.hpp"
#include "cqopt/conformal/grid.hpp"
#include "cqopt/conformal/nonconformity.hpp"
#include "cqopt/core/sampling.hpp"
#include "cqopt/core/study_config.hpp"
#include "cqopt/core/trial.hpp"
#include "cqopt/optimizer/objective.hpp"
#include "cqopt/surrogates/factory.hpp"

namespace cqopt {

struct MonitoredInterval {
  double confidence = 0.0;
  double lo = 0.0;
  double hi = 0.0;
  bool breach = false;
  double effective_alpha = 0.0;
  bool collapsed = false;
};

struct PairAlphaState {
  double confidence = 0.0;
  double alpha_raw = 0.0;        // unclamped controller state
  double alpha_effective = 0.0;  // clamped value used for the interval
};

struct StudyIteration {
  Trial trial;
  double best_so_far = std::numeric_limits<double>::quiet_NaN();
  std::vector<PairAlphaState> alpha_state;    // empty before conformalization
  std::vector<MonitoredInterval> intervals;   // only when interval logging is on
  double overhead_seconds = 0.0;              // optimizer time, excludes evaluate()
};

struct StudyResult {
  std::vector<StudyIteration> iterations;
  int n_failures = 0;
  int collapsed_intervals = 0;
  bool candidates_exhausted = false;
  double best_performance = std::numeric_limits<double>::quiet_NaN();
  Configuration best_config;
};

class StudyAborted : public std::runtime_error {
 public:
  StudyAborted(const std::string& what, int n_failures)
      : std::runtime_error(what), n_failures_(n_failures) {}
  int failures() const { return n_failures_; }

 private:
  int n_failures_;
};

namespace detail {

constexpr std::uint64_t kWarmTag = 0x7761u;
constexpr std::uint64_t kCandTag = 0x6361u;
constexpr std::uint64_t kFitTag = 0x6669u;
constexpr std::uint64_t kAcqIterTag = 0x6971u;
constexpr std::uint64_t kCtrlTag = 0x6374u;

// One alpha controller per symmetric pair of the fitted level vector.
struct PairTracker {
  QuantilePair pair;       // indices into the fitted levels
  bool in_acq_grid = false;
  std::size_t acq_slot = 0;  // pair index within the acquisition level subset
  bool monitored = false;
  AlphaMode mode = AlphaMode::fixed;
  AciState aci;
  DtaciState dtaci;

  double alpha_raw() const {
    switch (mode) {
      case AlphaMode::fixed: return pair.alpha_nominal();
      case AlphaMode::aci: return aci.alpha;
      case AlphaMode::dtaci: return dtaci.alpha_current;
    }
    return pair.alpha_nominal();
  }
  double alpha_effective() const { return clamp_alpha(alpha_raw()); }

  void feed(double y, const std::function<Interval(double)>& interval_at_alpha,
            Rng&& ctrl_rng) {
    if (mode == AlphaMode::fixed) return;
    if (mode == AlphaMode::aci) {
      const bool breach = !interval_at_alpha(clamp_alpha(aci.alpha)).contains(y);
      aci = aci_update(aci, breach);
      return;
    }
    const double beta = dtaci_feedback_beta(y, interval_at_alpha);
    std::vector<bool> breaches(dtaci.alphas.size());
    for (std::size_t i = 0; i < breaches.size(); ++i)
      breaches[i] =
          !interval_at_alpha(clamp_alpha(dtaci.alphas[i])).contains(y);
    dtaci_update(dtaci, beta, breaches, ctrl_rng);
  }
};

// Level bookkeeping shared by the conformal paths: which fitted levels feed
// the acquisition grid and which symmetric pairs are monitored for logging.
struct LevelPlan {
  QuantileLevels fitted;            // sorted union
  QuantileLevels acq_levels;        // the study's M-grid
  std::vector<std::size_t> acq_cols;        // fitted index per acq level
  std::vector<QuantilePair> acq_pairs;      // pairs within acq_levels
  std::vector<PairTracker> trackers;        // pairs of the fitted levels
};

inline LevelPlan make_level_plan(const StudyConfig& cfg) {
  LevelPlan plan;
  plan.acq_levels = make_quantile_grid(cfg.m_quantiles);
  plan.acq_pairs = symmetric_pairs(plan.acq_levels);

  std::vector<double> taus = plan.acq_levels.taus;
  if (cfg.log_intervals) {
    QuantileLevels monitored = levels_for_confidences(cfg.monitored_confidences);
    for (double t : monitored.taus) taus.push_back(t);
  }
  std::sort(taus.begin(), taus.end());
  taus.erase(std::unique(taus.begin(), taus.end(),
                         [](double a, double b) { return std::abs(a - b) < 1e-12; }),
             taus.end());
  plan.fitted = QuantileLevels{taus};
  plan.fitted.validate();

  auto index_of = [&](double tau) {
    for (std::size_t i = 0; i < plan.fitted.size(); ++i)
      if (std::abs(plan.fitted[i] - tau) < 1e-12) return i;
    throw std::logic_error("level plan: missing fitted level");
  };
  for (double t : plan.acq_levels.taus) plan.acq_cols.push_back(index_of(t));

  std::vector<QuantilePair> all_pairs = symmetric_pairs(plan.fitted);
  std::unordered_set<std::size_t> acq_lo;
  for (const auto& p : plan.acq_pairs)
    acq_lo.insert(index_of(plan.acq_levels[p.lo_index]));
  std::unordered_set<std::size_t> mon_lo;
  if (cfg.log_intervals)
    for (double c : cfg.monitored_confidences)
      mon_lo.insert(index_of((1.0 - c) / 2.0));

  for (const auto& p : all_pairs) {
    PairTracker t;
    t.pair = p;
    t.in_acq_grid = acq_lo.count(p.lo_index) > 0;
    t.monitored = mon_lo.count(p.lo_index) > 0;
    if (t.in_acq_grid) {
      for (std::size_t s = 0; s < plan.acq_pairs.size(); ++s)
        if (std::abs(plan.acq_levels[plan.acq_pairs[s].lo_index] -
                     plan.fitted[p.lo_index]) < 1e-12)
          t.acq_slot = s;
    }
    plan.trackers.push_back(std::move(t));
  }
  return plan;
}

inline void init_trackers(LevelPlan& plan, const StudyConfig& cfg) {
  for (auto& t : plan.trackers) {
    t.mode = cfg.alpha_mode;
    const double nominal = t.pair.alpha_nominal();
    if (t.mode == AlphaMode::aci) t.aci = make_aci(nominal, cfg.aci_gamma);
    if (t.mode == AlphaMode::dtaci) t.dtaci = make_dtaci(nominal);
  }
}

}  // namespace detail

inline StudyResult run_study(Objective& objective, const StudyConfig& cfg,
                             const SurrogateSpec& surrogate_spec,
                             const AcquisitionSpec& acq_spec) {
  using clock = std::chrono::steady_clock;
  cfg.validate();
  acq_spec.validate();
  const ParamSpace& space = objective.space();

  Rng rng(cfg.seed);
  StudyResult result;
  std::vector<Trial> history;
  std::vector<Configuration> evaluated;
  std::unordered_set<Configuration, ConfigurationHash> evaluated_set;

  detail::LevelPlan plan = detail::make_level_plan(cfg);
  bool trackers_ready = false;

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

  auto best_usable = [&]() {
    double best = std::numeric_limits<double>::quiet_NaN();
    for (const auto& t : history)
      if (t.usable() && !(t.performance <= best)) best = t.performance;
    return best;
  };

  const int budget = cfg.budget;
  for (int t = 0; t < budget; ++t) {
    auto tick = clock::now();
    StudyIteration record;
    Configuration chosen;
    bool have_choice = false;

    std::unique_ptr<QuantileSurrogate> model;  // grid/expectation source
    CvPlusCalibrator cvplus;
    CvPlusCalibrator::FoldPredictions cand_fold_preds;
    std::vector<std::vector<double>> pair_scores;  // SCP, per tracker
    bool conformal_now = false;
    ConformalMode mode_now = ConformalMode::none;
    Eigen::MatrixXd cand_pred;       // repaired, fitted levels
    Eigen::MatrixXd acq_grid;        // adjusted (or raw) M columns
    std::vector<Configuration> candidates;
    Eigen::Index chosen_idx = -1;
    FeatureSet cand_fs;

    if (t < cfg.n_warm_starts) {
      auto pool = draw_candidates(1, rng.fork(detail::kWarmTag, static_cast<std::uint64_t>(t)));
      if (pool.empty()) {
        result.candidates_exhausted = true;
        break;
      }
      chosen = pool.front();
      have_choice = true;
    } else {
      candidates =
          draw_candidates(static_cast<std::size_t>(cfg.n_candidates),
                          rng.fork(detail::kCandTag, static_cast<std::uint64_t>(t)));
      if (candidates.empty()) {
        result.candidates_exhausted = true;
        break;
      }
      std::vector<Configuration> usable_configs;
      std::vector<double> usable_y;
      for (const auto& tr : history)
        if (tr.usable()) {
          usable_configs.push_back(tr.config);
          usable_y.push_back(tr.performance);
        }
      FeatureSet hist_fs = build_features(usable_configs, space);
      cand_fs = build_features(candidates, space);
      Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(
          usable_y.data(), static_cast<Eigen::Index>(usable_y.size()));

      mode_now = cfg.conformal_mode;
      if (mode_now == ConformalMode::adaptive_schedule)
        mode_now = t < cfg.schedule_switch ? ConformalMode::cvplus : ConformalMode::scp;
      conformal_now = mode_now != ConformalMode::none &&
                      static_cast<int>(history.size()) >= cfg.min_observations &&
                      static_cast<int>(usable_y.size()) >= 6;
      if (!conformal_now) mode_now = ConformalMode::none;

      if (conformal_now && !trackers_ready) {
        detail::init_trackers(plan, cfg);
        trackers_ready = true;
      }

      Rng fit_rng = rng.fork(detail::kFitTag, static_cast<std::uint64_t>(t));
      const Eigen::Index n_cand = cand_fs.rows();
      const auto m_acq = static_cast<Eigen::Index>(plan.acq_levels.size());

      if (mode_now == ConformalMode::scp) {
        // chronological split: earliest 2/3 train, latest 1/3 calibrate
        const Eigen::Index n = y.size();
        const Eigen::Index n_cal = std::max<Eigen::Index>(1, n / 3);
        const Eigen::Index n_train = n - n_cal;
        std::vector<Eigen::Index> train_idx, cal_idx;
        for (Eigen::Index i = 0; i < n_train; ++i) train_idx.push_back(i);
        for (Eigen::Index i = n_train; i < n; ++i) cal_idx.push_back(i);
        model = make_surrogate(surrogate_spec);
        Eigen::VectorXd ytr = y.head(n_train);
        model->fit(hist_fs.subset(train_idx), ytr, plan.fitted, fit_rng);
        Eigen::MatrixXd cal_pred =
            predict_quantiles(*model, hist_fs.subset(cal_idx));
        pair_scores.assign(plan.trackers.size(), {});
        for (std::size_t p = 0; p < plan.trackers.size(); ++p) {
          const auto& pr = plan.trackers[p].pair;
          std::vector<double> scores(cal_idx.size());
          for (std::size_t i = 0; i < cal_idx.size(); ++i)
            scores[i] = cqr_score(
                y(cal_idx[i]),
                cal_pred(static_cast<Eigen::Index>(i),
                         static_cast<Eigen::Index>(pr.lo_index)),
                cal_pred(static_cast<Eigen::Index>(i),
                         static_cast<Eigen::Index>(pr.hi_index)));
          pair_scores[p] = std::move(scores);
        }
        cand_pred = predict_quantiles(*model, cand_fs);

        Eigen::MatrixXd raw_sub(n_cand, m_acq);
        for (Eigen::Index k = 0; k < m_acq; ++k)
          raw_sub.col(k) = cand_pred.col(
              static_cast<Eigen::Index>(plan.acq_cols[static_cast<std::size_t>(k)]));
        std::vector<double> adjustments(plan.acq_pairs.size(), 0.0);
        for (const auto& trk : plan.trackers)
          if (trk.in_acq_grid) {
            std::size_t p_idx = &trk - plan.trackers.data();
            adjustments[trk.acq_slot] = conformal_adjustment(
                pair_scores[p_idx], trk.alpha_effective());
          }
        acq_grid = conformalize_grid(raw_sub, plan.acq_pairs, adjustments);
      } else if (mode_now == ConformalMode::cvplus) {
        cvplus.fit(hist_fs, y, plan.fitted, surrogate_spec, cfg.cv_folds, fit_rng);
        cand_fold_preds = cvplus.predict_candidates(cand_fs);
        model = make_surrogate(surrogate_spec);
        Rng full_rng = rng.fork(detail::kFitTag, 0x10000u + static_cast<std::uint64_t>(t));
        model->fit(hist_fs, y, plan.fitted, full_rng);
        cand_pred = predict_quantiles(*model, cand_fs);

        acq_grid.resize(n_cand, m_acq);
        std::vector<double> row(static_cast<std::size_t>(m_acq));
        for (Eigen::Index c = 0; c < n_cand; ++c) {
          for (const auto& trk : plan.trackers) {
            if (!trk.in_acq_grid) continue;
            std::size_t p_idx = &trk - plan.trackers.data();
            CalibratedInterval iv =
                cvplus.interval(cand_fold_preds, c, p_idx, trk.alpha_effective());
            if (iv.collapsed) ++result.collapsed_intervals;
            const auto& acq_pair = plan.acq_pairs[trk.acq_slot];
            row[acq_pair.lo_index] = iv.lo;
            row[acq_pair.hi_index] = iv.hi;
          }
          std::sort(row.begin(), row.end());
          for (Eigen::Index k = 0; k < m_acq; ++k)
            acq_grid(c, k) = row[static_cast<std::size_t>(k)];
        }
      } else {
        model = make_surrogate(surrogate_spec);
        model->fit(hist_fs, y, plan.fitted, fit_rng);
        cand_pred = predict_quantiles(*model, cand_fs);
        acq_grid.resize(n_cand, m_acq);
        for (Eigen::Index k = 0; k < m_acq; ++k)
          acq_grid.col(k) = cand_pred.col(
              static_cast<Eigen::Index>(plan.acq_cols[static_cast<std::size_t>(k)]));
      }

      // acquisition scoring over the (possibly adjusted) M-grid
      Rng acq_rng = rng.fork(detail::kAcqIterTag, static_cast<std::uint64_t>(t));
      std::vector<double> scores;
      switch (acq_spec.kind) {
        case AcquisitionKind::thompson:
          scores = thompson_scores(acq_grid, acq_rng);
          break;
        case AcquisitionKind::obs:
          scores = obs_scores(acq_grid, model->expectation(cand_fs), acq_rng);
          break;
        case AcquisitionKind::ei: {
          const double f_star = best_usable();
          scores = expected_improvement(acq_grid, plan.acq_levels, f_star,
                                        acq_spec.ei_method, acq_spec.ei_mc_samples,
                                        acq_rng);
          break;
        }
        case AcquisitionKind::ucb_optimistic: {
          std::size_t ucb_tracker = 0;
          double best_gap = std::numeric_limits<double>::infinity();
          for (std::size_t p = 0; p < plan.trackers.size(); ++p) {
            if (!plan.trackers[p].in_acq_grid) continue;
            double gap = std::abs(plan.trackers[p].pair.alpha_nominal() -
                                  acq_spec.ucb_alpha);
            if (gap < best_gap) {
              best_gap = gap;
              ucb_tracker = p;
            }
          }
          const auto& trk = plan.trackers[ucb_tracker];
          scores.resize(static_cast<std::size_t>(n_cand));
          if (mode_now == ConformalMode::scp) {
            const double adj = conformal_adjustment(pair_scores[ucb_tracker],
                                                    trk.alpha_effective());
            for (Eigen::Index c = 0; c < n_cand; ++c)
              scores[static_cast<std::size_t>(c)] = ucb_optimistic_score(
                  cand_pred(c, static_cast<Eigen::Index>(trk.pair.hi_index)), adj);
          } else if (mode_now == ConformalMode::cvplus) {
            for (Eigen::Index c = 0; c < n_cand; ++c)
              scores[static_cast<std::size_t>(c)] =
                  cvplus.interval(cand_fold_preds, c, ucb_tracker,
                                  trk.alpha_effective())
                      .hi;
          } else {
            for (Eigen::Index c = 0; c < n_cand; ++c)
              scores[static_cast<std::size_t>(c)] = ucb_optimistic_score(
                  cand_pred(c, static_cast<Eigen::Index>(trk.pair.hi_index)), 0.0);
          }
          break;
        }
      }
      chosen_idx = static_cast<Eigen::Index>(select_next(scores));
      chosen = candidates[static_cast<std::size_t>(chosen_idx)];
      have_choice = true;
    }

    if (!have_choice) break;

    // everything up to here is optimizer overhead
    double overhead = std::chrono::duration<double>(clock::now() - tick).count();

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
      ++result.n_failures;
    }

    auto tock = clock::now();

    // post-evaluation bookkeeping: interval logging + controller feedback
    if (t >= cfg.n_warm_starts && trial.usable()) {
      const double y_new = trial.performance;
      for (std::size_t p = 0; p < plan.trackers.size(); ++p) {
        auto& trk = plan.trackers[p];
        std::function<Interval(double)> family;
        if (mode_now == ConformalMode::scp) {
          const double q_lo =
              cand_pred(chosen_idx, static_cast<Eigen::Index>(trk.pair.lo_index));
          const double q_hi =
              cand_pred(chosen_idx, static_cast<Eigen::Index>(trk.pair.hi_index));
          const auto& scores_p = pair_scores[p];
          family = [q_lo, q_hi, &scores_p](double a) {
            const double adj = conformal_adjustment(scores_p, a);
            double lo = q_lo - adj, hi = q_hi + adj;
            if (lo > hi) lo = hi = 0.5 * (lo + hi);
            return Interval{lo, hi};
          };
        } else if (mode_now == ConformalMode::cvplus) {
          const CvPlusCalibrator* cal = &cvplus;
          const auto* preds = &cand_fold_preds;
          const Eigen::Index ci = chosen_idx;
          family = [cal, preds, ci, p](double a) {
            return cal->interval(*preds, ci, p, a).interval();
          };
        } else if (cfg.log_intervals && t >= cfg.n_warm_starts && model) {
          const double q_lo =
              cand_pred(chosen_idx, static_cast<Eigen::Index>(trk.pair.lo_index));
          const double q_hi =
              cand_pred(chosen_idx, static_cast<Eigen::Index>(trk.pair.hi_index));
          family = [q_lo, q_hi](double) { return Interval{q_lo, q_hi}; };
        }
        if (!family) continue;

        if (cfg.log_intervals && trk.monitored) {
          MonitoredInterval mi;
          mi.confidence = trk.pair.confidence();
          mi.effective_alpha = conformal_now ? trk.alpha_effective()
                                             : trk.pair.alpha_nominal();
          Interval iv = family(mi.effective_alpha);
          mi.lo = iv.lo;
          mi.hi = iv.hi;
          mi.collapsed = iv.lo == iv.hi && conformal_now;
          mi.breach = !iv.contains(y_new);
          if (mi.collapsed) ++result.collapsed_intervals;
          record.intervals.push_back(mi);
        }
        if (conformal_now)
          trk.feed(y_new, family,
                   rng.fork(detail::kCtrlTag + p, static_cast<std::uint64_t>(t)));
      }
    }

    if (conformal_now) {
      for (const auto& trk : plan.trackers) {
        if (!trk.in_acq_grid && !trk.monitored) continue;
        PairAlphaState st;
        st.confidence = trk.pair.confidence();
        st.alpha_raw = trk.alpha_raw();
        st.alpha_effective = trk.alpha_effective();
        record.alpha_state.push_back(st);
      }
    }

    history.push_back(trial);
    evaluated.push_back(trial.config);
    evaluated_set.insert(trial.config);

    record.trial = trial;
    record.best_so_far = best_usable();
    overhead += std::chrono::duration<double>(clock::now() - tock).count();
    record.overhead_seconds = overhead;
    result.iterations.push_back(std::move(record));

    if (result.n_failures >
        cfg.max_failure_fraction * static_cast<double>(cfg.budget))
      throw StudyAborted("study aborted: failure count " +
                             std::to_string(result.n_failures) +
                             " exceeds " +
                             std::to_string(cfg.max_failure_fraction) +
                             " of budget " + std::to_string(cfg.budget),
                         result.n_failures);
  }

  result.best_performance = best_usable();
  for (const auto& tr : history)
    if (tr.usable() && tr.performance == result.best_performance) {
      result.best_config = tr.config;
      break;
    }
  return result;
}

inline StudyResult run_random_search(Objective& objective, const StudyConfig& cfg) {
  using clock = std::chrono::steady_clock;
  cfg.validate();
  Rng rng(cfg.seed);
  StudyResult result;
  std::vector<Configuration> evaluated;
  std::unordered_set<Configuration, ConfigurationHash> evaluated_set;
  double best = std::numeric_limits<double>::quiet_NaN();

  for (int t = 0; t < cfg.budget; ++t) {
    auto tick = clock::now();
    std::vector<Configuration> pool;
    if (const auto* all = objective.finite_candidates()) {
      Rng pool_rng = rng.fork(detail::kWarmTag, static_cast<std::uint64_t>(t));
      std::vector<Configuration> fresh;
      for (const auto& c : *all)
        if (!evaluated_set.count(c)) fresh.push_back(c);
      pool_rng.shuffle(fresh);
      if (!fresh.empty()) pool.push_back(fresh.front());
    } else {
      Rng pool_rng = rng.fork(detail::kWarmTag, static_cast<std::uint64_t>(t));
      pool = sample_candidates(objective.space(), 1, pool_rng, evaluated);
    }
    if (pool.empty()) {
      result.candidates_exhausted = true;
      break;
    }
    double overhead = std::chrono::duration<double>(clock::now() - tick).count();

    Trial trial;
    trial.config = pool.front();
    trial.iteration = t;
    try {
      auto [perf, rt] = objective.evaluate(trial.config);
      if (!std::isfinite(perf))
        throw EvaluationFailure("objective returned non-finite performance");
      trial.performance = perf;
      trial.runtime_seconds = rt;
    } catch (const std::exception&) {
      trial.failed = true;
      ++result.n_failures;
    }
    if (trial.usable() && !(trial.performance <= best)) best = trial.performance;

    evaluated.push_back(trial.config);
    evaluated_set.insert(trial.config);
    StudyIteration record;
    record.trial = trial;
    record.best_so_far = best;
    record.overhead_seconds = overhead;
    result.iterations.push_back(std::move(record));

    if (result.n_failures >
        cfg.max_failure_fraction * static_cast<double>(cfg.budget))
      throw StudyAborted("study aborted: failure count " +
                             std::to_string(result.n_failures) +
                             " exceeds " +
                             std::to_string(cfg.max_failure_fraction) +
                             " of budget " + std::to_string(cfg.budget),
                         result.n_failures);
  }

  result.best_performance = best;
  for (const auto& rec : result.iterations)
    if (rec.trial.usable() && rec.trial.performance == best) {
      result.best_config = rec.trial.config;
      break;
    }
  return result;
}

}  // namespace cqopt
