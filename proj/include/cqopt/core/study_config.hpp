#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

namespace cqopt {

enum class ConformalMode { none, scp, cvplus, adaptive_schedule };
enum class AlphaMode { fixed, aci, dtaci };

struct StudyConfig {
  int n_warm_starts = 15;
  int budget = 100;            // total evaluations, warm starts included
  int n_candidates = 2000;     // candidate pool size per iteration
  int min_observations = 32;   // history size at which conformalization starts
  int m_quantiles = 4;         // interior quantile grid size (even)
  ConformalMode conformal_mode = ConformalMode::scp;
  AlphaMode alpha_mode = AlphaMode::dtaci;
  int schedule_switch = 50;    // adaptive_schedule: cv+ below, scp at and above
  int cv_folds = 5;
  double aci_gamma = 0.01;
  double max_failure_fraction = 0.2;
  bool log_intervals = false;  // per-iteration intervals at monitored confidences
  std::vector<double> monitored_confidences = {0.25, 0.5, 0.75};
  std::uint64_t seed = 0;

  void validate() const {
    if (n_warm_starts < 1)
      throw std::invalid_argument("study config: need at least one warm start");
    if (budget < n_warm_starts)
      throw std::invalid_argument("study config: budget below warm start count");
    if (n_candidates < 1)
      throw std::invalid_argument("study config: candidate pool must be positive");
    if (m_quantiles < 2 || m_quantiles % 2 != 0)
      throw std::invalid_argument("study config: quantile grid size must be even and >= 2");
    if (min_observations < 2)
      throw std::invalid_argument("study config: conformalization needs >= 2 observations");
    if (cv_folds < 2)
      throw std::invalid_argument("study config: cross-validation needs >= 2 folds");
    if (!(aci_gamma > 0.0))
      throw std::invalid_argument("study config: adaptation step size must be positive");
    if (!(max_failure_fraction >= 0.0 && max_failure_fraction <= 1.0))
      throw std::invalid_argument("study config: failure fraction must lie in [0,1]");
    for (double c : monitored_confidences)
      if (!(c > 0.0 && c < 1.0))
        throw std::invalid_argument("study config: monitored confidences must lie in (0,1)");
  }
};

}  // namespace cqopt
