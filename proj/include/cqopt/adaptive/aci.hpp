#pragma once

#include <stdexcept>

namespace cqopt {

// Online miscoverage control: alpha_{t+1} = alpha_t + gamma * (alpha - err_t).
// The state keeps the unclamped trajectory; clamping happens at the use site.
struct AciState {
  double alpha_target = 0.1;
  double alpha = 0.1;
  double gamma = 0.01;
};

inline AciState make_aci(double alpha_target, double gamma = 0.01) {
  if (!(alpha_target > 0.0 && alpha_target < 1.0))
    throw std::invalid_argument("aci: target miscoverage must lie in (0,1)");
  if (!(gamma > 0.0)) throw std::invalid_argument("aci: gamma must be positive");
  return {alpha_target, alpha_target, gamma};
}

inline AciState aci_update(AciState state, bool breached) {
  const double err = breached ? 1.0 : 0.0;
  state.alpha = state.alpha + state.gamma * (state.alpha_target - err);
  return state;
}

}  // namespace cqopt
