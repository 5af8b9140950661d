#pragma once

#include <cmath>
#include <functional>
#include <iostream>
#include <stdexcept>
#include <vector>

#include "cqopt/conformal/nonconformity.hpp"
#include "cqopt/core/rng.hpp"
#include "cqopt/surrogates/pinball.hpp"

namespace cqopt {

struct DtaciParams {
  double eta = 0.0;
  double sigma = 0.0;
};

// eta = sqrt((3/L) * (log(L*K) + 2) / ((1-alpha)^2 alpha^2)), sigma = 1/(2L).
inline DtaciParams dtaci_default_params(double alpha, int L = 50, int K = 8) {
  if (L < 1 || K < 1)
    throw std::invalid_argument("dtaci params: L and K must be positive");
  if (!(alpha > 0.0 && alpha < 1.0))
    throw std::invalid_argument("dtaci params: alpha must lie in (0,1)");
  DtaciParams p;
  p.eta = std::sqrt((3.0 / L) * (std::log(static_cast<double>(L) * K) + 2.0) /
                    ((1.0 - alpha) * (1.0 - alpha) * alpha * alpha));
  p.sigma = 1.0 / (2.0 * L);
  return p;
}

inline std::vector<double> dtaci_default_gammas() {
  return {0.001, 0.002, 0.004, 0.008, 0.016, 0.032, 0.064, 0.128};
}

// Expert-tracking miscoverage control: K per-gamma candidate alphas advanced
// by their own update rule, exponentially weighted by the pinball loss of the
// realized feedback level, with additive regularization toward uniform.
struct DtaciState {
  double alpha_target = 0.1;
  double eta = 0.0;
  double sigma = 0.0;
  std::vector<double> gammas;
  std::vector<double> weights;
  std::vector<double> alphas;
  double alpha_current = 0.1;  // the alpha the study uses this round
  long steps = 0;
};

inline DtaciState make_dtaci(double alpha_target,
                             std::vector<double> gammas = dtaci_default_gammas(),
                             int L = 50) {
  if (gammas.empty()) throw std::invalid_argument("dtaci: need >= 1 gamma");
  if (!(alpha_target > 0.0 && alpha_target < 1.0))
    throw std::invalid_argument("dtaci: target miscoverage must lie in (0,1)");
  DtaciState s;
  s.alpha_target = alpha_target;
  DtaciParams p = dtaci_default_params(alpha_target, L, static_cast<int>(gammas.size()));
  s.eta = p.eta;
  s.sigma = p.sigma;
  s.gammas = std::move(gammas);
  s.weights.assign(s.gammas.size(), 1.0 / static_cast<double>(s.gammas.size()));
  s.alphas.assign(s.gammas.size(), alpha_target);
  s.alpha_current = alpha_target;
  return s;
}

// Confidence of the smallest interval containing y, found by bisection over
// miscoverage in [0.001, 0.999] to tolerance 1e-4. The family must be
// monotone: lower alpha (higher confidence) gives a wider interval. Contained
// by everything -> 0.001; outside even the widest interval -> 0.999.
inline double dtaci_feedback_beta(
    double y, const std::function<Interval(double)>& interval_at_alpha) {
  const double a_min = 0.001, a_max = 0.999;
  if (!interval_at_alpha(a_min).contains(y)) return 0.999;
  if (interval_at_alpha(a_max).contains(y)) return 0.001;
  double lo = a_min, hi = a_max;  // contains(lo) true, contains(hi) false
  while (hi - lo > 1e-4) {
    double mid = 0.5 * (lo + hi);
    if (interval_at_alpha(mid).contains(y))
      lo = mid;
    else
      hi = mid;
  }
  const double alpha_star = 0.5 * (lo + hi);
  return std::clamp(1.0 - alpha_star, 0.001, 0.999);
}

// One feedback round. beta is on the confidence scale (as returned by
// dtaci_feedback_beta); the weight update uses the realized miscoverage
// level 1 - beta inside the pinball loss at the target level. breaches[i]
// is the miss indicator of the interval built at alphas[i].
inline double dtaci_update(DtaciState& state, double beta,
                           const std::vector<bool>& breaches, Rng& rng) {
  const std::size_t K = state.gammas.size();
  if (breaches.size() != K)
    throw std::invalid_argument("dtaci update: one breach flag per expert");

  const double beta_misc = 1.0 - beta;
  double total = 0.0;
  for (std::size_t i = 0; i < K; ++i) {
    const double loss = pinball_loss(beta_misc - state.alphas[i], state.alpha_target);
    state.weights[i] *= std::exp(-state.eta * loss);
    total += state.weights[i];
  }
  if (total <= 0.0 || !std::isfinite(total)) {
    std::cerr << "dtaci: weight mass degenerated; resetting to uniform\n";
    for (auto& w : state.weights) w = 1.0 / static_cast<double>(K);
    total = 1.0;
  }
  for (std::size_t i = 0; i < K; ++i)
    state.weights[i] = (1.0 - state.sigma) * state.weights[i] +
                       state.sigma * total / static_cast<double>(K);
  if (total < 1e-100) {  // ratio-preserving rescue against underflow
    for (auto& w : state.weights) w /= total;
    total = 1.0;
  } else {
    total = 0.0;
    for (double w : state.weights) total += w;
  }

  for (std::size_t i = 0; i < K; ++i) {
    const double err = breaches[i] ? 1.0 : 0.0;
    state.alphas[i] = state.alphas[i] + state.gammas[i] * (state.alpha_target - err);
  }

  // sample the next alpha from the normalized weights
  double u = rng.uniform01() * total;
  std::size_t pick = K - 1;
  double cum = 0.0;
  for (std::size_t i = 0; i < K; ++i) {
    cum += state.weights[i];
    if (u < cum) {
      pick = i;
      break;
    }
  }
  state.alpha_current = state.alphas[pick];
  ++state.steps;
  return state.alpha_current;
}

}  // namespace cqopt
