#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace cqopt {

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  bool contains(double y) const { return y >= lo && y <= hi; }
  double width() const { return hi - lo; }
};

struct CalibratedInterval {
  double lo = 0.0;
  double hi = 0.0;
  double nominal_alpha = 0.0;
  double effective_alpha = 0.0;
  bool collapsed = false;  // lo > hi before the midpoint guard fired

  Interval interval() const { return {lo, hi}; }
  bool contains(double y) const { return y >= lo && y <= hi; }
};

inline double clamp_alpha(double alpha) {
  return std::clamp(alpha, 0.01, 0.99);
}

// Nonconformity of an observation against a raw quantile pair: positive when
// y escapes the interval, negative inside it.
inline double cqr_score(double y, double q_lo, double q_hi) {
  return std::max(q_lo - y, y - q_hi);
}

template <typename LoVec, typename HiVec, typename YVec>
std::vector<double> scp_scores(const LoVec& q_lo, const HiVec& q_hi, const YVec& y) {
  const std::size_t n = static_cast<std::size_t>(y.size());
  if (n == 0) throw std::invalid_argument("scp_scores: empty calibration set");
  std::vector<double> scores(n);
  for (std::size_t i = 0; i < n; ++i)
    scores[i] = cqr_score(y[i], q_lo[i], q_hi[i]);
  return scores;
}

// Conservative finite-sample adjustment: the ceil((1-alpha)(n+1))-th order
// statistic of the scores; ranks past n saturate at the maximum so small
// calibration sets still yield finite intervals.
inline double conformal_adjustment(const std::vector<double>& scores, double alpha_eff) {
  if (scores.empty())
    throw std::invalid_argument("conformal_adjustment: empty score set");
  const std::size_t n = scores.size();
  double raw = std::ceil((1.0 - alpha_eff) * static_cast<double>(n + 1));
  std::size_t rank = raw < 1.0 ? 1 : static_cast<std::size_t>(raw);
  if (rank > n) rank = n;
  std::vector<double> tmp(scores);
  std::nth_element(tmp.begin(), tmp.begin() + (rank - 1), tmp.end());
  return tmp[rank - 1];
}

// [q_lo - adj, q_hi + adj]; a crossed pair collapses to its midpoint.
inline CalibratedInterval scp_interval(double q_lo, double q_hi,
                                       const std::vector<double>& scores,
                                       double alpha_eff, double nominal_alpha) {
  const double adj = conformal_adjustment(scores, alpha_eff);
  CalibratedInterval out;
  out.nominal_alpha = nominal_alpha;
  out.effective_alpha = alpha_eff;
  out.lo = q_lo - adj;
  out.hi = q_hi + adj;
  if (out.lo > out.hi) {
    const double mid = 0.5 * (out.lo + out.hi);
    out.lo = out.hi = mid;
    out.collapsed = true;
  }
  return out;
}

}  // namespace cqopt
