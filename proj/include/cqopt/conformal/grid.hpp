#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <stdexcept>
#include <vector>

#include "cqopt/conformal/nonconformity.hpp"
#include "cqopt/surrogates/quantile_levels.hpp"

namespace cqopt {

// Shifts each symmetric pair of a sorted quantile row outward by its pair
// adjustment (lower down, upper up), then restores non-crossing by sorting.
inline std::vector<double> conformalize_row(const std::vector<double>& raw,
                                            const std::vector<QuantilePair>& pairs,
                                            const std::vector<double>& adjustments) {
  if (pairs.size() != adjustments.size())
    throw std::invalid_argument("conformalize_row: one adjustment per pair required");
  std::vector<double> out = raw;
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    out[pairs[p].lo_index] -= adjustments[p];
    out[pairs[p].hi_index] += adjustments[p];
  }
  std::sort(out.begin(), out.end());
  return out;
}

inline Eigen::MatrixXd conformalize_grid(const Eigen::MatrixXd& raw,
                                         const std::vector<QuantilePair>& pairs,
                                         const std::vector<double>& adjustments) {
  if (pairs.size() != adjustments.size())
    throw std::invalid_argument("conformalize_grid: one adjustment per pair required");
  Eigen::MatrixXd out = raw;
  std::vector<double> row(static_cast<std::size_t>(raw.cols()));
  for (Eigen::Index r = 0; r < raw.rows(); ++r) {
    for (Eigen::Index c = 0; c < raw.cols(); ++c)
      row[static_cast<std::size_t>(c)] = raw(r, c);
    for (std::size_t p = 0; p < pairs.size(); ++p) {
      row[pairs[p].lo_index] -= adjustments[p];
      row[pairs[p].hi_index] += adjustments[p];
    }
    std::sort(row.begin(), row.end());
    for (Eigen::Index c = 0; c < raw.cols(); ++c)
      out(r, c) = row[static_cast<std::size_t>(c)];
  }
  return out;
}

}  // namespace cqopt
