#pragma once

#include <Eigen/Dense>
#include <vector>

#include "cqopt/core/encoding.hpp"
#include "cqopt/core/param_space.hpp"

namespace cqopt {

// Both encodings of a configuration batch, built once and shared by all
// surrogate architectures (linear/GP models read one_hot, trees read ordinal).
struct FeatureSet {
  Eigen::MatrixXd one_hot;
  Eigen::MatrixXd ordinal;

  Eigen::Index rows() const { return one_hot.rows(); }

  FeatureSet subset(const std::vector<Eigen::Index>& idx) const {
    FeatureSet out;
    out.one_hot.resize(static_cast<Eigen::Index>(idx.size()), one_hot.cols());
    out.ordinal.resize(static_cast<Eigen::Index>(idx.size()), ordinal.cols());
    for (Eigen::Index r = 0; r < static_cast<Eigen::Index>(idx.size()); ++r) {
      out.one_hot.row(r) = one_hot.row(idx[r]);
      out.ordinal.row(r) = ordinal.row(idx[r]);
    }
    return out;
  }
};

inline FeatureSet build_features(const std::vector<Configuration>& configs,
                                 const ParamSpace& space) {
  FeatureSet fs;
  const Eigen::Index n = static_cast<Eigen::Index>(configs.size());
  fs.one_hot.resize(n, static_cast<Eigen::Index>(
                           encoded_dimension(space, EncodingScheme::one_hot)));
  fs.ordinal.resize(n, static_cast<Eigen::Index>(
                           encoded_dimension(space, EncodingScheme::ordinal)));
  for (Eigen::Index r = 0; r < n; ++r) {
    std::vector<double> oh = encode(configs[r], space, EncodingScheme::one_hot);
    std::vector<double> od = encode(configs[r], space, EncodingScheme::ordinal);
    for (Eigen::Index c = 0; c < fs.one_hot.cols(); ++c) fs.one_hot(r, c) = oh[c];
    for (Eigen::Index c = 0; c < fs.ordinal.cols(); ++c) fs.ordinal(r, c) = od[c];
  }
  return fs;
}

}  // namespace cqopt
