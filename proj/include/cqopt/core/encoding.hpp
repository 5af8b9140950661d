#pragma once

#include <string>
#include <vector>

#include "cqopt/core/param_space.hpp"

namespace cqopt {

enum class EncodingScheme { one_hot, ordinal };

inline std::size_t encoded_dimension(const ParamSpace& space, EncodingScheme scheme) {
  std::size_t d = 0;
  for (const auto& p : space.params()) {
    if (p.kind == ParamKind::categorical && scheme == EncodingScheme::one_hot)
      d += p.levels.size();
    else
      d += 1;
  }
  return d;
}

// Numeric parameters are min-max scaled to [0,1] from the space bounds;
// categoricals expand to indicator columns (one_hot) or emit the level
// index (ordinal).
inline std::vector<double> encode(const Configuration& config,
                                  const ParamSpace& space,
                                  EncodingScheme scheme) {
  space.validate(config);
  std::vector<double> out;
  out.reserve(encoded_dimension(space, scheme));
  for (std::size_t i = 0; i < space.size(); ++i) {
    const auto& p = space[i];
    switch (p.kind) {
      case ParamKind::continuous: {
        double x = std::get<double>(config.values[i]);
        out.push_back((x - p.lo) / (p.hi - p.lo));
        break;
      }
      case ParamKind::integer: {
        double x = static_cast<double>(std::get<long long>(config.values[i]));
        out.push_back(p.hi > p.lo ? (x - p.lo) / (p.hi - p.lo) : 0.0);
        break;
      }
      case ParamKind::categorical: {
        std::size_t idx = p.level_index(std::get<std::string>(config.values[i]));
        if (scheme == EncodingScheme::one_hot) {
          for (std::size_t l = 0; l < p.levels.size(); ++l)
            out.push_back(l == idx ? 1.0 : 0.0);
        } else {
          out.push_back(static_cast<double>(idx));
        }
        break;
      }
    }
  }
  return out;
}

}  // namespace cqopt
