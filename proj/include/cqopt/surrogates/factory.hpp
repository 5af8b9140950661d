#pragma once

#include <memory>
#include <stdexcept>
#include <string>

#include "cqopt/surrogates/ensemble.hpp"
#include "cqopt/surrogates/qgbm.hpp"
#include "cqopt/surrogates/qgp.hpp"
#include "cqopt/surrogates/qrf.hpp"
#include "cqopt/surrogates/quantile_lasso.hpp"
#include "cqopt/surrogates/surrogate.hpp"

namespace cqopt {

inline std::unique_ptr<QuantileSurrogate> make_surrogate(const SurrogateSpec& spec) {
  switch (spec.kind) {
    case SurrogateKind::ql:
      return std::make_unique<QuantileLasso>(spec);
    case SurrogateKind::qgbm:
      return std::make_unique<QuantileGbm>(spec);
    case SurrogateKind::qrf:
      return std::make_unique<QuantileForest>(spec);
    case SurrogateKind::qgp:
      return std::make_unique<QuantileGp>(spec);
    case SurrogateKind::qe:
      return std::make_unique<StackedEnsemble>(spec);
  }
  throw std::invalid_argument("unknown surrogate kind");
}

inline SurrogateKind surrogate_kind_from_string(const std::string& name) {
  if (name == "ql") return SurrogateKind::ql;
  if (name == "qgbm") return SurrogateKind::qgbm;
  if (name == "qrf") return SurrogateKind::qrf;
  if (name == "qgp") return SurrogateKind::qgp;
  if (name == "qe") return SurrogateKind::qe;
  throw std::invalid_argument("unknown surrogate '" + name + "'");
}

inline std::string to_string(SurrogateKind kind) {
  switch (kind) {
    case SurrogateKind::ql: return "ql";
    case SurrogateKind::qgbm: return "qgbm";
    case SurrogateKind::qrf: return "qrf";
    case SurrogateKind::qgp: return "qgp";
    case SurrogateKind::qe: return "qe";
  }
  return "?";
}

}  // namespace cqopt
