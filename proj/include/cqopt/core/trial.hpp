#pragma once

#include <cmath>
#include <limits>

#include "cqopt/core/param_space.hpp"

namespace cqopt {

struct Trial {
  Configuration config;
  double performance = std::numeric_limits<double>::quiet_NaN();
  double runtime_seconds = 0.0;
  int iteration = -1;
  bool failed = false;

  bool usable() const { return !failed && std::isfinite(performance); }
};

}  // namespace cqopt
