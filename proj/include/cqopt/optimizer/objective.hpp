#pragma once

#include <functional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "cqopt/core/param_space.hpp"

namespace cqopt {

// Thrown by objectives when a configuration cannot be evaluated; the study
// records a failed trial and moves on.
class EvaluationFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class Objective {
 public:
  virtual ~Objective() = default;

  virtual const ParamSpace& space() const = 0;
  virtual std::string name() const { return "objective"; }

  // Returns (performance, runtime_seconds). Performance is maximized.
  virtual std::pair<double, double> evaluate(const Configuration& config) = 0;

  // Non-null for finite benchmark tables: the exhaustive candidate list.
  virtual const std::vector<Configuration>* finite_candidates() const {
    return nullptr;
  }
};

// Wraps a plain function; used by tests and synthetic surfaces.
class FunctionObjective : public Objective {
 public:
  using Fn = std::function<std::pair<double, double>(const Configuration&)>;

  FunctionObjective(ParamSpace space, Fn fn, std::string name = "objective")
      : space_(std::move(space)), fn_(std::move(fn)), name_(std::move(name)) {}

  const ParamSpace& space() const override { return space_; }
  std::string name() const override { return name_; }
  std::pair<double, double> evaluate(const Configuration& config) override {
    return fn_(config);
  }

 private:
  ParamSpace space_;
  Fn fn_;
  std::string name_;
};

}  // namespace cqopt
