#pragma once

#include <cstdint>
#include <fstream>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "cqopt/acquisition/acquisition.hpp"
#include "cqopt/bench/synthetic.hpp"
#include "cqopt/core/study_config.hpp"
#include "cqopt/surrogates/factory.hpp"

namespace cqopt {

// Manifest problems surface as exit code 1; the message names the field.
class ManifestError : public std::runtime_error {
 public:
  explicit ManifestError(const std::string& field, const std::string& detail)
      : std::runtime_error("manifest error: field '" + field + "' " + detail) {}
};

struct BenchmarkRef {
  bool is_synthetic = false;
  std::string path;         // tabular CSV when not synthetic
  SyntheticKind kind = SyntheticKind::branin_discretized;
  std::uint64_t noise_seed = 0;
  int n1 = 0, n2 = 0;       // grid resolution for table-backed synthetics
  std::string display_name;
};

struct AlgorithmSpec {
  std::string name;
  bool random_baseline = false;
  SurrogateSpec surrogate;
  AcquisitionSpec acquisition;
  StudyConfig study;
};

struct RunManifest {
  std::string output_dir = "results";
  std::vector<std::uint64_t> seeds;
  std::vector<BenchmarkRef> benchmarks;
  std::vector<AlgorithmSpec> algorithms;
};

namespace detail {

inline void parse_study_overrides(const nlohmann::json& j, StudyConfig& cfg,
                                  const std::string& field) {
  if (!j.is_object()) throw ManifestError(field, "must be an object");
  for (const auto& [key, value] : j.items()) {
    try {
      if (key == "budget")
        cfg.budget = value.get<int>();
      else if (key == "n_warm_starts")
        cfg.n_warm_starts = value.get<int>();
      else if (key == "n_candidates")
        cfg.n_candidates = value.get<int>();
      else if (key == "min_observations")
        cfg.min_observations = value.get<int>();
      else if (key == "m_quantiles")
        cfg.m_quantiles = value.get<int>();
      else if (key == "schedule_switch")
        cfg.schedule_switch = value.get<int>();
      else if (key == "cv_folds")
        cfg.cv_folds = value.get<int>();
      else if (key == "aci_gamma")
        cfg.aci_gamma = value.get<double>();
      else if (key == "max_failure_fraction")
        cfg.max_failure_fraction = value.get<double>();
      else if (key == "log_intervals")
        cfg.log_intervals = value.get<bool>();
      else if (key == "monitored_confidences")
        cfg.monitored_confidences = value.get<std::vector<double>>();
      else if (key == "conformal_mode") {
        const std::string mode = value.get<std::string>();
        if (mode == "none")
          cfg.conformal_mode = ConformalMode::none;
        else if (mode == "scp")
          cfg.conformal_mode = ConformalMode::scp;
        else if (mode == "cvplus")
          cfg.conformal_mode = ConformalMode::cvplus;
        else if (mode == "adaptive_schedule")
          cfg.conformal_mode = ConformalMode::adaptive_schedule;
        else
          throw ManifestError(field + ".conformal_mode",
                              "must be none|scp|cvplus|adaptive_schedule");
      } else if (key == "alpha_mode") {
        const std::string mode = value.get<std::string>();
        if (mode == "fixed")
          cfg.alpha_mode = AlphaMode::fixed;
        else if (mode == "aci")
          cfg.alpha_mode = AlphaMode::aci;
        else if (mode == "dtaci")
          cfg.alpha_mode = AlphaMode::dtaci;
        else
          throw ManifestError(field + ".alpha_mode", "must be fixed|aci|dtaci");
      } else {
        throw ManifestError(field + "." + key, "is not a study setting");
      }
    } catch (const ManifestError&) {
      throw;
    } catch (const std::exception&) {
      throw ManifestError(field + "." + key, "has the wrong type");
    }
  }
  try {
    cfg.validate();
  } catch (const std::exception& e) {
    throw ManifestError(field, std::string("is invalid: ") + e.what());
  }
}

inline void parse_surrogate_spec(const nlohmann::json& j, SurrogateSpec& spec,
                                 const std::string& field) {
  try {
    if (j.is_string()) {
      spec.kind = surrogate_kind_from_string(j.get<std::string>());
      return;
    }
    if (!j.is_object()) throw ManifestError(field, "must be a string or object");
    for (const auto& [key, value] : j.items()) {
      if (key == "kind")
        spec.kind = surrogate_kind_from_string(value.get<std::string>());
      else if (key == "gbm_stages")
        spec.gbm_stages = value.get<int>();
      else if (key == "gbm_max_depth")
        spec.gbm_max_depth = value.get<int>();
      else if (key == "gbm_min_leaf")
        spec.gbm_min_leaf = value.get<int>();
      else if (key == "gbm_learning_rate")
        spec.gbm_learning_rate = value.get<double>();
      else if (key == "rf_trees")
        spec.rf_trees = value.get<int>();
      else if (key == "rf_min_leaf")
        spec.rf_min_leaf = value.get<int>();
      else if (key == "rf_max_depth")
        spec.rf_max_depth = value.get<int>();
      else if (key == "rf_mtry")
        spec.rf_mtry = value.get<int>();
      else if (key == "rf_bootstrap")
        spec.rf_bootstrap = value.get<bool>();
      else if (key == "ql_lambda")
        spec.ql_lambda = value.get<double>();
      else if (key == "ql_max_iters")
        spec.ql_max_iters = value.get<int>();
      else if (key == "gp_starts")
        spec.gp_starts = value.get<int>();
      else if (key == "gp_opt_iters")
        spec.gp_opt_iters = value.get<int>();
      else if (key == "qe_folds")
        spec.qe_folds = value.get<int>();
      else if (key == "qe_meta_lambda")
        spec.qe_meta_lambda = value.get<double>();
      else if (key == "qe_members") {
        spec.qe_members.clear();
        for (const auto& m : value)
          spec.qe_members.push_back(surrogate_kind_from_string(m.get<std::string>()));
      } else {
        throw ManifestError(field + "." + key, "is not a surrogate setting");
      }
    }
  } catch (const ManifestError&) {
    throw;
  } catch (const std::exception& e) {
    throw ManifestError(field, std::string("is invalid: ") + e.what());
  }
}

inline void parse_acquisition_spec(const nlohmann::json& j, AcquisitionSpec& spec,
                                   const std::string& field) {
  try {
    if (j.is_string()) {
      spec.kind = acquisition_kind_from_string(j.get<std::string>());
      spec.validate();
      return;
    }
    if (!j.is_object()) throw ManifestError(field, "must be a string or object");
    for (const auto& [key, value] : j.items()) {
      if (key == "kind")
        spec.kind = acquisition_kind_from_string(value.get<std::string>());
      else if (key == "ei_method") {
        const std::string m = value.get<std::string>();
        if (m == "interval_uniform")
          spec.ei_method = EiMethod::interval_uniform;
        else if (m == "monte_carlo")
          spec.ei_method = EiMethod::monte_carlo;
        else
          throw ManifestError(field + ".ei_method",
                              "must be interval_uniform|monte_carlo");
      } else if (key == "ei_mc_samples")
        spec.ei_mc_samples = value.get<int>();
      else if (key == "ucb_alpha")
        spec.ucb_alpha = value.get<double>();
      else
        throw ManifestError(field + "." + key, "is not an acquisition setting");
    }
    spec.validate();
  } catch (const ManifestError&) {
    throw;
  } catch (const std::exception& e) {
    throw ManifestError(field, std::string("is invalid: ") + e.what());
  }
}

inline BenchmarkRef parse_benchmark(const nlohmann::json& j,
                                    const std::string& field) {
  BenchmarkRef ref;
  if (j.is_string()) {
    ref.path = j.get<std::string>();
    ref.display_name = ref.path;
    return ref;
  }
  if (!j.is_object())
    throw ManifestError(field, "must be a path string or an object");
  for (const auto& [key, value] : j.items()) {
    (void)value;
    if (key != "path" && key != "synthetic" && key != "noise_seed" &&
        key != "n1" && key != "n2" && key != "name")
      throw ManifestError(field + "." + key, "is not a benchmark setting");
  }
  if (j.contains("path") == j.contains("synthetic"))
    throw ManifestError(field, "needs exactly one of 'path' or 'synthetic'");
  try {
    if (j.contains("path")) {
      ref.path = j["path"].get<std::string>();
      ref.display_name = ref.path;
    } else {
      ref.is_synthetic = true;
      ref.kind = synthetic_kind_from_string(j["synthetic"].get<std::string>());
      ref.display_name = to_string(ref.kind);
      if (j.contains("noise_seed"))
        ref.noise_seed = j["noise_seed"].get<std::uint64_t>();
      if (j.contains("n1")) ref.n1 = j["n1"].get<int>();
      if (j.contains("n2")) ref.n2 = j["n2"].get<int>();
    }
    if (j.contains("name")) ref.display_name = j["name"].get<std::string>();
  } catch (const ManifestError&) {
    throw;
  } catch (const std::exception& e) {
    throw ManifestError(field, std::string("is invalid: ") + e.what());
  }
  return ref;
}

}  // namespace detail

inline RunManifest parse_manifest(const nlohmann::json& j) {
  if (!j.is_object()) throw ManifestError("<root>", "must be a JSON object");
  // 'calibration' belongs to the calibrate command; everything else is ours.
  for (const auto& [key, value] : j.items()) {
    (void)value;
    if (key != "output_dir" && key != "seeds" && key != "seed_count" &&
        key != "benchmarks" && key != "algorithms" && key != "calibration")
      throw ManifestError(key, "is not a manifest setting");
  }
  RunManifest manifest;

  if (j.contains("output_dir")) {
    if (!j["output_dir"].is_string())
      throw ManifestError("output_dir", "must be a string");
    manifest.output_dir = j["output_dir"].get<std::string>();
  }

  if (j.contains("seeds")) {
    if (!j["seeds"].is_array() || j["seeds"].empty())
      throw ManifestError("seeds", "must be a non-empty array");
    for (const auto& s : j["seeds"]) {
      if (!s.is_number_unsigned() && !s.is_number_integer())
        throw ManifestError("seeds", "must contain integers");
      manifest.seeds.push_back(s.get<std::uint64_t>());
    }
  } else if (j.contains("seed_count")) {
    if (!j["seed_count"].is_number_integer() || j["seed_count"].get<int>() < 1)
      throw ManifestError("seed_count", "must be a positive integer");
    for (int s = 0; s < j["seed_count"].get<int>(); ++s)
      manifest.seeds.push_back(static_cast<std::uint64_t>(s));
  } else {
    throw ManifestError("seeds", "is required (or seed_count)");
  }
  {
    std::set<std::uint64_t> unique(manifest.seeds.begin(), manifest.seeds.end());
    if (unique.size() != manifest.seeds.size())
      throw ManifestError("seeds", "must be distinct");
  }

  if (!j.contains("benchmarks") || !j["benchmarks"].is_array() ||
      j["benchmarks"].empty())
    throw ManifestError("benchmarks", "must be a non-empty array");
  for (std::size_t i = 0; i < j["benchmarks"].size(); ++i)
    manifest.benchmarks.push_back(detail::parse_benchmark(
        j["benchmarks"][i], "benchmarks[" + std::to_string(i) + "]"));

  if (!j.contains("algorithms") || !j["algorithms"].is_array() ||
      j["algorithms"].empty())
    throw ManifestError("algorithms", "must be a non-empty array");
  for (std::size_t i = 0; i < j["algorithms"].size(); ++i) {
    const std::string field = "algorithms[" + std::to_string(i) + "]";
    const auto& a = j["algorithms"][i];
    if (!a.is_object()) throw ManifestError(field, "must be an object");
    AlgorithmSpec spec;
    for (const auto& [key, value] : a.items()) {
      (void)value;
      if (key != "name" && key != "random" && key != "surrogate" &&
          key != "acquisition" && key != "study")
        throw ManifestError(field + "." + key, "is not an algorithm setting");
    }
    if (!a.contains("name") || !a["name"].is_string())
      throw ManifestError(field + ".name", "is required");
    spec.name = a["name"].get<std::string>();
    if (a.contains("random")) {
      if (!a["random"].is_boolean())
        throw ManifestError(field + ".random", "must be a boolean");
      spec.random_baseline = a["random"].get<bool>();
    }
    if (a.contains("surrogate"))
      detail::parse_surrogate_spec(a["surrogate"], spec.surrogate,
                                   field + ".surrogate");
    if (a.contains("acquisition"))
      detail::parse_acquisition_spec(a["acquisition"], spec.acquisition,
                                     field + ".acquisition");
    if (a.contains("study"))
      detail::parse_study_overrides(a["study"], spec.study, field + ".study");
    manifest.algorithms.push_back(std::move(spec));
  }
  {
    std::set<std::string> names;
    for (const auto& a : manifest.algorithms)
      if (!names.insert(a.name).second)
        throw ManifestError("algorithms", "contains duplicate name '" + a.name + "'");
  }
  return manifest;
}

inline RunManifest load_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ManifestError("<file>", "cannot open manifest at " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw ManifestError("<file>", std::string("is not valid JSON: ") + e.what());
  }
  return parse_manifest(j);
}

}  // namespace cqopt
