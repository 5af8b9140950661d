#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "cqopt/core/param_space.hpp"
#include "cqopt/optimizer/study.hpp"

namespace cqopt {

namespace detail {

inline std::uint64_t fnv1a64(const std::string& bytes,
                             std::uint64_t h = 0xcbf29ce484222325ULL) {
  for (unsigned char c : bytes) {
    h ^= static_cast<std::uint64_t>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string fnv1a64_hex(std::uint64_t h) {
  std::ostringstream out;
  out << std::hex << h;
  return out.str();
}

}  // namespace detail

inline nlohmann::json config_to_json(const Configuration& config,
                                     const ParamSpace& space) {
  nlohmann::json out = nlohmann::json::object();
  for (std::size_t i = 0; i < space.size(); ++i) {
    const ParamValue& v = config.values[i];
    if (std::holds_alternative<double>(v))
      out[space[i].name] = std::get<double>(v);
    else if (std::holds_alternative<long long>(v))
      out[space[i].name] = std::get<long long>(v);
    else
      out[space[i].name] = std::get<std::string>(v);
  }
  return out;
}

inline Configuration config_from_json(const nlohmann::json& j,
                                      const ParamSpace& space) {
  Configuration config;
  for (std::size_t i = 0; i < space.size(); ++i) {
    const auto& field = j.at(space[i].name);
    switch (space[i].kind) {
      case ParamKind::continuous:
        config.values.push_back(field.get<double>());
        break;
      case ParamKind::integer:
        config.values.push_back(field.get<long long>());
        break;
      case ParamKind::categorical:
        config.values.push_back(field.get<std::string>());
        break;
    }
  }
  return config;
}

// One JSON line per iteration. Keys are emitted sorted, doubles round-trip
// exactly, and no wallclock enters the record, so reruns are byte-identical.
inline std::string result_record_line(const std::string& algorithm,
                                      const std::string& dataset,
                                      std::uint64_t seed,
                                      const StudyIteration& it,
                                      const ParamSpace& space) {
  nlohmann::json rec;
  rec["algorithm"] = algorithm;
  rec["dataset"] = dataset;
  rec["seed"] = seed;
  rec["iteration"] = it.trial.iteration;
  rec["config"] = config_to_json(it.trial.config, space);
  if (it.trial.failed) {
    rec["performance"] = nullptr;
    rec["runtime_seconds"] = nullptr;
  } else {
    rec["performance"] = it.trial.performance;
    rec["runtime_seconds"] = it.trial.runtime_seconds;
  }
  if (std::isnan(it.best_so_far))
    rec["best_so_far"] = nullptr;
  else
    rec["best_so_far"] = it.best_so_far;
  if (!it.alpha_state.empty()) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& st : it.alpha_state)
      arr.push_back({{"confidence", st.confidence},
                     {"alpha_raw", st.alpha_raw},
                     {"alpha_effective", st.alpha_effective}});
    rec["alpha_state"] = arr;
  }
  if (!it.intervals.empty()) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& iv : it.intervals)
      arr.push_back({{"confidence", iv.confidence},
                     {"lo", iv.lo},
                     {"hi", iv.hi},
                     {"breach", iv.breach},
                     {"effective_alpha", iv.effective_alpha},
                     {"collapsed", iv.collapsed}});
    rec["intervals"] = arr;
  }
  return rec.dump();
}

struct ParsedRecord {
  std::string algorithm;
  std::string dataset;
  std::uint64_t seed = 0;
  int iteration = -1;
  bool failed = false;
  double performance = std::numeric_limits<double>::quiet_NaN();
  double runtime_seconds = 0.0;
  double best_so_far = std::numeric_limits<double>::quiet_NaN();
  nlohmann::json config;
};

inline ParsedRecord parse_result_record(const std::string& line) {
  const nlohmann::json j = nlohmann::json::parse(line);
  ParsedRecord rec;
  rec.algorithm = j.at("algorithm").get<std::string>();
  rec.dataset = j.at("dataset").get<std::string>();
  rec.seed = j.at("seed").get<std::uint64_t>();
  rec.iteration = j.at("iteration").get<int>();
  rec.config = j.at("config");
  if (j.at("performance").is_null()) {
    rec.failed = true;
  } else {
    rec.performance = j.at("performance").get<double>();
    rec.runtime_seconds = j.at("runtime_seconds").get<double>();
  }
  if (!j.at("best_so_far").is_null())
    rec.best_so_far = j.at("best_so_far").get<double>();
  return rec;
}

// Append-only JSON-lines writer; on close a <path>.done marker stores the
// FNV-1a checksum of the file contents for the resume protocol.
class ResultWriter {
 public:
  explicit ResultWriter(std::string path) : path_(std::move(path)), out_(path_) {
    if (!out_) throw std::runtime_error("cannot write results file " + path_);
  }

  void write_line(const std::string& line) {
    checksum_ = detail::fnv1a64(line + "\n", checksum_);
    out_ << line << '\n';
  }

  void finish() {
    out_.flush();
    std::ofstream done(path_ + ".done");
    done << detail::fnv1a64_hex(checksum_) << '\n';
  }

 private:
  std::string path_;
  std::ofstream out_;
  std::uint64_t checksum_ = 0xcbf29ce484222325ULL;
};

// A result file counts as complete when the .done marker's checksum matches
// the file contents.
inline bool result_file_complete(const std::string& path) {
  std::ifstream done(path + ".done");
  if (!done) return false;
  std::string recorded;
  done >> recorded;
  std::ifstream in(path, std::ios::binary);
  if (!in) return false;
  std::ostringstream buf;
  buf << in.rdbuf();
  return detail::fnv1a64_hex(detail::fnv1a64(buf.str())) == recorded;
}

inline std::vector<std::string> read_result_lines(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open results file " + path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line))
    if (!line.empty()) lines.push_back(line);
  return lines;
}

}  // namespace cqopt
