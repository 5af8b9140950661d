#pragma once

#include <charconv>
#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "cqopt/core/param_space.hpp"
#include "cqopt/optimizer/objective.hpp"

namespace cqopt {

struct TabularBenchmark {
  ParamSpace space;
  std::string name;
  std::vector<Configuration> configs;  // stable first-seen order
  std::unordered_map<Configuration, std::pair<double, double>, ConfigurationHash>
      rows;  // config -> (performance, runtime_seconds)
};

namespace detail {

inline std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc{}) throw std::runtime_error("double format failed");
  return std::string(buf, ptr);
}

inline double parse_double_field(const std::string& s, const std::string& column,
                                 std::size_t row) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size())
    throw std::runtime_error("row " + std::to_string(row) +
                             ": cannot parse number in column '" + column +
                             "': '" + s + "'");
  return v;
}

inline long long parse_int_field(const std::string& s, const std::string& column,
                                 std::size_t row) {
  long long v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size())
    throw std::runtime_error("row " + std::to_string(row) +
                             ": cannot parse integer in column '" + column +
                             "': '" + s + "'");
  return v;
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.push_back("");
  return out;
}

inline std::string sidecar_path(const std::string& csv_path) {
  const std::string suffix = ".csv";
  if (csv_path.size() > suffix.size() &&
      csv_path.compare(csv_path.size() - suffix.size(), suffix.size(), suffix) == 0)
    return csv_path.substr(0, csv_path.size() - suffix.size()) + ".space.json";
  return csv_path + ".space.json";
}

inline ParamSpace space_from_json(const nlohmann::json& j) {
  if (!j.contains("params") || !j["params"].is_array())
    throw std::runtime_error("space file: missing 'params' array");
  std::vector<ParamSpec> specs;
  for (const auto& p : j["params"]) {
    if (!p.contains("name") || !p.contains("kind"))
      throw std::runtime_error("space file: parameter entry needs 'name' and 'kind'");
    const std::string name = p["name"].get<std::string>();
    const std::string kind = p["kind"].get<std::string>();
    if (kind == "continuous") {
      specs.push_back(ParamSpec::continuous(name, p.at("lo").get<double>(),
                                            p.at("hi").get<double>()));
    } else if (kind == "integer") {
      specs.push_back(ParamSpec::integer(name, p.at("lo").get<long long>(),
                                         p.at("hi").get<long long>()));
    } else if (kind == "categorical") {
      specs.push_back(ParamSpec::categorical(
          name, p.at("levels").get<std::vector<std::string>>()));
    } else {
      throw std::runtime_error("space file: unknown kind '" + kind +
                               "' for parameter '" + name + "'");
    }
  }
  return ParamSpace(specs);
}

inline nlohmann::json space_to_json(const ParamSpace& space) {
  nlohmann::json params = nlohmann::json::array();
  for (const auto& spec : space.params()) {
    nlohmann::json p;
    p["name"] = spec.name;
    switch (spec.kind) {
      case ParamKind::continuous:
        p["kind"] = "continuous";
        p["lo"] = spec.lo;
        p["hi"] = spec.hi;
        break;
      case ParamKind::integer:
        p["kind"] = "integer";
        p["lo"] = static_cast<long long>(spec.lo);
        p["hi"] = static_cast<long long>(spec.hi);
        break;
      case ParamKind::categorical:
        p["kind"] = "categorical";
        p["levels"] = spec.levels;
        break;
    }
    params.push_back(p);
  }
  return nlohmann::json{{"params", params}};
}

}  // namespace detail

// CSV schema: header = parameter names in space order, then __performance and
// __runtime_seconds. The parameter space lives in a <stem>.space.json sidecar.
inline TabularBenchmark load_tabular(const std::string& csv_path) {
  std::ifstream space_in(detail::sidecar_path(csv_path));
  if (!space_in)
    throw std::runtime_error("cannot open space file " +
                             detail::sidecar_path(csv_path));
  nlohmann::json space_json;
  space_in >> space_json;

  TabularBenchmark bench;
  bench.space = detail::space_from_json(space_json);
  bench.name = csv_path;
  if (space_json.contains("name")) bench.name = space_json["name"].get<std::string>();

  std::ifstream in(csv_path);
  if (!in) throw std::runtime_error("cannot open benchmark file " + csv_path);

  std::string line;
  if (!std::getline(in, line))
    throw std::runtime_error("row 1: missing header row");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  std::vector<std::string> header = detail::split_csv_line(line);
  const std::size_t d = bench.space.size();
  if (header.size() != d + 2)
    throw std::runtime_error("row 1: header has " + std::to_string(header.size()) +
                             " columns, expected " + std::to_string(d + 2));
  for (std::size_t j = 0; j < d; ++j)
    if (header[j] != bench.space[j].name)
      throw std::runtime_error("row 1: header column " + std::to_string(j + 1) +
                               " is '" + header[j] + "', expected parameter '" +
                               bench.space[j].name + "'");
  if (header[d] != "__performance" || header[d + 1] != "__runtime_seconds")
    throw std::runtime_error(
        "row 1: trailing columns must be __performance,__runtime_seconds");

  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> fields = detail::split_csv_line(line);
    if (fields.size() != d + 2)
      throw std::runtime_error("row " + std::to_string(row) + ": has " +
                               std::to_string(fields.size()) +
                               " columns, expected " + std::to_string(d + 2));
    Configuration config;
    for (std::size_t j = 0; j < d; ++j) {
      const ParamSpec& spec = bench.space[j];
      switch (spec.kind) {
        case ParamKind::continuous:
          config.values.push_back(
              detail::parse_double_field(fields[j], spec.name, row));
          break;
        case ParamKind::integer:
          config.values.push_back(
              detail::parse_int_field(fields[j], spec.name, row));
          break;
        case ParamKind::categorical: {
          bool known = false;
          for (const auto& lvl : spec.levels) known = known || lvl == fields[j];
          if (!known)
            throw std::runtime_error("row " + std::to_string(row) +
                                     ": unknown categorical level '" + fields[j] +
                                     "' in column '" + spec.name + "'");
          config.values.push_back(fields[j]);
          break;
        }
      }
    }
    bench.space.validate(config);
    const double perf =
        detail::parse_double_field(fields[d], "__performance", row);
    if (!std::isfinite(perf))
      throw std::runtime_error("row " + std::to_string(row) +
                               ": non-finite performance");
    const double rt =
        detail::parse_double_field(fields[d + 1], "__runtime_seconds", row);
    auto [it, inserted] = bench.rows.try_emplace(config, perf, rt);
    if (!inserted) {
      std::cerr << "load_tabular: duplicate configuration at row " << row
                << ", keeping the later value\n";
      it->second = {perf, rt};
    } else {
      bench.configs.push_back(config);
    }
  }
  return bench;
}

inline void save_tabular(const TabularBenchmark& bench,
                         const std::string& csv_path) {
  auto check_plain = [](const std::string& s) {
    for (char c : s)
      if (c == ',' || c == '"' || c == '\n' || c == '\r')
        throw std::runtime_error("tabular format cannot hold '" + s + "'");
  };
  std::ofstream out(csv_path);
  if (!out) throw std::runtime_error("cannot write benchmark file " + csv_path);
  const std::size_t d = bench.space.size();
  for (std::size_t j = 0; j < d; ++j) {
    check_plain(bench.space[j].name);
    out << bench.space[j].name << ',';
  }
  out << "__performance,__runtime_seconds\n";
  for (const auto& config : bench.configs) {
    const auto& [perf, rt] = bench.rows.at(config);
    for (std::size_t j = 0; j < d; ++j) {
      const ParamValue& v = config.values[j];
      if (std::holds_alternative<double>(v))
        out << detail::format_double(std::get<double>(v));
      else if (std::holds_alternative<long long>(v))
        out << std::get<long long>(v);
      else {
        check_plain(std::get<std::string>(v));
        out << std::get<std::string>(v);
      }
      out << ',';
    }
    out << detail::format_double(perf) << ',' << detail::format_double(rt)
        << '\n';
  }
  nlohmann::json space_json = detail::space_to_json(bench.space);
  space_json["name"] = bench.name;
  std::ofstream space_out(detail::sidecar_path(csv_path));
  if (!space_out)
    throw std::runtime_error("cannot write space file " +
                             detail::sidecar_path(csv_path));
  space_out << space_json.dump(2) << '\n';
}

// Exact-lookup objective over a benchmark table; configurations outside the
// table fail the evaluation rather than interpolate.
class TabularObjective : public Objective {
 public:
  explicit TabularObjective(TabularBenchmark bench) : bench_(std::move(bench)) {}

  const ParamSpace& space() const override { return bench_.space; }
  std::string name() const override { return bench_.name; }
  const std::vector<Configuration>* finite_candidates() const override {
    return &bench_.configs;
  }

  std::pair<double, double> evaluate(const Configuration& config) override {
    auto it = bench_.rows.find(config);
    if (it == bench_.rows.end())
      throw EvaluationFailure("configuration not present in lookup table");
    return it->second;
  }

  const TabularBenchmark& benchmark() const { return bench_; }

 private:
  TabularBenchmark bench_;
};

}  // namespace cqopt
