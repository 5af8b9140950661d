#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <variant>
#include <vector>

namespace cqopt {

enum class ParamKind { continuous, integer, categorical };

struct ParamSpec {
  std::string name;
  ParamKind kind = ParamKind::continuous;
  double lo = 0.0;   // numeric kinds; integral values for integer params
  double hi = 0.0;
  std::vector<std::string> levels;  // categorical only

  static ParamSpec continuous(std::string name, double lo, double hi) {
    ParamSpec s;
    s.name = std::move(name);
    s.kind = ParamKind::continuous;
    s.lo = lo;
    s.hi = hi;
    return s;
  }

  static ParamSpec integer(std::string name, long long lo, long long hi) {
    ParamSpec s;
    s.name = std::move(name);
    s.kind = ParamKind::integer;
    s.lo = static_cast<double>(lo);
    s.hi = static_cast<double>(hi);
    return s;
  }

  static ParamSpec categorical(std::string name, std::vector<std::string> levels) {
    ParamSpec s;
    s.name = std::move(name);
    s.kind = ParamKind::categorical;
    s.levels = std::move(levels);
    return s;
  }

  std::size_t level_index(const std::string& value) const {
    for (std::size_t i = 0; i < levels.size(); ++i)
      if (levels[i] == value) return i;
    throw std::invalid_argument("unknown categorical level '" + value +
                                "' for parameter '" + name + "'");
  }
};

using ParamValue = std::variant<double, long long, std::string>;

struct Configuration {
  std::vector<ParamValue> values;  // positional, aligned with ParamSpace

  bool operator==(const Configuration& other) const = default;
};

class ParamSpace {
 public:
  ParamSpace() = default;

  explicit ParamSpace(std::vector<ParamSpec> params) : params_(std::move(params)) {
    std::unordered_set<std::string> seen;
    for (const auto& p : params_) {
      if (p.name.empty())
        throw std::invalid_argument("parameter name must be non-empty");
      if (!seen.insert(p.name).second)
        throw std::invalid_argument("duplicate parameter name '" + p.name + "'");
      switch (p.kind) {
        case ParamKind::continuous:
          if (!(p.lo < p.hi))
            throw std::invalid_argument("parameter '" + p.name +
                                        "': lower bound must be below upper");
          break;
        case ParamKind::integer:
          if (!(p.lo <= p.hi))
            throw std::invalid_argument("parameter '" + p.name +
                                        "': lower bound must not exceed upper");
          if (p.lo != std::floor(p.lo) || p.hi != std::floor(p.hi))
            throw std::invalid_argument("parameter '" + p.name +
                                        "': integer bounds must be integral");
          break;
        case ParamKind::categorical:
          if (p.levels.size() < 2)
            throw std::invalid_argument("parameter '" + p.name +
                                        "': needs at least two levels");
          {
            std::unordered_set<std::string> lv(p.levels.begin(), p.levels.end());
            if (lv.size() != p.levels.size())
              throw std::invalid_argument("parameter '" + p.name +
                                          "': duplicate levels");
          }
          break;
      }
    }
  }

  const std::vector<ParamSpec>& params() const { return params_; }
  std::size_t size() const { return params_.size(); }
  const ParamSpec& operator[](std::size_t i) const { return params_[i]; }

  std::size_t index_of(const std::string& name) const {
    for (std::size_t i = 0; i < params_.size(); ++i)
      if (params_[i].name == name) return i;
    throw std::invalid_argument("unknown parameter '" + name + "'");
  }

  // True when every parameter takes finitely many values.
  bool is_finite() const {
    for (const auto& p : params_)
      if (p.kind == ParamKind::continuous) return false;
    return true;
  }

  // Number of distinct configurations in a finite space; saturates at cap.
  std::uint64_t finite_cardinality(std::uint64_t cap = 1u << 22) const {
    if (!is_finite()) throw std::logic_error("space is not finite");
    std::uint64_t total = 1;
    for (const auto& p : params_) {
      std::uint64_t card = p.kind == ParamKind::integer
                               ? static_cast<std::uint64_t>(p.hi - p.lo) + 1
                               : p.levels.size();
      if (total > cap / card) return cap;
      total *= card;
    }
    return total;
  }

  void validate(const Configuration& config) const {
    if (config.values.size() != params_.size())
      throw std::invalid_argument("configuration has " +
                                  std::to_string(config.values.size()) +
                                  " values, expected " +
                                  std::to_string(params_.size()));
    for (std::size_t i = 0; i < params_.size(); ++i) {
      const auto& p = params_[i];
      const auto& v = config.values[i];
      switch (p.kind) {
        case ParamKind::continuous: {
          const double* x = std::get_if<double>(&v);
          if (!x)
            throw std::invalid_argument("parameter '" + p.name +
                                        "': expected a real value");
          if (!(*x >= p.lo && *x <= p.hi) || !std::isfinite(*x))
            throw std::invalid_argument("parameter '" + p.name +
                                        "': value out of bounds");
          break;
        }
        case ParamKind::integer: {
          const long long* x = std::get_if<long long>(&v);
          if (!x)
            throw std::invalid_argument("parameter '" + p.name +
                                        "': expected an integer value");
          if (*x < static_cast<long long>(p.lo) || *x > static_cast<long long>(p.hi))
            throw std::invalid_argument("parameter '" + p.name +
                                        "': value out of bounds");
          break;
        }
        case ParamKind::categorical: {
          const std::string* x = std::get_if<std::string>(&v);
          if (!x)
            throw std::invalid_argument("parameter '" + p.name +
                                        "': expected a categorical level");
          p.level_index(*x);  // throws on unknown level
          break;
        }
      }
    }
  }

  // Enumerates every configuration of a finite space in lexicographic order.
  std::vector<Configuration> enumerate(std::uint64_t cap = 1u << 22) const {
    if (!is_finite()) throw std::logic_error("space is not finite");
    std::uint64_t total = finite_cardinality(cap);
    if (total >= cap)
      throw std::runtime_error("finite space too large to enumerate");
    std::vector<Configuration> out;
    out.reserve(total);
    Configuration cur;
    cur.values.resize(params_.size());
    enumerate_rec(0, cur, out);
    return out;
  }

 private:
  void enumerate_rec(std::size_t depth, Configuration& cur,
                     std::vector<Configuration>& out) const {
    if (depth == params_.size()) {
      out.push_back(cur);
      return;
    }
    const auto& p = params_[depth];
    if (p.kind == ParamKind::integer) {
      for (long long v = static_cast<long long>(p.lo);
           v <= static_cast<long long>(p.hi); ++v) {
        cur.values[depth] = v;
        enumerate_rec(depth + 1, cur, out);
      }
    } else {
      for (const auto& lv : p.levels) {
        cur.values[depth] = lv;
        enumerate_rec(depth + 1, cur, out);
      }
    }
  }

  std::vector<ParamSpec> params_;
};

struct ConfigurationHash {
  std::size_t operator()(const Configuration& c) const {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    auto mix = [&h](std::uint64_t v) {
      h ^= v;
      h *= 0x100000001b3ULL;
      h ^= h >> 29;
    };
    for (const auto& v : c.values) {
      mix(v.index());
      if (const double* d = std::get_if<double>(&v)) {
        double x = (*d == 0.0) ? 0.0 : *d;  // collapse -0.0
        std::uint64_t bits;
        static_assert(sizeof(bits) == sizeof(x));
        __builtin_memcpy(&bits, &x, sizeof(bits));
        mix(bits);
      } else if (const long long* i = std::get_if<long long>(&v)) {
        mix(static_cast<std::uint64_t>(*i));
      } else {
        for (char ch : std::get<std::string>(v))
          mix(static_cast<std::uint64_t>(static_cast<unsigned char>(ch)));
        mix(0xffULL);
      }
    }
    return static_cast<std::size_t>(h);
  }
};

}  // namespace cqopt
