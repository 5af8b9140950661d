#pragma once

#include <unordered_set>
#include <vector>

#include "cqopt/core/param_space.hpp"
#include "cqopt/core/rng.hpp"

namespace cqopt {

inline Configuration sample_uniform(const ParamSpace& space, Rng& rng) {
  Configuration c;
  c.values.reserve(space.size());
  for (const auto& p : space.params()) {
    switch (p.kind) {
      case ParamKind::continuous:
        c.values.emplace_back(rng.uniform(p.lo, p.hi));
        break;
      case ParamKind::integer:
        c.values.emplace_back(rng.uniform_int(static_cast<long long>(p.lo),
                                              static_cast<long long>(p.hi)));
        break;
      case ParamKind::categorical:
        c.values.emplace_back(p.levels[rng.uniform_index(p.levels.size())]);
        break;
    }
  }
  return c;
}

// Draws up to n distinct configurations not present in `history`. Small
// finite spaces are enumerated instead of rejection-sampled, so exhaustion
// yields every remaining configuration; the result may hold fewer than n.
inline std::vector<Configuration> sample_candidates(
    const ParamSpace& space, std::size_t n, Rng& rng,
    const std::vector<Configuration>& history = {}) {
  std::unordered_set<Configuration, ConfigurationHash> seen(history.begin(),
                                                            history.end());
  std::vector<Configuration> out;
  out.reserve(n);

  if (space.is_finite() && space.finite_cardinality(8 * n + 64) <= 4 * n) {
    std::vector<Configuration> all = space.enumerate();
    std::vector<Configuration> fresh;
    fresh.reserve(all.size());
    for (auto& c : all)
      if (!seen.count(c)) fresh.push_back(std::move(c));
    rng.shuffle(fresh);
    if (fresh.size() > n) fresh.resize(n);
    return fresh;
  }

  std::size_t attempts = 0;
  const std::size_t max_attempts = 64 * n + 1024;
  while (out.size() < n && attempts < max_attempts) {
    ++attempts;
    Configuration c = sample_uniform(space, rng);
    if (seen.insert(c).second) out.push_back(std::move(c));
  }
  return out;
}

}  // namespace cqopt
