#pragma once

#include <cstdint>
#include <map>
#include <random>

#include "ateaudit/engine.hpp"
#include "ateaudit/repair_result.hpp"

namespace ateaudit {

// One fresh pattern evaluation during a walk (cache misses only; a pattern
// revisited later is served from the cache and not re-logged).
struct PatternEval {
  Pattern pattern;
  double ate = 0.0;
  Index support = 0;
};

struct PatternRepairConfig {
  std::uint64_t seed = 42;
  int k_walks = 1000;            // upward walks before giving up
  double tau = 0.20;             // abort a walk once support exceeds tau * n
  double refit_fraction = 0.05;  // probe by refit when support exceeds this share
  bool patterns_may_use_treatment = false;
  double time_limit_s = 36000.0;
  // Large inputs: walk on a uniform sample, re-validate candidates on the full data.
  Index sample_threshold = 500000;
  double sample_fraction = 0.10;
  // Debugging hook: when set, every fresh estimable evaluation is appended.
  std::vector<PatternEval>* eval_log = nullptr;
};

// Per-predicate walk guidance. A predicate accumulates the signed ATE
// movement toward the target observed whenever dropping it produced the next
// evaluated pattern; its sampling weight is 1 + max(0, cumulative_shift)/scale
// so cold-start walks are uniform.
struct PredicateWeights {
  struct Cell {
    long success_count = 0;
    double cumulative_shift = 0.0;
  };
  double scale = 1.0;
  std::map<std::pair<std::string, std::string>, Cell> cells;

  double weight_of(const Predicate& p) const;
  void update(const Predicate& p, double shift);
};

// Attribute indices a pattern may mention: categorical or binary, never the
// outcome, and not the treatment unless allowed. Throws NoEligibleAttributes
// when no attribute qualifies.
std::vector<Index> pattern_eligible_attrs(const Dataset& d, const CausalQuery& q,
                                          bool allow_treatment = false);

// Distinct full assignments over the pattern-eligible attributes among alive
// rows, with supports. Sorted by pattern key. Throws NoEligibleAttributes
// when no attribute qualifies.
std::vector<std::pair<Pattern, Index>> most_specific_groups(const Dataset& d,
                                                            const CausalQuery& q,
                                                            bool allow_treatment = false);

// Drops one predicate at random, weighted by `weights`.
Pattern remove_predicate(const Pattern& p, const PredicateWeights& weights, std::mt19937_64& rng);

// Random upward walks from most-specific groups toward the empty pattern,
// probing each visited pattern's removal effect from the baseline state
// (Woodbury block downdate, refit beyond refit_fraction), with an ATE cache
// keyed by canonical pattern. On a hit the pattern's tuples are deleted from
// `d`; otherwise the dataset is left untouched and the best-effort pattern
// (closest ATE, then smallest support) is reported with hit_range = false.
RepairResult repair_pattern(Dataset& d, const CausalQuery& q, const PatternRepairConfig& cfg,
                            AteEngine& eng);

}  // namespace ateaudit
