#pragma once

#include <optional>

#include "ateaudit/engine.hpp"

namespace ateaudit {

struct OptTupleResult {
  bool found = false;
  std::vector<Index> removed_ids;  // ascending; empty when the baseline already lands
  double ate_after = 0.0;
  long evaluations = 0;  // subsets probed
};

// Exhaustive minimum-cardinality removal set. Enumerates subsets of the alive
// rows in increasing cardinality (lexicographic within a cardinality) and
// probes each by refit, so the first hit is optimal. Subsets that make the
// estimate undefined (an arm emptied, rank lost) are skipped. Refuses inputs
// with more than `max_rows` alive rows (TooLarge); raise the cap explicitly
// if you really mean it. The dataset is only probed, never mutated.
OptTupleResult opt_tuple(const Dataset& d, const CausalQuery& q, const EngineOptions& opt,
                         Index max_rows = 30,
                         std::optional<Index> max_cardinality = std::nullopt);

struct OptPatternResult {
  bool found = false;
  Pattern pattern;
  Index support = 0;
  double ate_after = 0.0;
  long evaluations = 0;  // patterns probed
};

// Exhaustive minimum-support pattern. Enumerates every conjunction of
// equality predicates over the pattern-eligible attributes (each attribute
// either absent or pinned to one of its observed values) and probes the
// removal of the matching rows by refit. Ties on support keep the first
// pattern in enumeration order. Refuses pattern spaces larger than
// `space_limit` combinations (TooLarge). The dataset is never mutated.
OptPatternResult opt_pattern(const Dataset& d, const CausalQuery& q, const EngineOptions& opt,
                             bool allow_treatment = false, long space_limit = 1000000);

}  // namespace ateaudit
