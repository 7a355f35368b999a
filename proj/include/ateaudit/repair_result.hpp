#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ateaudit/dataset.hpp"

namespace ateaudit {

enum class RepairStatus {
  Hit,              // ATE landed in the target interval
  NoProgress,       // no move with positive gain after consecutive rescores
  BudgetExhausted,  // removal cap reached
  TimeLimit,        // wall-clock limit reached
  NoSolutionFound,  // walk budget exhausted (pattern mode)
};

const char* status_name(RepairStatus s);

struct TraceEntry {
  long iteration = 0;
  double ate = 0.0;
  std::string action;
};

struct RepairResult {
  std::string mode;                    // "tuple" | "tuple-single-update" | "pattern"
  std::vector<Index> removed_ids;      // tuple modes; committed removals
  std::optional<Pattern> pattern;      // pattern mode; proposed or committed
  Index removed_count = 0;
  double removed_fraction = 0.0;
  double ate_before = 0.0;
  double ate_after = 0.0;
  bool hit_range = false;
  std::vector<TraceEntry> trace;
  double wall_time = 0.0;              // seconds
  RepairStatus status = RepairStatus::NoSolutionFound;  // not serialized
};

// JSON with fields mode, removed_ids | pattern, removed_count,
// removed_fraction, ate_before, ate_after, hit_range, trace, wall_time.
std::string to_json(const RepairResult& r, int indent = 2);

// Human one-liner: percent shift of the estimate with a direction arrow,
// e.g. "ATE 2.41 -> 0.11 (down 95.4%)".
std::string format_shift(double before, double after);

}  // namespace ateaudit
