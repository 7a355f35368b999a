#include "ateaudit/repair_result.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <nlohmann/json.hpp>

namespace ateaudit {

const char* status_name(RepairStatus s) {
  switch (s) {
    case RepairStatus::Hit: return "Hit";
    case RepairStatus::NoProgress: return "NoProgress";
    case RepairStatus::BudgetExhausted: return "BudgetExhausted";
    case RepairStatus::TimeLimit: return "TimeLimit";
    case RepairStatus::NoSolutionFound: return "NoSolutionFound";
  }
  return "Unknown";
}

std::string to_json(const RepairResult& r, int indent) {
  nlohmann::json j;
  j["mode"] = r.mode;
  if (r.pattern) {
    nlohmann::json preds = nlohmann::json::array();
    std::vector<Predicate> sorted = r.pattern->preds;
    std::sort(sorted.begin(), sorted.end(),
              [](const Predicate& a, const Predicate& b) { return a.attr < b.attr; });
    for (const auto& p : sorted) preds.push_back({{"attribute", p.attr}, {"value", p.value}});
    j["pattern"] = preds;
  } else {
    j["removed_ids"] = r.removed_ids;
  }
  j["removed_count"] = r.removed_count;
  j["removed_fraction"] = r.removed_fraction;
  j["ate_before"] = r.ate_before;
  j["ate_after"] = r.ate_after;
  j["hit_range"] = r.hit_range;
  nlohmann::json trace = nlohmann::json::array();
  for (const auto& t : r.trace)
    trace.push_back({{"iteration", t.iteration}, {"ate", t.ate}, {"action", t.action}});
  j["trace"] = trace;
  j["wall_time"] = r.wall_time;
  return j.dump(indent);
}

std::string format_shift(double before, double after) {
  std::ostringstream os;
  os.precision(6);
  os << "ATE " << before << " -> " << after;
  if (before != 0.0) {
    const double pct = std::abs(after - before) / std::abs(before) * 100.0;
    os.precision(3);
    os << " (" << (after >= before ? "up " : "down ") << pct << "%)";
  }
  return os.str();
}

}  // namespace ateaudit
