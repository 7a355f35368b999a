#include "ateaudit/opt.hpp"

#include <algorithm>
#include <functional>
#include <set>
#include <string>

#include "ateaudit/pattern_repair.hpp"

namespace ateaudit {

OptTupleResult opt_tuple(const Dataset& d, const CausalQuery& q, const EngineOptions& opt,
                         Index max_rows, std::optional<Index> max_cardinality) {
  q.validate(d);
  const std::vector<Index> alive = d.alive_rows();
  if (alive.size() > max_rows)
    fail(Err::TooLarge, "exhaustive tuple search capped at " + std::to_string(max_rows) +
                            " rows, got " + std::to_string(alive.size()));

  AteEngine eng(d, q, opt);
  OptTupleResult res;
  if (q.in_range(eng.ate())) {
    res.found = true;
    res.ate_after = eng.ate();
    return res;
  }

  const Index n = alive.size();
  // Removing every row can never leave an estimable dataset.
  Index cap = n == 0 ? 0 : n - 1;
  if (max_cardinality) cap = std::min(cap, *max_cardinality);

  std::vector<Index> pick;  // positions into `alive`, strictly increasing
  std::vector<Index> ids;
  std::function<bool(Index, Index)> descend = [&](Index start, Index need) -> bool {
    if (need == 0) {
      ids.clear();
      for (Index i : pick) ids.push_back(alive[i]);
      ++res.evaluations;
      try {
        const double a = eng.probe_removed(ids, /*force_refit=*/true);
        if (q.in_range(a)) {
          res.found = true;
          res.removed_ids = ids;
          res.ate_after = a;
          return true;
        }
      } catch (const Error&) {
        // removal not estimable — skip the subset
      }
      return false;
    }
    for (Index i = start; i + need <= n; ++i) {
      pick.push_back(i);
      if (descend(i + 1, need - 1)) return true;
      pick.pop_back();
    }
    return false;
  };

  for (Index c = 1; c <= cap; ++c) {
    pick.clear();
    if (descend(0, c)) break;
  }
  return res;
}

OptPatternResult opt_pattern(const Dataset& d, const CausalQuery& q, const EngineOptions& opt,
                             bool allow_treatment, long space_limit) {
  q.validate(d);
  const std::vector<Index> attrs = pattern_eligible_attrs(d, q, allow_treatment);

  // Observed value domain per eligible attribute, as predicate strings.
  std::vector<std::vector<std::string>> domain(attrs.size());
  for (Index j = 0; j < attrs.size(); ++j) {
    const Column& c = d.col(attrs[j]);
    if (c.kind == AttrKind::Categorical) {
      std::set<std::int32_t> seen;
      for (Index r = 0; r < d.n_rows(); ++r)
        if (d.alive(r)) seen.insert(c.codes[r]);
      for (std::int32_t code : seen) domain[j].push_back(c.labels[code]);
      std::sort(domain[j].begin(), domain[j].end());
    } else {
      bool has0 = false, has1 = false;
      for (Index r = 0; r < d.n_rows(); ++r) {
        if (!d.alive(r)) continue;
        (c.num[static_cast<Eigen::Index>(r)] == 0.0 ? has0 : has1) = true;
      }
      if (has0) domain[j].push_back("0");
      if (has1) domain[j].push_back("1");
    }
  }

  long space = 1;
  for (const auto& dom : domain) {
    space *= static_cast<long>(dom.size()) + 1;
    if (space > space_limit)
      fail(Err::TooLarge, "pattern space exceeds " + std::to_string(space_limit) +
                              " combinations; reduce attributes or raise the cap");
  }

  AteEngine eng(d, q, opt);
  OptPatternResult res;
  if (q.in_range(eng.ate())) {
    res.found = true;
    res.ate_after = eng.ate();
    return res;
  }

  const Index n_alive = d.n_alive();
  // Mixed-radix counter over (|domain_j| + 1) per attribute; digit 0 = attribute
  // absent. Starts past the all-absent combination.
  std::vector<std::size_t> digit(attrs.size(), 0);
  while (true) {
    std::size_t pos = 0;
    while (pos < digit.size()) {
      if (++digit[pos] <= domain[pos].size()) break;
      digit[pos] = 0;
      ++pos;
    }
    if (pos == digit.size()) break;  // wrapped around: space exhausted

    Pattern psi;
    for (Index j = 0; j < attrs.size(); ++j)
      if (digit[j] > 0)
        psi.preds.push_back({d.schema().attrs[attrs[j]].name, domain[j][digit[j] - 1]});

    const std::vector<Index> rows = satisfies(d, psi);
    if (rows.empty() || rows.size() == n_alive) continue;
    if (res.found && rows.size() >= res.support) continue;  // cannot improve
    ++res.evaluations;
    try {
      const double a = eng.probe_removed(rows, /*force_refit=*/true);
      if (q.in_range(a)) {
        res.found = true;
        res.pattern = psi;
        res.support = rows.size();
        res.ate_after = a;
      }
    } catch (const Error&) {
      // removal not estimable — skip the pattern
    }
  }
  return res;
}

}  // namespace ateaudit
