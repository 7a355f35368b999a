#include "ateaudit/pattern_repair.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <unordered_map>

#include "ateaudit/rng.hpp"

namespace ateaudit {

double PredicateWeights::weight_of(const Predicate& p) const {
  auto it = cells.find({p.attr, p.value});
  if (it == cells.end()) return 1.0;
  return 1.0 + std::max(0.0, it->second.cumulative_shift) / scale;
}

void PredicateWeights::update(const Predicate& p, double shift) {
  Cell& c = cells[{p.attr, p.value}];
  c.cumulative_shift += shift;
  if (shift > 0) ++c.success_count;
}

std::vector<Index> pattern_eligible_attrs(const Dataset& d, const CausalQuery& q,
                                          bool allow_treatment) {
  std::vector<Index> attrs;
  for (Index a = 0; a < d.schema().size(); ++a) {
    const auto& at = d.schema().attrs[a];
    if (at.kind == AttrKind::NumericContinuous) continue;
    if (at.name == q.outcome) continue;
    if (at.name == q.treatment && !allow_treatment) continue;
    attrs.push_back(a);
  }
  if (attrs.empty())
    fail(Err::NoEligibleAttributes, "no categorical/binary attribute is pattern-eligible");
  return attrs;
}

std::vector<std::pair<Pattern, Index>> most_specific_groups(const Dataset& d,
                                                            const CausalQuery& q,
                                                            bool allow_treatment) {
  q.validate(d);
  const std::vector<Index> attrs = pattern_eligible_attrs(d, q, allow_treatment);

  // One pass: hash rows by their full assignment over the eligible attributes.
  std::map<std::vector<std::int32_t>, Index> counts;
  std::vector<std::int32_t> key(attrs.size());
  for (Index r = 0; r < d.n_rows(); ++r) {
    if (!d.alive(r)) continue;
    for (Index j = 0; j < attrs.size(); ++j) {
      const Column& c = d.col(attrs[j]);
      key[j] = c.kind == AttrKind::Categorical
                   ? c.codes[r]
                   : static_cast<std::int32_t>(c.num[static_cast<Eigen::Index>(r)]);
    }
    ++counts[key];
  }

  std::vector<std::pair<Pattern, Index>> out;
  out.reserve(counts.size());
  for (const auto& [k, cnt] : counts) {
    Pattern p;
    for (Index j = 0; j < attrs.size(); ++j) {
      const Column& c = d.col(attrs[j]);
      const std::string value = c.kind == AttrKind::Categorical
                                    ? c.labels[static_cast<Index>(k[j])]
                                    : std::to_string(k[j]);
      p.preds.push_back({d.schema().attrs[attrs[j]].name, value});
    }
    out.emplace_back(std::move(p), cnt);
  }
  std::sort(out.begin(), out.end(),
            [](const auto& a, const auto& b) { return a.first.key() < b.first.key(); });
  return out;
}

Pattern remove_predicate(const Pattern& p, const PredicateWeights& weights, std::mt19937_64& rng) {
  if (p.empty()) fail(Err::BadConfig, "cannot remove a predicate from an empty pattern");
  std::vector<double> w(p.preds.size());
  double total = 0.0;
  for (Index i = 0; i < p.preds.size(); ++i) {
    w[i] = weights.weight_of(p.preds[i]);
    total += w[i];
  }
  const double u = rand01(rng()) * total;
  double acc = 0.0;
  Index pick = p.preds.size() - 1;
  for (Index i = 0; i < p.preds.size(); ++i) {
    acc += w[i];
    if (u < acc) {
      pick = i;
      break;
    }
  }
  Pattern out;
  out.preds.reserve(p.preds.size() - 1);
  for (Index i = 0; i < p.preds.size(); ++i)
    if (i != pick) out.preds.push_back(p.preds[i]);
  return out;
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Evaluation {
  bool ok = false;      // false: removal not estimable (degenerate)
  double ate = 0.0;
};

struct WalkContext {
  const Dataset& d;
  const CausalQuery& q;
  const PatternRepairConfig& cfg;
  const AteEngine& eng;
  Index n_alive;
  std::unordered_map<std::string, Evaluation> cache;
  PredicateWeights weights;
  long evals = 0;

  Evaluation evaluate(const Pattern& p, const std::vector<Index>& ids) {
    const std::string key = p.key();
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
    Evaluation ev;
    try {
      const bool force_refit =
          static_cast<double>(ids.size()) > cfg.refit_fraction * static_cast<double>(n_alive);
      ev.ate = eng.probe_removed(ids, force_refit);
      ev.ok = true;
    } catch (const Error&) {
      ev.ok = false;
    }
    ++evals;
    cache.emplace(key, ev);
    if (cfg.eval_log && ev.ok)
      cfg.eval_log->push_back({p, ev.ate, static_cast<Index>(ids.size())});
    return ev;
  }
};

struct Best {
  bool has = false;
  double dist = 0.0;
  Index support = 0;
  Pattern pattern;
  double ate = 0.0;

  void offer(double dist_, Index support_, const Pattern& p, double ate_) {
    if (!has || dist_ < dist || (dist_ == dist && support_ < support)) {
      has = true;
      dist = dist_;
      support = support_;
      pattern = p;
      ate = ate_;
    }
  }
};

}  // namespace

namespace {

// Walk on a uniform sample; re-validate the winning pattern on the full data
// before committing.
RepairResult repair_pattern_sampled(Dataset& d, const CausalQuery& q,
                                    const PatternRepairConfig& cfg, AteEngine& eng,
                                    Clock::time_point t0);

}  // namespace

RepairResult repair_pattern(Dataset& d, const CausalQuery& q, const PatternRepairConfig& cfg,
                            AteEngine& eng) {
  const auto t0 = Clock::now();
  if (d.n_alive() > cfg.sample_threshold && cfg.sample_fraction < 1.0)
    return repair_pattern_sampled(d, q, cfg, eng, t0);
  const Index n0 = d.n_alive();
  RepairResult r;
  r.mode = "pattern";
  r.ate_before = r.ate_after = eng.ate();
  auto finish = [&](RepairStatus status) {
    r.status = status;
    r.hit_range = status == RepairStatus::Hit;
    r.wall_time = seconds_since(t0);
    return r;
  };
  if (q.in_range(r.ate_before)) {
    r.pattern = Pattern{};
    return finish(RepairStatus::Hit);
  }

  auto groups = most_specific_groups(d, q, cfg.patterns_may_use_treatment);
  WalkContext ctx{d, q, cfg, eng, n0, {}, {}, 0};
  ctx.weights.scale = std::max(q.epsilon, 1e-12);
  std::mt19937_64 rng(cfg.seed);
  Best best;
  long step_no = 0;

  for (int walk = 0; walk < cfg.k_walks; ++walk) {
    if (seconds_since(t0) > cfg.time_limit_s) break;
    Pattern psi = groups[static_cast<Index>(rand01(rng()) * static_cast<double>(groups.size()))].first;
    std::optional<double> last_v;
    std::optional<Predicate> dropped;
    while (true) {
      std::vector<Index> ids = satisfies(d, psi);
      if (static_cast<double>(ids.size()) > cfg.tau * static_cast<double>(n0)) break;
      Evaluation ev = ctx.evaluate(psi, ids);
      ++step_no;
      r.trace.push_back({step_no, ev.ok ? ev.ate : r.ate_before,
                         "walk " + std::to_string(walk + 1) + " eval " + psi.display() +
                             " support=" + std::to_string(ids.size()) +
                             (ev.ok ? "" : " (not estimable)")});
      if (!ev.ok) break;  // ascent only grows the pattern's support
      if (dropped && last_v)
        ctx.weights.update(*dropped, std::abs(*last_v - q.target) - std::abs(ev.ate - q.target));
      last_v = ev.ate;
      best.offer(std::abs(ev.ate - q.target), ids.size(), psi, ev.ate);
      if (q.in_range(ev.ate)) {
        // Confirm with a full refit before committing.
        double confirmed;
        try {
          confirmed = eng.probe_removed(ids, /*force_refit=*/true);
        } catch (const Error&) {
          ctx.cache[psi.key()] = {false, 0.0};
          break;
        }
        if (q.in_range(confirmed)) {
          eng.apply_removed(ids);
          d.delete_rows(ids);
          r.pattern = psi;
          r.removed_count = ids.size();
          r.removed_fraction = n0 ? static_cast<double>(ids.size()) / static_cast<double>(n0) : 0.0;
          r.ate_after = eng.ate();
          return finish(RepairStatus::Hit);
        }
        ctx.cache[psi.key()] = {true, confirmed};
        last_v = confirmed;
      }
      if (psi.size() <= 1) break;  // next step would be the empty pattern
      Pattern next = remove_predicate(psi, ctx.weights, rng);
      for (const auto& pr : psi.preds) {
        bool kept = false;
        for (const auto& npr : next.preds) kept = kept || npr == pr;
        if (!kept) {
          dropped = pr;
          break;
        }
      }
      psi = std::move(next);
    }
  }

  const bool timed_out = seconds_since(t0) > cfg.time_limit_s;
  if (best.has) {
    r.pattern = best.pattern;
    r.removed_count = best.support;
    r.removed_fraction = n0 ? static_cast<double>(best.support) / static_cast<double>(n0) : 0.0;
    r.ate_after = best.ate;
  }
  return finish(timed_out ? RepairStatus::TimeLimit : RepairStatus::NoSolutionFound);
}

namespace {

RepairResult repair_pattern_sampled(Dataset& d, const CausalQuery& q,
                                    const PatternRepairConfig& cfg, AteEngine& eng,
                                    Clock::time_point t0) {
  const Index n0 = d.n_alive();
  std::mt19937_64 rng(cfg.seed);
  std::vector<Index> rows = d.alive_rows();
  const Index take = std::max<Index>(
      1, static_cast<Index>(std::llround(cfg.sample_fraction * static_cast<double>(rows.size()))));
  std::vector<Index> chosen = sample_without_replacement(std::move(rows), take, rng);
  std::sort(chosen.begin(), chosen.end());
  Dataset sub = d.subset(chosen);

  PatternRepairConfig sub_cfg = cfg;
  sub_cfg.sample_threshold = std::numeric_limits<Index>::max();
  AteEngine sub_eng(sub, q, eng.options());
  RepairResult sub_r = repair_pattern(sub, q, sub_cfg, sub_eng);

  RepairResult r;
  r.mode = "pattern";
  r.ate_before = eng.ate();
  r.trace = std::move(sub_r.trace);
  r.pattern = sub_r.pattern;
  r.ate_after = r.ate_before;
  r.status = sub_r.status;
  auto done = [&](RepairStatus status) {
    r.status = status;
    r.hit_range = status == RepairStatus::Hit;
    r.wall_time = seconds_since(t0);
    return r;
  };
  if (!sub_r.hit_range || !sub_r.pattern) return done(sub_r.status);

  // Re-validate the sample's winning pattern on the full data.
  std::vector<Index> ids = satisfies(d, *sub_r.pattern);
  r.removed_count = ids.size();
  r.removed_fraction = n0 ? static_cast<double>(ids.size()) / static_cast<double>(n0) : 0.0;
  double confirmed;
  try {
    confirmed = eng.probe_removed(ids, /*force_refit=*/true);
  } catch (const Error&) {
    return done(RepairStatus::NoSolutionFound);
  }
  r.ate_after = confirmed;
  r.trace.push_back({static_cast<long>(r.trace.size() + 1), confirmed,
                     "full-data validation of " + sub_r.pattern->display() + " support=" +
                         std::to_string(ids.size())});
  if (!q.in_range(confirmed)) return done(RepairStatus::NoSolutionFound);
  eng.apply_removed(ids);
  d.delete_rows(ids);
  r.ate_after = eng.ate();
  return done(RepairStatus::Hit);
}

}  // namespace

}  // namespace ateaudit
