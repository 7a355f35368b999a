#include "ateaudit/tuple_repair.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <random>

#include "ateaudit/kmeans.hpp"

namespace ateaudit {

int default_cluster_count(Index n_alive) {
  const double n = static_cast<double>(n_alive);
  const double k = std::max(5.0, std::min(std::floor(std::sqrt(n)), std::floor(n / 10.0)));
  return static_cast<int>(std::clamp(k, 1.0, n));
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

// Influence estimates carry rounding noise from the rank-one updates, so a
// mathematically useless removal can score a hair above zero. Gains must clear
// this relative floor to count as progress.
constexpr double kGainFloor = 1e-12;

double gain_floor(double ate) { return kGainFloor * (1.0 + std::abs(ate)); }

}  // namespace

ClusterIndex build_cluster_index(const Dataset& d, const CausalQuery& q, const AteEngine& eng,
                                 const TupleRepairConfig& cfg) {
  std::vector<Index> rows = d.alive_rows();
  if (rows.empty()) fail(Err::DegenerateGroups, "no alive rows to cluster");
  Eigen::MatrixXd F = standardized_features(d, q, rows);
  const int k = cfg.k ? std::min<int>(*cfg.k, static_cast<int>(rows.size()))
                      : default_cluster_count(rows.size());
  KmeansResult km = kmeans(F, k, cfg.seed);

  ClusterIndex idx;
  idx.k = km.k;
  idx.members.assign(km.k, {});
  idx.reps.assign(km.k, {});
  for (Index i = 0; i < rows.size(); ++i) {
    idx.members[km.assign[i]].push_back(rows[i]);
    idx.cluster_of[rows[i]] = km.assign[i];
  }

  // Representatives: closest to centroid, then distance percentiles.
  const int s = std::max(1, cfg.reps_per_cluster);
  for (int c = 0; c < km.k; ++c) {
    std::vector<std::pair<double, Index>> by_dist;  // (distance, id), id breaks ties
    for (Index i = 0; i < rows.size(); ++i) {
      if (km.assign[i] != c) continue;
      by_dist.emplace_back((F.row(static_cast<Eigen::Index>(i)) - km.centroids.row(c)).norm(),
                           rows[i]);
    }
    std::sort(by_dist.begin(), by_dist.end());
    const Index sz = by_dist.size();
    if (sz <= static_cast<Index>(s)) {
      for (auto& [dist, id] : by_dist) idx.reps[c].push_back(id);
    } else {
      std::vector<Index> picks{0};
      const int extras = s - 1;
      for (int e = 0; e < extras; ++e) {
        const double pct = extras == 1 ? 0.75 : 0.25 + 0.5 * e / (extras - 1);
        picks.push_back(static_cast<Index>(std::llround(pct * static_cast<double>(sz - 1))));
      }
      std::sort(picks.begin(), picks.end());
      picks.erase(std::unique(picks.begin(), picks.end()), picks.end());
      for (Index p : picks) idx.reps[c].push_back(by_dist[p].second);
    }
    // Map non-reps to their nearest in-cluster representative (feature space).
    std::vector<Eigen::Index> rep_pos;
    for (Index i = 0; i < rows.size(); ++i)
      if (km.assign[i] == c &&
          std::find(idx.reps[c].begin(), idx.reps[c].end(), rows[i]) != idx.reps[c].end())
        rep_pos.push_back(static_cast<Eigen::Index>(i));
    for (Index i = 0; i < rows.size(); ++i) {
      if (km.assign[i] != c) continue;
      if (std::find(idx.reps[c].begin(), idx.reps[c].end(), rows[i]) != idx.reps[c].end())
        continue;
      double best = std::numeric_limits<double>::infinity();
      Index best_rep = idx.reps[c].front();
      for (Eigen::Index rp : rep_pos) {
        const double dist = (F.row(static_cast<Eigen::Index>(i)) - F.row(rp)).norm();
        if (dist < best) {
          best = dist;
          best_rep = rows[static_cast<Index>(rp)];
        }
      }
      idx.rep_assignment[rows[i]] = best_rep;
    }
  }

  for (const auto& reps : idx.reps)
    for (Index id : reps) {
      try {
        idx.rep_influence[id] = influence(eng, id);
      } catch (const Error&) {
        // Tuple whose removal degenerates the fit: leave unscored.
      }
    }
  return idx;
}

namespace {

struct Scored {
  double influence = 0.0;
  long stamp = 0;  // rescore round that produced the value
};

struct SearchState {
  Dataset& d;
  AteEngine& eng;
  const CausalQuery& q;
  const TupleRepairConfig& cfg;
  ClusterIndex idx;
  std::unordered_map<Index, Scored> scores;
  std::vector<std::vector<Index>> sample;  // per cluster: ids sampled at last rescore
  std::mt19937_64 rng;
  long round = 0;

  SearchState(Dataset& d_, AteEngine& e_, const CausalQuery& q_, const TupleRepairConfig& c_)
      : d(d_), eng(e_), q(q_), cfg(c_), rng(c_.seed) {}

  void prime() {
    idx = build_cluster_index(d, q, eng, cfg);
    sample.assign(idx.k, {});
    for (const auto& [id, infl] : idx.rep_influence) scores[id] = {infl, 0};
  }

  // Fresh per-cluster samples; refreshed scores overwrite only sampled ids.
  void rescore() {
    ++round;
    for (int c = 0; c < idx.k; ++c) {
      std::vector<Index> alive;
      for (Index id : idx.members[c])
        if (d.alive(id)) alive.push_back(id);
      sample[c] = sample_without_replacement(std::move(alive),
                                             static_cast<Index>(cfg.samples_per_cluster), rng);
      std::sort(sample[c].begin(), sample[c].end());
      for (Index id : sample[c]) {
        try {
          scores[id] = {influence(eng, id), round};
        } catch (const Error&) {
          scores.erase(id);
        }
      }
    }
  }

  // Best move under the current direction: the highest-gain candidate among
  // every scored alive row. Scores accumulate across rescores, so coverage
  // widens as the search runs; ties prefer the lower id so runs are
  // reproducible regardless of map iteration order. Returns (id, gain).
  std::optional<std::pair<Index, double>> select(double toward) const {
    Index best_id = 0;
    double best_gain = 0.0;
    bool found = false;
    for (const auto& [id, sc] : scores) {
      if (!d.alive(id)) continue;
      const double gain = sc.influence * toward;
      if (!found || gain > best_gain || (gain == best_gain && id < best_id)) {
        best_id = id;
        best_gain = gain;
        found = true;
      }
    }
    if (!found) return std::nullopt;
    return std::make_pair(best_id, best_gain);
  }
};

RepairResult finish(RepairResult r, RepairStatus status, Index n0, Clock::time_point t0) {
  r.status = status;
  r.hit_range = status == RepairStatus::Hit;
  r.removed_count = r.removed_ids.size();
  r.removed_fraction = n0 ? static_cast<double>(r.removed_count) / static_cast<double>(n0) : 0.0;
  r.wall_time = seconds_since(t0);
  return r;
}

RepairResult repair_tuples_core(Dataset& d, const CausalQuery& q, const TupleRepairConfig& cfg,
                                AteEngine& eng, Clock::time_point t0) {
  const Index n0 = d.n_alive();
  const Index cap = cfg.max_removals
                        ? *cfg.max_removals
                        : static_cast<Index>(std::ceil(0.2 * static_cast<double>(n0)));
  RepairResult r;
  r.mode = "tuple";
  r.ate_before = r.ate_after = eng.ate();
  if (q.in_range(r.ate_before)) return finish(std::move(r), RepairStatus::Hit, n0, t0);

  SearchState st(d, eng, q, cfg);
  st.prime();

  int fruitless = 0;
  bool fresh = false;
  long iter = 0;
  while (true) {
    ++iter;
    if (seconds_since(t0) > cfg.time_limit_s)
      return finish(std::move(r), RepairStatus::TimeLimit, n0, t0);
    if (r.removed_ids.size() >= cap)
      return finish(std::move(r), RepairStatus::BudgetExhausted, n0, t0);
    if ((iter - 1) % std::max(1, cfg.refresh_period) == 0 && !fresh) {
      st.rescore();
      fresh = true;
    }
    const double toward = eng.ate() > q.target ? 1.0 : -1.0;
    auto best = st.select(toward);
    if (!best || best->second <= gain_floor(eng.ate())) {
      if (fresh) {
        if (++fruitless >= 2) return finish(std::move(r), RepairStatus::NoProgress, n0, t0);
      }
      st.rescore();
      fresh = true;
      continue;
    }
    const Index id = best->first;
    const int cluster = st.idx.cluster_of.at(id);
    try {
      eng.apply_removed({id});
    } catch (const Error&) {
      // Stale score: the removal became infeasible (e.g. it would empty an
      // arm). Drop the candidate and keep searching.
      st.scores.erase(id);
      continue;
    }
    fruitless = 0;
    d.delete_rows({id});
    st.scores.erase(id);
    fresh = false;
    r.removed_ids.push_back(id);
    r.ate_after = eng.ate();
    r.trace.push_back({iter, r.ate_after,
                       "remove id=" + std::to_string(id) + " cluster=" + std::to_string(cluster)});
    if (q.in_range(r.ate_after)) return finish(std::move(r), RepairStatus::Hit, n0, t0);
  }
}

// Search on a uniform sample, then amplify each removed tuple to its
// neighborhood on the full data and apply the expanded set.
RepairResult repair_tuples_sampled(Dataset& d, const CausalQuery& q, const TupleRepairConfig& cfg,
                                   AteEngine& eng, Clock::time_point t0) {
  const Index n0 = d.n_alive();
  RepairResult r;
  r.mode = "tuple";
  r.ate_before = eng.ate();
  std::mt19937_64 rng(cfg.seed);
  std::vector<Index> rows = d.alive_rows();
  const Index take = std::max<Index>(1, static_cast<Index>(std::llround(
                                            cfg.sample_fraction * static_cast<double>(rows.size()))));
  std::vector<Index> chosen = sample_without_replacement(std::move(rows), take, rng);
  std::sort(chosen.begin(), chosen.end());
  Dataset sub = d.subset(chosen);

  TupleRepairConfig sub_cfg = cfg;
  sub_cfg.sample_threshold = std::numeric_limits<Index>::max();
  AteEngine sub_eng(sub, q, eng.options());
  RepairResult sub_r = repair_tuples_core(sub, q, sub_cfg, sub_eng, t0);

  std::vector<Index> seed_ids;
  seed_ids.reserve(sub_r.removed_ids.size());
  for (Index id : sub_r.removed_ids) seed_ids.push_back(sub.source_ids()[id]);
  std::vector<Index> expanded = amplify_with_knn(d, q, seed_ids, cfg.knn_k);

  eng.apply_removed(expanded);
  d.delete_rows(expanded);
  r.removed_ids = std::move(expanded);
  r.ate_after = eng.ate();
  r.trace = std::move(sub_r.trace);
  r.trace.push_back({static_cast<long>(r.trace.size() + 1), r.ate_after,
                     "amplified " + std::to_string(seed_ids.size()) + " sample removals to " +
                         std::to_string(r.removed_ids.size()) + " tuples"});
  return finish(std::move(r),
                q.in_range(r.ate_after) ? RepairStatus::Hit : sub_r.status, n0, t0);
}

}  // namespace

RepairResult repair_tuples(Dataset& d, const CausalQuery& q, const TupleRepairConfig& cfg,
                           AteEngine& eng) {
  const auto t0 = Clock::now();
  if (d.n_alive() > cfg.sample_threshold && cfg.sample_fraction < 1.0)
    return repair_tuples_sampled(d, q, cfg, eng, t0);
  return repair_tuples_core(d, q, cfg, eng, t0);
}

RepairResult repair_tuples_single_update(Dataset& d, const CausalQuery& q,
                                         const TupleRepairConfig& cfg, AteEngine& eng) {
  const auto t0 = Clock::now();
  const Index n0 = d.n_alive();
  const Index cap = cfg.max_removals
                        ? *cfg.max_removals
                        : static_cast<Index>(std::ceil(0.2 * static_cast<double>(n0)));
  RepairResult r;
  r.mode = "tuple-single-update";
  r.ate_before = r.ate_after = eng.ate();
  if (q.in_range(r.ate_before)) return finish(std::move(r), RepairStatus::Hit, n0, t0);

  const double toward = r.ate_before > q.target ? 1.0 : -1.0;
  std::vector<std::pair<double, Index>> order;  // (-gain, id): ascending sort
  order.reserve(n0);
  for (Index id : d.alive_rows()) {
    try {
      order.emplace_back(-influence(eng, id) * toward, id);
    } catch (const Error&) {
      // skip tuples whose removal cannot be evaluated
    }
  }
  std::sort(order.begin(), order.end());

  long iter = 0;
  const double floor0 = gain_floor(r.ate_before);
  for (const auto& [neg_gain, id] : order) {
    if (-neg_gain <= floor0) return finish(std::move(r), RepairStatus::NoProgress, n0, t0);
    if (seconds_since(t0) > cfg.time_limit_s)
      return finish(std::move(r), RepairStatus::TimeLimit, n0, t0);
    if (r.removed_ids.size() >= cap)
      return finish(std::move(r), RepairStatus::BudgetExhausted, n0, t0);
    try {
      eng.apply_removed({id});
    } catch (const Error&) {
      continue;  // e.g. removal would empty an arm by now
    }
    d.delete_rows({id});
    ++iter;
    r.removed_ids.push_back(id);
    r.ate_after = eng.ate();
    r.trace.push_back({iter, r.ate_after, "remove id=" + std::to_string(id)});
    if (q.in_range(r.ate_after)) return finish(std::move(r), RepairStatus::Hit, n0, t0);
  }
  return finish(std::move(r), RepairStatus::NoProgress, n0, t0);
}

std::vector<Index> amplify_with_knn(const Dataset& full, const CausalQuery& q,
                                    const std::vector<Index>& seed_ids, int knn_k) {
  std::vector<Index> rows = full.alive_rows();
  Eigen::MatrixXd F = standardized_features(full, q, rows);
  std::vector<Eigen::Index> pos_of(full.n_rows(), -1);
  for (Index i = 0; i < rows.size(); ++i) pos_of[rows[i]] = static_cast<Eigen::Index>(i);

  std::vector<std::uint8_t> in_set(full.n_rows(), 0);
  std::vector<Index> out;
  for (Index s : seed_ids) {
    if (s >= full.n_rows() || pos_of[s] < 0)
      fail(Err::AlreadyDeleted, "seed id " + std::to_string(s) + " is not alive");
    if (!in_set[s]) {
      in_set[s] = 1;
      out.push_back(s);
    }
  }
  for (Index s : seed_ids) {
    std::vector<std::pair<double, Index>> dist;
    dist.reserve(rows.size() - 1);
    const Eigen::Index sp = pos_of[s];
    for (Index i = 0; i < rows.size(); ++i) {
      if (rows[i] == s) continue;
      dist.emplace_back((F.row(static_cast<Eigen::Index>(i)) - F.row(sp)).squaredNorm(), rows[i]);
    }
    const Index take = std::min<Index>(static_cast<Index>(std::max(0, knn_k)), dist.size());
    std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(take), dist.end());
    for (Index i = 0; i < take; ++i) {
      const Index id = dist[i].second;
      if (!in_set[id]) {
        in_set[id] = 1;
        out.push_back(id);
      }
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace ateaudit
