#pragma once

#include <cstdint>
#include <optional>
#include <unordered_map>

#include "ateaudit/engine.hpp"
#include "ateaudit/repair_result.hpp"

namespace ateaudit {

struct TupleRepairConfig {
  std::uint64_t seed = 42;
  int refresh_period = 10;             // iterations between rescoring rounds
  int reps_per_cluster = 2;            // cached representatives per cluster
  std::optional<int> k;                // cluster count override
  int samples_per_cluster = 5;         // per-cluster sample cap at rescore
  std::optional<Index> max_removals;   // default: 20% of alive rows
  double time_limit_s = 36000.0;       // 10 hours
  // Large inputs: run the search on a uniform sample, then widen each removed
  // tuple to its nearest neighbors on the full data.
  Index sample_threshold = 500000;
  double sample_fraction = 0.10;
  int knn_k = 100;
};

// Cluster structure over the alive rows with cached representative scores.
// Representatives per cluster: the point closest to the centroid plus points
// at spread-out distance percentiles (75th for one extra, evenly spaced
// between the 25th and 75th for more). Clusters no bigger than the rep count
// use every member.
struct ClusterIndex {
  int k = 0;
  std::vector<std::vector<Index>> members;         // cluster -> row ids (ascending)
  std::vector<std::vector<Index>> reps;            // cluster -> representative ids
  std::unordered_map<Index, int> cluster_of;       // row id -> cluster
  std::unordered_map<Index, double> rep_influence; // representative -> influence at build
  std::unordered_map<Index, Index> rep_assignment; // non-rep id -> nearest rep in its cluster
};

// k = clamp(max(5, min(floor(sqrt(n)), floor(n/10))), 1, n): grows with the
// square root for big inputs, never exceeds n, never goes below 1.
int default_cluster_count(Index n_alive);

// Clusters the alive rows on standardized (Z, T, O) features with
// default_cluster_count(n) clusters unless overridden, and scores each
// representative by influence.
ClusterIndex build_cluster_index(const Dataset& d, const CausalQuery& q, const AteEngine& eng,
                                 const TupleRepairConfig& cfg);

// Greedy clustered search: per iteration pick the cluster whose sampled mean
// influence moves the ATE toward the target fastest, delete the best scored
// tuple inside it, and update the estimate incrementally. Scores are sampled
// m_k = min(samples_per_cluster, |alive in cluster|) per cluster and refreshed
// every refresh_period iterations; representative scores persist until their
// cluster is resampled. Deletions are committed to `d` as they happen.
RepairResult repair_tuples(Dataset& d, const CausalQuery& q, const TupleRepairConfig& cfg,
                           AteEngine& eng);

// Baseline: every alive tuple scored once up front, then removed in frozen
// descending-gain order until the target interval is hit or a stop fires.
RepairResult repair_tuples_single_update(Dataset& d, const CausalQuery& q,
                                         const TupleRepairConfig& cfg, AteEngine& eng);

// For removals computed on a sample: each seed id expands to its knn_k
// nearest alive neighbors (standardized features, ties to lower id).
// Returns the union, sorted, seeds included.
std::vector<Index> amplify_with_knn(const Dataset& full, const CausalQuery& q,
                                    const std::vector<Index>& seed_ids, int knn_k);

}  // namespace ateaudit
