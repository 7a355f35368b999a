#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <vector>

#include "ateaudit/rng.hpp"

namespace ateaudit {

struct KmeansResult {
  Eigen::MatrixXd centroids;  // k x dim
  std::vector<int> assign;    // per point, 0..k-1
  int k = 0;                  // clusters actually produced (empties dropped)
};

// Lloyd's algorithm with distance-weighted (k-means++ style) seeding.
// Deterministic for a given seed; ties in assignment go to the lowest
// cluster id; empty clusters are dropped and ids compacted.
KmeansResult kmeans(const Eigen::MatrixXd& points, int k, std::uint64_t seed,
                    int max_iter = 100);

}  // namespace ateaudit
