#include "ateaudit/kmeans.hpp"

#include <limits>
#include <random>

#include "ateaudit/errors.hpp"

namespace ateaudit {

KmeansResult kmeans(const Eigen::MatrixXd& points, int k, std::uint64_t seed, int max_iter) {
  const Eigen::Index n = points.rows();
  if (n == 0) fail(Err::BadConfig, "kmeans needs at least one point");
  k = static_cast<int>(std::min<Eigen::Index>(k, n));
  if (k < 1) fail(Err::BadConfig, "kmeans needs k >= 1");

  std::mt19937_64 rng(seed);
  Eigen::MatrixXd centroids(k, points.cols());

  // Seeding: first centroid uniform, the rest proportional to squared
  // distance from the chosen set.
  Eigen::VectorXd d2 = Eigen::VectorXd::Constant(n, std::numeric_limits<double>::infinity());
  Eigen::Index first = static_cast<Eigen::Index>(rand01(rng()) * static_cast<double>(n));
  centroids.row(0) = points.row(first);
  for (int c = 1; c < k; ++c) {
    for (Eigen::Index i = 0; i < n; ++i)
      d2[i] = std::min(d2[i], (points.row(i) - centroids.row(c - 1)).squaredNorm());
    const double total = d2.sum();
    Eigen::Index pick = 0;
    if (total > 0) {
      double u = rand01(rng()) * total;
      double acc = 0;
      for (Eigen::Index i = 0; i < n; ++i) {
        acc += d2[i];
        if (u < acc) {
          pick = i;
          break;
        }
        pick = i;  // numeric tail: keep the last index
      }
    } else {
      pick = static_cast<Eigen::Index>(rand01(rng()) * static_cast<double>(n));
    }
    centroids.row(c) = points.row(pick);
  }

  std::vector<int> assign(n, 0);
  std::vector<Eigen::Index> count(k, 0);
  for (int it = 0; it < max_iter; ++it) {
    bool changed = false;
    for (Eigen::Index i = 0; i < n; ++i) {
      int best = 0;
      double bd = (points.row(i) - centroids.row(0)).squaredNorm();
      for (int c = 1; c < k; ++c) {
        const double dc = (points.row(i) - centroids.row(c)).squaredNorm();
        if (dc < bd) {
          bd = dc;
          best = c;
        }
      }
      if (assign[i] != best) {
        assign[i] = best;
        changed = true;
      }
    }
    if (!changed && it > 0) break;
    Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(k, points.cols());
    std::fill(count.begin(), count.end(), 0);
    for (Eigen::Index i = 0; i < n; ++i) {
      sums.row(assign[i]) += points.row(i);
      ++count[assign[i]];
    }
    for (int c = 0; c < k; ++c)
      if (count[c] > 0) centroids.row(c) = sums.row(c) / static_cast<double>(count[c]);
    if (!changed) break;
  }

  // Drop empty clusters and compact ids.
  std::fill(count.begin(), count.end(), 0);
  for (Eigen::Index i = 0; i < n; ++i) ++count[assign[i]];
  std::vector<int> remap(k, -1);
  int kk = 0;
  for (int c = 0; c < k; ++c)
    if (count[c] > 0) remap[c] = kk++;
  KmeansResult out;
  out.k = kk;
  out.centroids.resize(kk, points.cols());
  for (int c = 0; c < k; ++c)
    if (remap[c] >= 0) out.centroids.row(remap[c]) = centroids.row(c);
  out.assign.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) out.assign[i] = remap[assign[i]];
  return out;
}

}  // namespace ateaudit
