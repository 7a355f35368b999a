#pragma once

#include <Eigen/Core>
#include <cstdint>

#include "ateaudit/design.hpp"

namespace ateaudit {

// L2-regularized logistic propensity model p(T=1|Z) = sigmoid(theta^T [1, enc(Z)]).
struct PropensityModel {
  DesignSpec design;  // intercept + confounder encodings, no treatment column
  Eigen::VectorXd theta;
  double lambda = 1e-4;  // ridge strength on all coordinates
  double clip = 0.01;    // propensities clamped to [clip, 1-clip] at use
};

// Model plus a per-row propensity cache (raw sigmoids; clipping happens at
// evaluation). The cache is refreshed after fits and unlearning steps.
struct IpwState {
  PropensityModel model;
  Eigen::VectorXd propensity;  // length n_rows; only alive entries meaningful
};

// Newton / Fisher-scoring fit on the alive rows to gradient norm <= 1e-8
// (penalized negative log-likelihood, step-halving on non-decrease).
// Throws Separation when iterates diverge (possible only at lambda ~ 0) and
// SingularFisher when a Hessian solve fails.
IpwState fit_logistic(const Dataset& d, const CausalQuery& q, double lambda = 1e-4,
                      double clip = 0.01);
IpwState fit_logistic_rows(const Dataset& d, const CausalQuery& q,
                           const std::vector<Index>& rows, double lambda = 1e-4,
                           double clip = 0.01);

// Hajek-normalized inverse-propensity estimate over `rows`:
//   sum(t o / p) / sum(t / p) - sum((1-t) o / (1-p)) / sum((1-t) / (1-p)).
// Throws EmptyGroup when either arm is empty.
double ate_ipw(const Dataset& d, const IpwState& s, const std::vector<Index>& rows);

// Removal handled as mini-batch second-order updates: the removed ids are
// chunked (ascending) into ceil(|removed|/batch_size) batches; after dropping
// each batch one Newton step is taken on the data that remains. sigma > 0
// additionally perturbs theta by sigma * F^{-1/4} b with b ~ N(0, I) drawn
// from `seed` (F the Fisher/Hessian matrix), trading accuracy for stronger
// forgetting. The returned state has theta updated and the propensity cache
// refreshed over `rows` minus `removed`. `rows` is the current evaluation set
// (`removed` must be a subset). Throws SingularFisher if a step cannot be
// solved; callers should refit instead.
IpwState fisher_unlearn(const Dataset& d, const IpwState& s, const std::vector<Index>& rows,
                        const std::vector<Index>& removed, int batch_size = 512,
                        double sigma = 0.0, std::uint64_t seed = 0);

// Theta after the same update, without touching any cache (probe path).
Eigen::VectorXd fisher_unlearn_theta(const Dataset& d, const IpwState& s,
                                     const std::vector<Index>& rows,
                                     const std::vector<Index>& removed, int batch_size = 512,
                                     double sigma = 0.0, std::uint64_t seed = 0);

// Hajek estimate computing propensities from `theta` on the fly (probe path).
double ate_ipw_theta(const Dataset& d, const PropensityModel& model, const Eigen::VectorXd& theta,
                     const std::vector<Index>& rows);

}  // namespace ateaudit
