#pragma once

#include <Eigen/Core>

#include "ateaudit/design.hpp"

namespace ateaudit {

// Sufficient statistics of the least-squares outcome model
// o ~ [1, T, enc(Z)] beta. The average treatment effect is the T coefficient.
//
// A and b are always exact for the rows currently accounted for; A_inv is
// exact after a fit or exact downdate and first-order approximate after a
// Neumann downdate (approx_steps counts consecutive approximate updates so
// callers can force a refit once the chain gets stale).
struct OlsState {
  DesignSpec design;
  Eigen::MatrixXd A;      // X^T X
  Eigen::MatrixXd A_inv;
  Eigen::VectorXd b;      // X^T o
  Eigen::VectorXd beta;
  Index n_fit = 0;
  int approx_steps = 0;

  int dim() const { return design.dim(); }
};

// Relative spectrum cutoff below which the Gram matrix counts as singular.
inline constexpr double kRankTol = 1e-10;
// Frobenius-norm guard for the first-order downdate: reject when
// ||Delta A_inv||_F exceeds this.
inline constexpr double kNeumannNormBound = 0.5;
// Force a refit after this many consecutive first-order downdates.
inline constexpr int kApproxStepLimit = 50;

// Fits on the alive rows. Throws DegenerateGroups when either treatment arm
// is empty, RankDeficient when the design has (numerically) collinear columns.
OlsState fit_ols(const Dataset& d, const CausalQuery& q);
// Same, over an explicit row list (used for probe refits with an overlay).
OlsState fit_ols_rows(const Dataset& d, const CausalQuery& q, const std::vector<Index>& rows);

double ate(const OlsState& s);

// Exact removal of the block (X_rmv, o_rmv) via the matrix-inversion lemma:
//   (A - U U^T)^{-1} = A^{-1} + A^{-1} U (I - U^T A^{-1} U)^{-1} U^T A^{-1}
// with U = X_rmv^T. When more rows than design columns are removed it is
// cheaper (and still exact) to re-invert A - X_rmv^T X_rmv directly, so the
// implementation switches on the block size. Cost is independent of the
// number of retained rows. Throws SingularCapacitance when the small system
// cannot be solved and RankLost when the removal destroys identifiability.
OlsState downdate_exact(const OlsState& s, const Eigen::MatrixXd& X_rmv,
                        const Eigen::VectorXd& o_rmv);

// First-order (one-term Neumann expansion) removal:
//   beta_new ~= (A^{-1} + A^{-1} Delta A^{-1}) (b - X_rmv^T o_rmv),
// valid while ||Delta A^{-1}|| < 1. Guarded at ||Delta A^{-1}||_F <
// kNeumannNormBound; beyond that throws NormTooLarge and the caller should
// fall back to the exact path.
OlsState downdate_neumann(const OlsState& s, const Eigen::MatrixXd& X_rmv,
                          const Eigen::VectorXd& o_rmv);

// ATE after an exact removal of the block, without building the new state.
// Same error behavior as downdate_exact.
double ate_after_removal(const OlsState& s, const Eigen::MatrixXd& X_rmv,
                         const Eigen::VectorXd& o_rmv);

// Convenience wrappers that encode `rows` from the dataset first.
OlsState downdate_exact(const Dataset& d, const OlsState& s, const std::vector<Index>& rows);
OlsState downdate_neumann(const Dataset& d, const OlsState& s, const std::vector<Index>& rows);

}  // namespace ateaudit
