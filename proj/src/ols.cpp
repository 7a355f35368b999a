#include "ateaudit/ols.hpp"

#include <Eigen/Dense>

namespace ateaudit {

namespace {

// Symmetric inverse with a relative spectrum cutoff; returns false when the
// matrix is singular at kRankTol.
bool invert_spd(const Eigen::MatrixXd& A, Eigen::MatrixXd& out) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A);
  if (es.info() != Eigen::Success) return false;
  const auto& ev = es.eigenvalues();
  const double lo = ev.minCoeff(), hi = ev.maxCoeff();
  if (!(hi > 0) || lo <= kRankTol * hi) return false;
  out = es.eigenvectors() * ev.cwiseInverse().asDiagonal() * es.eigenvectors().transpose();
  return true;
}

void check_groups(const Dataset& d, const DesignSpec& spec, const std::vector<Index>& rows) {
  Index treated = 0;
  const Column& t = d.col(spec.treatment_attr);
  for (Index r : rows)
    if (t.num[static_cast<Eigen::Index>(r)] == 1.0) ++treated;
  if (treated == 0 || treated == rows.size())
    fail(Err::DegenerateGroups, "need at least one treated and one control row (treated = " +
                                    std::to_string(treated) + " of " + std::to_string(rows.size()) + ")");
}

}  // namespace

OlsState fit_ols_rows(const Dataset& d, const CausalQuery& q, const std::vector<Index>& rows) {
  q.validate(d);
  OlsState s;
  s.design = build_design(d, q, /*with_treatment=*/true);
  if (rows.empty()) fail(Err::DegenerateGroups, "no rows to fit");
  check_groups(d, s.design, rows);
  const int m = s.design.dim();
  s.A.setZero(m, m);
  s.b.setZero(m);
  Eigen::VectorXd x(m);
  const Column& out = d.col(s.design.outcome_attr);
  for (Index r : rows) {
    encode_row(d, s.design, r, x);
    s.A.selfadjointView<Eigen::Lower>().rankUpdate(x);
    s.b += out.num[static_cast<Eigen::Index>(r)] * x;
  }
  s.A = s.A.selfadjointView<Eigen::Lower>();
  if (!invert_spd(s.A, s.A_inv))
    fail(Err::RankDeficient, "design columns are collinear at relative tolerance 1e-10");
  s.beta = s.A_inv * s.b;
  // One step of iterative refinement: recovers the last couple of ulps the
  // eigendecomposition route loses, which keeps integer-valued fixtures exact.
  s.beta += s.A_inv * (s.b - s.A * s.beta);
  s.n_fit = rows.size();
  s.approx_steps = 0;
  return s;
}

OlsState fit_ols(const Dataset& d, const CausalQuery& q) {
  return fit_ols_rows(d, q, d.alive_rows());
}

double ate(const OlsState& s) { return s.beta[s.design.treatment_index]; }

namespace {

struct DowndatedInverse {
  Eigen::MatrixXd A_new;
  Eigen::MatrixXd A_inv_new;
};

DowndatedInverse exact_inverse_downdate(const OlsState& s, const Eigen::MatrixXd& X_rmv) {
  const Eigen::Index r = X_rmv.rows();
  const Eigen::Index m = X_rmv.cols();
  DowndatedInverse out;
  out.A_new = s.A - X_rmv.transpose() * X_rmv;
  if (r <= m) {
    // Small-block path: solve the r x r capacitance system.
    Eigen::MatrixXd AiU = s.A_inv * X_rmv.transpose();           // m x r
    Eigen::MatrixXd S = Eigen::MatrixXd::Identity(r, r) - X_rmv * AiU;
    Eigen::FullPivLU<Eigen::MatrixXd> lu(S);
    if (!lu.isInvertible()) {
      // Distinguish "removal destroys identifiability" from a merely
      // ill-posed small system.
      Eigen::MatrixXd dummy;
      if (!invert_spd(out.A_new, dummy))
        fail(Err::RankLost, "removal leaves a rank-deficient design");
      fail(Err::SingularCapacitance, "capacitance matrix is singular; refit instead");
    }
    out.A_inv_new = s.A_inv + AiU * lu.solve(AiU.transpose());
  } else {
    // Wide-block path: re-invert the downdated Gram matrix directly.
    if (!invert_spd(out.A_new, out.A_inv_new))
      fail(Err::RankLost, "removal leaves a rank-deficient design");
  }
  return out;
}

}  // namespace

OlsState downdate_exact(const OlsState& s, const Eigen::MatrixXd& X_rmv,
                        const Eigen::VectorXd& o_rmv) {
  if (X_rmv.rows() == 0) return s;
  if (X_rmv.cols() != s.dim()) fail(Err::BadConfig, "removed block has wrong width");
  DowndatedInverse di = exact_inverse_downdate(s, X_rmv);
  OlsState out;
  out.design = s.design;
  out.A = std::move(di.A_new);
  out.A_inv = std::move(di.A_inv_new);
  out.b = s.b - X_rmv.transpose() * o_rmv;
  out.beta = out.A_inv * out.b;
  out.n_fit = s.n_fit - static_cast<Index>(X_rmv.rows());
  out.approx_steps = s.approx_steps;  // exact step neither heals nor worsens the chain
  return out;
}

OlsState downdate_neumann(const OlsState& s, const Eigen::MatrixXd& X_rmv,
                          const Eigen::VectorXd& o_rmv) {
  if (X_rmv.rows() == 0) return s;
  if (X_rmv.cols() != s.dim()) fail(Err::BadConfig, "removed block has wrong width");
  Eigen::MatrixXd delta = X_rmv.transpose() * X_rmv;
  Eigen::MatrixXd M = delta * s.A_inv;
  const double norm = M.norm();
  if (!(norm < kNeumannNormBound))
    fail(Err::NormTooLarge, "||Delta A_inv||_F = " + std::to_string(norm) +
                                " exceeds " + std::to_string(kNeumannNormBound));
  OlsState out;
  out.design = s.design;
  out.A = s.A - delta;
  out.A_inv = s.A_inv + s.A_inv * M;
  out.b = s.b - X_rmv.transpose() * o_rmv;
  out.beta = out.A_inv * out.b;
  out.n_fit = s.n_fit - static_cast<Index>(X_rmv.rows());
  out.approx_steps = s.approx_steps + 1;
  return out;
}

double ate_after_removal(const OlsState& s, const Eigen::MatrixXd& X_rmv,
                         const Eigen::VectorXd& o_rmv) {
  if (X_rmv.rows() == 0) return ate(s);
  if (X_rmv.cols() != s.dim()) fail(Err::BadConfig, "removed block has wrong width");
  const Eigen::Index r = X_rmv.rows();
  const Eigen::Index m = X_rmv.cols();
  const int ti = s.design.treatment_index;
  Eigen::VectorXd b_new = s.b - X_rmv.transpose() * o_rmv;
  if (r <= m) {
    Eigen::VectorXd v = s.A_inv * b_new;
    Eigen::MatrixXd AiU = s.A_inv * X_rmv.transpose();
    Eigen::MatrixXd S = Eigen::MatrixXd::Identity(r, r) - X_rmv * AiU;
    Eigen::FullPivLU<Eigen::MatrixXd> lu(S);
    if (!lu.isInvertible()) {
      Eigen::MatrixXd dummy;
      if (!invert_spd(s.A - X_rmv.transpose() * X_rmv, dummy))
        fail(Err::RankLost, "removal leaves a rank-deficient design");
      fail(Err::SingularCapacitance, "capacitance matrix is singular; refit instead");
    }
    return v[ti] + AiU.row(ti).dot(lu.solve(X_rmv * v));
  }
  DowndatedInverse di = exact_inverse_downdate(s, X_rmv);
  return di.A_inv_new.row(ti).dot(b_new);
}

OlsState downdate_exact(const Dataset& d, const OlsState& s, const std::vector<Index>& rows) {
  Eigen::MatrixXd X = encode_rows(d, s.design, rows);
  Eigen::VectorXd o(rows.size());
  const Column& oc = d.col(s.design.outcome_attr);
  for (Index i = 0; i < rows.size(); ++i)
    o[static_cast<Eigen::Index>(i)] = oc.num[static_cast<Eigen::Index>(rows[i])];
  return downdate_exact(s, X, o);
}

OlsState downdate_neumann(const Dataset& d, const OlsState& s, const std::vector<Index>& rows) {
  Eigen::MatrixXd X = encode_rows(d, s.design, rows);
  Eigen::VectorXd o(rows.size());
  const Column& oc = d.col(s.design.outcome_attr);
  for (Index i = 0; i < rows.size(); ++i)
    o[static_cast<Eigen::Index>(i)] = oc.num[static_cast<Eigen::Index>(rows[i])];
  return downdate_neumann(s, X, o);
}

}  // namespace ateaudit
