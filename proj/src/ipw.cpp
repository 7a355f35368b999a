#include "ateaudit/ipw.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <functional>
#include <random>

namespace ateaudit {

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Penalized negative log-likelihood, gradient, Hessian over `rows`.
struct LogisticWork {
  const Dataset& d;
  const DesignSpec& spec;
  const Column& treat;
  double lambda;
  int m;

  LogisticWork(const Dataset& d_, const DesignSpec& spec_, double lambda_)
      : d(d_), spec(spec_), treat(d_.col(spec_.treatment_attr)), lambda(lambda_), m(spec_.dim()) {}

  double loss(const Eigen::VectorXd& theta, const std::vector<Index>& rows) const {
    Eigen::VectorXd x(m);
    double L = 0.5 * lambda * theta.squaredNorm();
    for (Index r : rows) {
      encode_row(d, spec, r, x);
      const double eta = theta.dot(x);
      const double t = treat.num[static_cast<Eigen::Index>(r)];
      // -log p(t | x) in a numerically stable form.
      L += std::log1p(std::exp(-std::abs(eta))) + std::max(eta, 0.0) - t * eta;
    }
    return L;
  }

  void grad_hess(const Eigen::VectorXd& theta, const std::vector<Index>& rows,
                 Eigen::VectorXd& g, Eigen::MatrixXd& H) const {
    Eigen::VectorXd x(m);
    g = lambda * theta;
    H = lambda * Eigen::MatrixXd::Identity(m, m);
    for (Index r : rows) {
      encode_row(d, spec, r, x);
      const double p = sigmoid(theta.dot(x));
      const double t = treat.num[static_cast<Eigen::Index>(r)];
      g += (p - t) * x;
      H.selfadjointView<Eigen::Lower>().rankUpdate(x, p * (1.0 - p));
    }
    H = H.selfadjointView<Eigen::Lower>();
  }
};

Eigen::VectorXd solve_newton_step(const Eigen::MatrixXd& H, const Eigen::VectorXd& g) {
  Eigen::LDLT<Eigen::MatrixXd> ldlt(H);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive())
    fail(Err::SingularFisher, "Hessian is not positive definite");
  return ldlt.solve(g);
}

constexpr double kGradTol = 1e-8;
constexpr int kMaxNewton = 200;

Eigen::VectorXd newton_fit(const LogisticWork& work, const std::vector<Index>& rows) {
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(work.m);
  Eigen::VectorXd g(work.m);
  Eigen::MatrixXd H(work.m, work.m);
  double cur = work.loss(theta, rows);
  for (int it = 0; it < kMaxNewton; ++it) {
    work.grad_hess(theta, rows, g, H);
    if (g.norm() <= kGradTol) return theta;
    Eigen::VectorXd step = solve_newton_step(H, g);
    // Step-halving keeps the iteration monotone on hard geometry.
    double scale = 1.0;
    for (int h = 0; h < 40; ++h) {
      Eigen::VectorXd cand = theta - scale * step;
      double nl = work.loss(cand, rows);
      if (nl <= cur || h == 39) {
        theta = std::move(cand);
        cur = nl;
        break;
      }
      scale *= 0.5;
    }
    if (theta.norm() > 1e10)
      fail(Err::Separation, "iterates diverged; groups may be perfectly separable");
  }
  work.grad_hess(theta, rows, g, H);
  if (g.norm() <= 1e-6) return theta;  // near-converged plateau
  fail(Err::Separation, "no convergence after " + std::to_string(kMaxNewton) +
                            " iterations (gradient norm " + std::to_string(g.norm()) + ")");
}

void check_arms(const Dataset& d, const DesignSpec& spec, const std::vector<Index>& rows) {
  Index treated = 0;
  const Column& t = d.col(spec.treatment_attr);
  for (Index r : rows)
    if (t.num[static_cast<Eigen::Index>(r)] == 1.0) ++treated;
  if (treated == 0 || treated == rows.size())
    fail(Err::EmptyGroup, "need both treated and control rows (treated = " +
                              std::to_string(treated) + " of " + std::to_string(rows.size()) + ")");
}

}  // namespace

IpwState fit_logistic_rows(const Dataset& d, const CausalQuery& q, const std::vector<Index>& rows,
                           double lambda, double clip) {
  q.validate(d);
  if (!(clip >= 0.0 && clip < 0.5)) fail(Err::BadConfig, "clip must be in [0, 0.5)");
  if (!(lambda >= 0.0)) fail(Err::BadConfig, "lambda must be >= 0");
  IpwState s;
  s.model.design = build_design(d, q, /*with_treatment=*/false);
  s.model.lambda = lambda;
  s.model.clip = clip;
  if (rows.empty()) fail(Err::EmptyGroup, "no rows to fit");
  check_arms(d, s.model.design, rows);
  LogisticWork work(d, s.model.design, lambda);
  s.model.theta = newton_fit(work, rows);
  s.propensity.setZero(static_cast<Eigen::Index>(d.n_rows()));
  Eigen::VectorXd x(s.model.design.dim());
  for (Index r : rows) {
    encode_row(d, s.model.design, r, x);
    s.propensity[static_cast<Eigen::Index>(r)] = sigmoid(s.model.theta.dot(x));
  }
  return s;
}

IpwState fit_logistic(const Dataset& d, const CausalQuery& q, double lambda, double clip) {
  return fit_logistic_rows(d, q, d.alive_rows(), lambda, clip);
}

namespace {

double hajek(const Dataset& d, const PropensityModel& model, const std::vector<Index>& rows,
             const std::function<double(Index)>& p_of) {
  const Column& t = d.col(model.design.treatment_attr);
  const Column& o = d.col(model.design.outcome_attr);
  double num1 = 0, den1 = 0, num0 = 0, den0 = 0;
  Index n1 = 0, n0 = 0;
  for (Index r : rows) {
    const auto ri = static_cast<Eigen::Index>(r);
    const double p = std::clamp(p_of(r), model.clip, 1.0 - model.clip);
    if (t.num[ri] == 1.0) {
      num1 += o.num[ri] / p;
      den1 += 1.0 / p;
      ++n1;
    } else {
      num0 += o.num[ri] / (1.0 - p);
      den0 += 1.0 / (1.0 - p);
      ++n0;
    }
  }
  if (n1 == 0 || n0 == 0)
    fail(Err::EmptyGroup, n1 == 0 ? "no treated rows in evaluation set"
                                  : "no control rows in evaluation set");
  return num1 / den1 - num0 / den0;
}

}  // namespace

double ate_ipw(const Dataset& d, const IpwState& s, const std::vector<Index>& rows) {
  return hajek(d, s.model, rows,
               [&](Index r) { return s.propensity[static_cast<Eigen::Index>(r)]; });
}

double ate_ipw_theta(const Dataset& d, const PropensityModel& model, const Eigen::VectorXd& theta,
                     const std::vector<Index>& rows) {
  Eigen::VectorXd x(model.design.dim());
  return hajek(d, model, rows, [&](Index r) {
    encode_row(d, model.design, r, x);
    return sigmoid(theta.dot(x));
  });
}

namespace {

Eigen::VectorXd unlearn_core(const Dataset& d, const IpwState& s, const std::vector<Index>& rows,
                             const std::vector<Index>& removed, int batch_size, double sigma,
                             std::uint64_t seed, std::vector<Index>* remaining_out) {
  if (batch_size < 1) fail(Err::BadConfig, "batch_size must be >= 1");
  std::vector<Index> rm = removed;
  std::sort(rm.begin(), rm.end());
  for (Index r : rm)
    if (r >= d.n_rows()) fail(Err::AlreadyDeleted, "removed id out of range");
  // Working set: rows minus batches processed so far.
  std::vector<Index> remaining;
  remaining.reserve(rows.size());
  std::vector<std::uint8_t> drop(d.n_rows(), 0);

  LogisticWork work(d, s.model.design, s.model.lambda);
  Eigen::VectorXd theta = s.model.theta;
  Eigen::VectorXd g(work.m);
  Eigen::MatrixXd H(work.m, work.m);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);

  const Index nb = (rm.size() + static_cast<Index>(batch_size) - 1) / static_cast<Index>(batch_size);
  for (Index bi = 0; bi < nb; ++bi) {
    const Index lo = bi * static_cast<Index>(batch_size);
    const Index hi = std::min(rm.size(), lo + static_cast<Index>(batch_size));
    for (Index j = lo; j < hi; ++j) drop[rm[j]] = 1;
    remaining.clear();
    for (Index r : rows)
      if (!drop[r]) remaining.push_back(r);
    work.grad_hess(theta, remaining, g, H);
    theta -= solve_newton_step(H, g);
    if (sigma > 0.0) {
      // theta += sigma * F^{-1/4} b, F^{-1/4} from the eigendecomposition.
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(H);
      if (es.info() != Eigen::Success || es.eigenvalues().minCoeff() <= 0.0)
        fail(Err::SingularFisher, "Fisher matrix not positive definite for noise scaling");
      Eigen::VectorXd b(work.m);
      for (int i = 0; i < work.m; ++i) b[i] = gauss(rng);
      theta += sigma * (es.eigenvectors() *
                        es.eigenvalues().array().pow(-0.25).matrix().asDiagonal() *
                        es.eigenvectors().transpose() * b);
    }
  }
  if (nb == 0) {
    remaining = rows;
  }
  if (remaining_out) *remaining_out = std::move(remaining);
  return theta;
}

}  // namespace

IpwState fisher_unlearn(const Dataset& d, const IpwState& s, const std::vector<Index>& rows,
                        const std::vector<Index>& removed, int batch_size, double sigma,
                        std::uint64_t seed) {
  std::vector<Index> remaining;
  Eigen::VectorXd theta = unlearn_core(d, s, rows, removed, batch_size, sigma, seed, &remaining);
  IpwState out;
  out.model = s.model;
  out.model.theta = theta;
  out.propensity = s.propensity;
  Eigen::VectorXd x(out.model.design.dim());
  for (Index r : remaining) {
    encode_row(d, out.model.design, r, x);
    out.propensity[static_cast<Eigen::Index>(r)] = sigmoid(theta.dot(x));
  }
  return out;
}

Eigen::VectorXd fisher_unlearn_theta(const Dataset& d, const IpwState& s,
                                     const std::vector<Index>& rows,
                                     const std::vector<Index>& removed, int batch_size,
                                     double sigma, std::uint64_t seed) {
  return unlearn_core(d, s, rows, removed, batch_size, sigma, seed, nullptr);
}

}  // namespace ateaudit
