#include "ateaudit/engine.hpp"

#include <algorithm>

#include <nlohmann/json.hpp>

namespace ateaudit {

EstimatorKind estimator_from_string(const std::string& s) {
  if (s == "ols") return EstimatorKind::Ols;
  if (s == "ipw") return EstimatorKind::Ipw;
  fail(Err::BadConfig, "estimator must be 'ols' or 'ipw', got '" + s + "'");
}

UpdateMode update_from_string(const std::string& s) {
  if (s == "exact") return UpdateMode::Exact;
  if (s == "neumann") return UpdateMode::Neumann;
  if (s == "refit") return UpdateMode::Refit;
  fail(Err::BadConfig, "update must be 'exact', 'neumann' or 'refit', got '" + s + "'");
}

AteEngine::AteEngine(const Dataset& d, const CausalQuery& q, EngineOptions opt)
    : d_(&d), q_(q), opt_(opt) {
  q_.validate(d);
  refit();
}

void AteEngine::count_arms() {
  treated_ = control_ = 0;
  const Column& t = d_->col(d_->schema().require(q_.treatment));
  for (Index r = 0; r < d_->n_rows(); ++r) {
    if (!d_->alive(r)) continue;
    if (t.num[static_cast<Eigen::Index>(r)] == 1.0)
      ++treated_;
    else
      ++control_;
  }
}

void AteEngine::refit() {
  count_arms();
  if (opt_.estimator == EstimatorKind::Ols) {
    ols_ = fit_ols(*d_, q_);
    ipw_.reset();
    ate_ = ateaudit::ate(*ols_);
  } else {
    ipw_ = fit_logistic(*d_, q_, opt_.lambda, opt_.clip);
    ols_.reset();
    ate_ = ate_ipw(*d_, *ipw_, d_->alive_rows());
  }
}

std::vector<Index> AteEngine::rows_minus(const std::vector<Index>& ids) const {
  std::vector<std::uint8_t> drop(d_->n_rows(), 0);
  for (Index r : ids) drop[r] = 1;
  std::vector<Index> rows;
  rows.reserve(d_->n_alive() - ids.size());
  for (Index r = 0; r < d_->n_rows(); ++r)
    if (d_->alive(r) && !drop[r]) rows.push_back(r);
  return rows;
}

void AteEngine::check_removal_keeps_arms(const std::vector<Index>& ids) const {
  Index t_rm = 0;
  const Column& t = d_->col(d_->schema().require(q_.treatment));
  for (Index r : ids) {
    if (r >= d_->n_rows() || !d_->alive(r))
      fail(Err::AlreadyDeleted, "row " + std::to_string(r) + " is not alive");
    if (t.num[static_cast<Eigen::Index>(r)] == 1.0) ++t_rm;
  }
  if (t_rm >= treated_ || ids.size() - t_rm >= control_)
    fail(Err::DegenerateGroups, "removal would empty a treatment arm");
}

namespace {

void gather_block(const Dataset& d, const DesignSpec& spec, const std::vector<Index>& ids,
                  Eigen::MatrixXd& X, Eigen::VectorXd& o) {
  X = encode_rows(d, spec, ids);
  o.resize(static_cast<Eigen::Index>(ids.size()));
  const Column& oc = d.col(spec.outcome_attr);
  for (Index i = 0; i < ids.size(); ++i)
    o[static_cast<Eigen::Index>(i)] = oc.num[static_cast<Eigen::Index>(ids[i])];
}

}  // namespace

double AteEngine::probe_removed(const std::vector<Index>& ids, bool force_refit) const {
  if (ids.empty()) return ate_;
  check_removal_keeps_arms(ids);
  if (opt_.estimator == EstimatorKind::Ols) {
    if (!force_refit && opt_.update != UpdateMode::Refit) {
      Eigen::MatrixXd X;
      Eigen::VectorXd o;
      gather_block(*d_, ols_->design, ids, X, o);
      if (opt_.update == UpdateMode::Neumann) {
        try {
          return ateaudit::ate(downdate_neumann(*ols_, X, o));
        } catch (const Error& e) {
          if (e.code() != Err::NormTooLarge) throw;
          // fall through to the exact path
        }
      }
      try {
        return ate_after_removal(*ols_, X, o);
      } catch (const Error& e) {
        if (e.code() != Err::SingularCapacitance) throw;
        // fall through to refit
      }
    }
    return ateaudit::ate(fit_ols_rows(*d_, q_, rows_minus(ids)));
  }
  // IPW
  std::vector<Index> rows = d_->alive_rows();
  if (!force_refit && opt_.update != UpdateMode::Refit) {
    try {
      Eigen::VectorXd theta = fisher_unlearn_theta(*d_, *ipw_, rows, ids, opt_.fisher_batch,
                                                   opt_.sigma, opt_.seed);
      return ate_ipw_theta(*d_, ipw_->model, theta, rows_minus(ids));
    } catch (const Error& e) {
      if (e.code() != Err::SingularFisher) throw;
    }
  }
  IpwState fresh = fit_logistic_rows(*d_, q_, rows_minus(ids), opt_.lambda, opt_.clip);
  return ate_ipw(*d_, fresh, rows_minus(ids));
}

void AteEngine::apply_removed(const std::vector<Index>& ids) {
  if (ids.empty()) return;
  check_removal_keeps_arms(ids);
  std::vector<Index> remaining = rows_minus(ids);
  if (opt_.estimator == EstimatorKind::Ols) {
    bool done = false;
    if (opt_.update != UpdateMode::Refit) {
      Eigen::MatrixXd X;
      Eigen::VectorXd o;
      gather_block(*d_, ols_->design, ids, X, o);
      if (opt_.update == UpdateMode::Neumann && ols_->approx_steps < kApproxStepLimit) {
        try {
          ols_ = downdate_neumann(*ols_, X, o);
          done = true;
        } catch (const Error& e) {
          if (e.code() != Err::NormTooLarge) throw;
        }
      }
      if (!done && (opt_.update == UpdateMode::Exact ||
                    (opt_.update == UpdateMode::Neumann && ols_->approx_steps < kApproxStepLimit))) {
        try {
          ols_ = downdate_exact(*ols_, X, o);
          done = true;
        } catch (const Error& e) {
          if (e.code() != Err::SingularCapacitance) throw;
        }
      }
    }
    if (!done) ols_ = fit_ols_rows(*d_, q_, remaining);
    ate_ = ateaudit::ate(*ols_);
  } else {
    if (opt_.update == UpdateMode::Refit) {
      ipw_ = fit_logistic_rows(*d_, q_, remaining, opt_.lambda, opt_.clip);
    } else {
      try {
        ipw_ = fisher_unlearn(*d_, *ipw_, d_->alive_rows(), ids, opt_.fisher_batch, opt_.sigma,
                              opt_.seed);
      } catch (const Error& e) {
        if (e.code() != Err::SingularFisher) throw;
        ipw_ = fit_logistic_rows(*d_, q_, remaining, opt_.lambda, opt_.clip);
      }
    }
    ate_ = ate_ipw(*d_, *ipw_, remaining);
  }
  const Column& t = d_->col(d_->schema().require(q_.treatment));
  for (Index r : ids) {
    if (t.num[static_cast<Eigen::Index>(r)] == 1.0)
      --treated_;
    else
      --control_;
  }
}

std::string AteEngine::state_json() const {
  nlohmann::json j;
  j["estimator"] = ols_ ? "ols" : "ipw";
  j["ate"] = ate_;
  j["treated"] = treated_;
  j["control"] = control_;
  auto vec = [](const Eigen::VectorXd& v) {
    return std::vector<double>(v.data(), v.data() + v.size());
  };
  if (ols_) {
    j["beta"] = vec(ols_->beta);
    j["b"] = vec(ols_->b);
    nlohmann::json a = nlohmann::json::array();
    for (Eigen::Index r = 0; r < ols_->A.rows(); ++r) {
      nlohmann::json row = nlohmann::json::array();
      for (Eigen::Index c = 0; c < ols_->A.cols(); ++c) row.push_back(ols_->A(r, c));
      a.push_back(row);
    }
    j["gram"] = a;
    j["n_fit"] = ols_->n_fit;
    j["approx_steps"] = ols_->approx_steps;
  } else {
    j["theta"] = vec(ipw_->model.theta);
    j["lambda"] = ipw_->model.lambda;
    j["clip"] = ipw_->model.clip;
  }
  return j.dump(2);
}

double influence(const AteEngine& eng, Index id) {
  return eng.ate() - eng.probe_removed({id});
}

}  // namespace ateaudit
