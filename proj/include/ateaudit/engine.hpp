#pragma once

#include <cstdint>
#include <optional>

#include "ateaudit/ipw.hpp"
#include "ateaudit/ols.hpp"

namespace ateaudit {

enum class EstimatorKind { Ols, Ipw };
enum class UpdateMode { Exact, Neumann, Refit };

struct EngineOptions {
  EstimatorKind estimator = EstimatorKind::Ols;
  UpdateMode update = UpdateMode::Exact;
  double lambda = 1e-4;   // IPW ridge strength
  double clip = 0.01;     // IPW propensity clip
  int fisher_batch = 512; // IPW unlearning batch size
  double sigma = 0.0;     // IPW unlearning noise scale
  std::uint64_t seed = 0; // noise draws
};

EstimatorKind estimator_from_string(const std::string& s);
UpdateMode update_from_string(const std::string& s);

// One live estimate of the ATE over the dataset's alive rows, with cheap
// what-if probes and incremental removal.
//
// Probes never touch the dataset, the mask, or the engine state. Removal is a
// two-step contract: call apply_removed(ids) while the ids are still alive,
// then dataset.delete_rows(ids). The engine picks the update path from the
// configured mode and falls back automatically:
//   neumann -> exact on NormTooLarge, exact -> refit on SingularCapacitance,
//   and a forced refit once kApproxStepLimit consecutive first-order steps
//   have accumulated. IPW removals use the mini-batch Fisher update (or a
//   plain refit in refit mode) with a refit fallback on SingularFisher.
class AteEngine {
 public:
  AteEngine(const Dataset& d, const CausalQuery& q, EngineOptions opt);

  const CausalQuery& query() const { return q_; }
  const EngineOptions& options() const { return opt_; }
  const Dataset& dataset() const { return *d_; }

  double ate() const { return ate_; }
  Index n_alive() const { return treated_ + control_; }

  // ATE if `ids` were additionally removed (const: pure what-if).
  // force_refit evaluates by refitting on the complement regardless of mode.
  // Throws DegenerateGroups/EmptyGroup when the removal empties an arm.
  double probe_removed(const std::vector<Index>& ids, bool force_refit = false) const;

  // Incorporates the removal of `ids` (must currently be alive). See the
  // class comment for ordering relative to Dataset::delete_rows.
  void apply_removed(const std::vector<Index>& ids);

  // Full refit from the dataset's current mask.
  void refit();

  // Exposed for tests: whether the OLS inverse chain is exact right now.
  int approx_steps() const { return ols_ ? ols_->approx_steps : 0; }

  // Estimator internals (coefficients, Gram matrix / propensity model) as
  // JSON, for the CLI's state-dump debugging flag.
  std::string state_json() const;

 private:
  std::vector<Index> rows_minus(const std::vector<Index>& ids) const;
  void count_arms();
  void check_removal_keeps_arms(const std::vector<Index>& ids) const;

  const Dataset* d_;
  CausalQuery q_;
  EngineOptions opt_;
  std::optional<OlsState> ols_;
  std::optional<IpwState> ipw_;
  Index treated_ = 0, control_ = 0;
  double ate_ = 0.0;
};

// influence(t) = ate(D) - ate(D \ {t}): positive means removing t lowers the
// estimate. Probe-only; nothing is mutated.
double influence(const AteEngine& eng, Index id);

}  // namespace ateaudit
