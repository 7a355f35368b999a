#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "ateaudit/pattern_repair.hpp"
#include "ateaudit/synth.hpp"
#include "doctest.h"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

using namespace ateaudit;

namespace {

// Two binary markers with combos (0,0)x2, (0,1)x1, (1,1)x3; (1,0) absent.
Dataset marker_table() {
  using fixtures::ColSpec;
  std::vector<ColSpec> specs;
  specs.push_back({"T", AttrKind::NumericBinary, {1, 0, 1, 0, 1, 0}, {}});
  specs.push_back({"O", AttrKind::NumericContinuous, {3.0, 1.0, 2.0, 0.0, 4.0, 1.0}, {}});
  specs.push_back({"m1", AttrKind::NumericBinary, {0, 0, 0, 1, 1, 1}, {}});
  specs.push_back({"m2", AttrKind::NumericBinary, {0, 0, 1, 1, 1, 1}, {}});
  return fixtures::make_dataset(specs);
}

}  // namespace

TEST_SUITE("pattern_repair") {

TEST_CASE("eligible attributes exclude outcome, treatment and continuous columns") {
  Dataset d = marker_table();
  CausalQuery q = fixtures::golden_query();
  std::vector<Index> attrs = pattern_eligible_attrs(d, q);
  REQUIRE(attrs.size() == 2);
  CHECK(d.schema().attrs[attrs[0]].name == "m1");
  CHECK(d.schema().attrs[attrs[1]].name == "m2");
  // With treatment allowed, T joins the pool.
  std::vector<Index> with_t = pattern_eligible_attrs(d, q, true);
  CHECK(with_t.size() == 3);
  // A table with nothing eligible fails loudly.
  std::vector<fixtures::ColSpec> bare;
  bare.push_back({"T", AttrKind::NumericBinary, {1, 0}, {}});
  bare.push_back({"O", AttrKind::NumericContinuous, {1.0, 2.0}, {}});
  Dataset none = fixtures::make_dataset(bare);
  try {
    pattern_eligible_attrs(none, q);
    FAIL("expected NoEligibleAttributes");
  } catch (const Error& e) {
    CHECK(e.code() == Err::NoEligibleAttributes);
  }
}

TEST_CASE("most specific groups enumerate observed combinations with supports") {
  Dataset d = marker_table();
  CausalQuery q = fixtures::golden_query();
  auto groups = most_specific_groups(d, q);
  REQUIRE(groups.size() == 3);  // (1,0) never occurs
  CHECK(groups[0].first.key() == "m1=0;m2=0");
  CHECK(groups[0].second == 2);
  CHECK(groups[1].first.key() == "m1=0;m2=1");
  CHECK(groups[1].second == 1);
  CHECK(groups[2].first.key() == "m1=1;m2=1");
  CHECK(groups[2].second == 3);

  // Supports agree with an independent pass over the rows.
  auto counts = oracle::group_counts(d, pattern_eligible_attrs(d, q));
  for (const auto& [p, cnt] : groups) {
    std::string key;
    for (const auto& pr : p.preds) key += pr.attr + "=" + pr.value + ";";
    CHECK(counts.at(key) == cnt);
    CHECK(static_cast<Index>(satisfies(d, p).size()) == cnt);
  }
}

TEST_CASE("groups respect the alive mask") {
  Dataset d = marker_table();
  CausalQuery q = fixtures::golden_query();
  d.delete_rows({2});  // the only (0,1) row
  auto groups = most_specific_groups(d, q);
  CHECK(groups.size() == 2);
  for (const auto& [p, cnt] : groups) CHECK(p.key() != "m1=0;m2=1");
}

TEST_CASE("categorical labels appear verbatim in group patterns") {
  using fixtures::ColSpec;
  std::vector<ColSpec> specs;
  specs.push_back({"T", AttrKind::NumericBinary, {1, 0, 1, 0}, {}});
  specs.push_back({"O", AttrKind::NumericContinuous, {1, 2, 3, 4}, {}});
  specs.push_back({"city", AttrKind::Categorical, {}, {"sf", "ny", "sf", "ny"}});
  Dataset d = fixtures::make_dataset(specs);
  auto groups = most_specific_groups(d, fixtures::golden_query());
  REQUIRE(groups.size() == 2);
  CHECK(groups[0].first.key() == "city=ny");
  CHECK(groups[1].first.key() == "city=sf");
  CHECK(groups[0].second == 2);
}

TEST_CASE("predicate drop is uniform when weights are cold") {
  Pattern p;
  p.preds = {{"a", "1"}, {"b", "1"}, {"c", "1"}};
  PredicateWeights w;
  std::mt19937_64 rng(2024);
  int hits[3] = {0, 0, 0};
  const int trials = 10000;
  for (int i = 0; i < trials; ++i) {
    Pattern out = remove_predicate(p, w, rng);
    std::set<std::string> kept;
    for (const auto& pr : out.preds) kept.insert(pr.attr);
    if (!kept.count("a"))
      ++hits[0];
    else if (!kept.count("b"))
      ++hits[1];
    else
      ++hits[2];
  }
  // Chi-squared against uniform, 2 dof; 9.21 is the 1% critical value.
  const double expect = trials / 3.0;
  double chi2 = 0.0;
  for (int h : hits) chi2 += (h - expect) * (h - expect) / expect;
  CHECK(chi2 < 9.21);
}

TEST_CASE("a predicate with overwhelming weight is dropped almost always") {
  Pattern p;
  p.preds = {{"a", "1"}, {"b", "1"}, {"c", "1"}};
  PredicateWeights w;
  w.scale = 1.0;
  w.update({"b", "1"}, 1000.0);
  CHECK(w.weight_of({"b", "1"}) == doctest::Approx(1001.0));
  CHECK(w.weight_of({"a", "1"}) == 1.0);
  std::mt19937_64 rng(7);
  int b_dropped = 0;
  const int trials = 2000;
  for (int i = 0; i < trials; ++i) {
    Pattern out = remove_predicate(p, w, rng);
    bool has_b = false;
    for (const auto& pr : out.preds) has_b = has_b || pr.attr == "b";
    if (!has_b) ++b_dropped;
  }
  CHECK(static_cast<double>(b_dropped) / trials > 0.9);
}

TEST_CASE("negative movement never raises a weight; successes are counted") {
  PredicateWeights w;
  w.scale = 2.0;
  w.update({"a", "0"}, -5.0);
  CHECK(w.weight_of({"a", "0"}) == 1.0);
  CHECK(w.cells.at({"a", "0"}).success_count == 0);
  w.update({"a", "0"}, 9.0);  // cumulative +4
  CHECK(w.weight_of({"a", "0"}) == doctest::Approx(3.0));
  CHECK(w.cells.at({"a", "0"}).success_count == 1);
  CHECK(w.weight_of({"zzz", "1"}) == 1.0);
}

TEST_CASE("dropping from an empty or single pattern") {
  PredicateWeights w;
  std::mt19937_64 rng(1);
  Pattern empty;
  CHECK_THROWS_AS(remove_predicate(empty, w, rng), Error);
  Pattern one;
  one.preds = {{"a", "1"}};
  Pattern out = remove_predicate(one, w, rng);
  CHECK(out.empty());
}

TEST_CASE("baseline already in range: empty pattern, nothing deleted") {
  Dataset d = marker_table();
  CausalQuery q = fixtures::golden_query(2.0, 1.5);  // fixture estimate within range
  AteEngine eng(d, q, {});
  REQUIRE(q.in_range(eng.ate()));
  PatternRepairConfig cfg;
  RepairResult r = repair_pattern(d, q, cfg, eng);
  CHECK(r.status == RepairStatus::Hit);
  CHECK(r.mode == "pattern");
  REQUIRE(r.pattern.has_value());
  CHECK(r.pattern->empty());
  CHECK(r.removed_count == 0);
  CHECK(d.n_alive() == 6);
}

TEST_CASE("tau = 0 aborts every walk before any evaluation") {
  Dataset d = marker_table();
  CausalQuery q = fixtures::golden_query(0.0, 0.1);
  AteEngine eng(d, q, {});
  PatternRepairConfig cfg;
  cfg.tau = 0.0;
  cfg.k_walks = 50;
  std::vector<PatternEval> log;
  cfg.eval_log = &log;
  RepairResult r = repair_pattern(d, q, cfg, eng);
  CHECK(r.status == RepairStatus::NoSolutionFound);
  CHECK_FALSE(r.hit_range);
  CHECK_FALSE(r.pattern.has_value());
  CHECK(r.trace.empty());
  CHECK(log.empty());
  CHECK(d.n_alive() == 6);
}

TEST_CASE("planted pattern is recovered and committed") {
  SynthSpec sc;
  sc.n = 2000;
  sc.n_confounders = 2;
  sc.n_marker_attrs = 2;
  sc.marker_levels = 3;
  sc.planted_pattern_preds = 1;
  sc.planted_pattern_fraction = 0.10;
  sc.planted_shift = 8.0;
  auto [data, truth] = generate(sc, 19);
  REQUIRE(truth.planted_pattern.has_value());
  CausalQuery q = synth_query(sc);
  AteEngine eng(data, q, {});
  const Index before = data.n_alive();
  // Only a (near-)exact landing on the post-removal estimate may count as a
  // hit: the window is far tighter than the distortion but wide enough for
  // refit round-off.
  q.target = truth.target;
  q.epsilon = std::max(1e-9, std::min(1e-6, 0.45 * std::abs(eng.ate() - truth.target)));
  REQUIRE_FALSE(q.in_range(eng.ate()));
  PatternRepairConfig cfg;
  cfg.seed = 9;
  RepairResult r = repair_pattern(data, q, cfg, eng);
  REQUIRE(r.status == RepairStatus::Hit);
  REQUIRE(r.pattern.has_value());
  CHECK(q.in_range(r.ate_after));
  CHECK(r.removed_count == static_cast<Index>(truth.planted_ids.size()));
  CHECK(data.n_alive() == before - r.removed_count);
  // The committed estimate matches a from-scratch fit on the survivors.
  AteEngine fresh(data, q, {});
  CHECK(r.ate_after == doctest::Approx(fresh.ate()).epsilon(1e-9));
  // The planted predicate set should be found exactly (it is the only
  // low-support subgroup whose removal lands in the window).
  CHECK(r.pattern->key() == truth.planted_pattern->key());
}

TEST_CASE("walk trace lines carry the walk number, pattern and support") {
  Dataset d = marker_table();
  CausalQuery q = fixtures::golden_query(0.0, 0.05);
  AteEngine eng(d, q, {});
  PatternRepairConfig cfg;
  cfg.k_walks = 3;
  cfg.tau = 1.0;
  RepairResult r = repair_pattern(d, q, cfg, eng);
  REQUIRE_FALSE(r.trace.empty());
  for (const auto& t : r.trace) {
    CAPTURE(t.action);
    CHECK(t.action.rfind("walk ", 0) == 0);
    CHECK(t.action.find(" eval ") != std::string::npos);
    CHECK(t.action.find(" support=") != std::string::npos);
  }
}

TEST_CASE("evaluation cache: repeated patterns are evaluated once") {
  Dataset d = marker_table();
  CausalQuery q = fixtures::golden_query(-3.0, 0.01);  // unreachable, walks exhaust
  AteEngine eng(d, q, {});
  PatternRepairConfig cfg;
  cfg.k_walks = 200;
  cfg.tau = 1.0;
  std::vector<PatternEval> log;
  cfg.eval_log = &log;
  RepairResult r = repair_pattern(d, q, cfg, eng);
  CHECK(r.status == RepairStatus::NoSolutionFound);
  // 200 walks over a lattice with 3 groups and <= 8 distinct patterns: far
  // more visits than fresh evaluations.
  CHECK(log.size() < 20);
  std::set<std::string> keys;
  for (const auto& ev : log) {
    CHECK(keys.insert(ev.pattern.key()).second);  // logged keys are unique
    CHECK(ev.support == static_cast<Index>(satisfies(d, ev.pattern).size()));
  }
  // Every logged estimate matches an independent probe of the same pattern.
  for (const auto& ev : log) {
    auto ids = satisfies(d, ev.pattern);
    CHECK(ev.ate == doctest::Approx(eng.probe_removed(ids, true)).epsilon(1e-9));
  }
}

TEST_CASE("best-effort result: closest estimate, then smallest support") {
  Dataset d = marker_table();
  CausalQuery q = fixtures::golden_query(-3.0, 0.01);
  AteEngine eng(d, q, {});
  PatternRepairConfig cfg;
  cfg.k_walks = 100;
  cfg.tau = 1.0;
  std::vector<PatternEval> log;
  cfg.eval_log = &log;
  RepairResult r = repair_pattern(d, q, cfg, eng);
  CHECK(r.status == RepairStatus::NoSolutionFound);
  REQUIRE(r.pattern.has_value());
  REQUIRE(!log.empty());
  double best_dist = std::numeric_limits<double>::infinity();
  Index best_support = 0;
  for (const auto& ev : log) {
    double dist = std::abs(ev.ate - q.target);
    if (dist < best_dist || (dist == best_dist && ev.support < best_support)) {
      best_dist = dist;
      best_support = ev.support;
    }
  }
  CHECK(std::abs(r.ate_after - q.target) == doctest::Approx(best_dist));
  CHECK(r.removed_count == best_support);
  CHECK(d.n_alive() == 6);  // nothing deleted on a miss
}

TEST_CASE("pattern probes leave the engine and dataset untouched on a miss") {
  Dataset d = marker_table();
  CausalQuery q = fixtures::golden_query(-3.0, 0.01);
  AteEngine eng(d, q, {});
  const double before = eng.ate();
  auto mask = d.alive_mask();
  PatternRepairConfig cfg;
  cfg.k_walks = 50;
  cfg.tau = 1.0;
  repair_pattern(d, q, cfg, eng);
  CHECK(eng.ate() == before);
  CHECK(d.alive_mask() == mask);
}

TEST_CASE("patterns never touch the outcome or (by default) the treatment") {
  SynthSpec sc;
  sc.n = 400;
  sc.n_confounders = 1;
  sc.n_marker_attrs = 1;
  sc.marker_levels = 2;
  sc.planted_pattern_preds = 1;
  sc.planted_pattern_fraction = 0.15;
  sc.planted_shift = 6.0;
  auto [data, truth] = generate(sc, 5);
  CausalQuery q = synth_query(sc);
  q.target = truth.target;
  q.epsilon = 0.1;
  AteEngine eng(data, q, {});
  PatternRepairConfig cfg;
  cfg.k_walks = 200;
  std::vector<PatternEval> log;
  cfg.eval_log = &log;
  repair_pattern(data, q, cfg, eng);
  for (const auto& ev : log)
    for (const auto& pr : ev.pattern.preds) {
      CHECK(pr.attr != q.outcome);
      CHECK(pr.attr != q.treatment);
    }
}

TEST_CASE("time limit zero reports TimeLimit") {
  Dataset d = marker_table();
  CausalQuery q = fixtures::golden_query(0.0, 0.05);
  AteEngine eng(d, q, {});
  PatternRepairConfig cfg;
  cfg.time_limit_s = 0.0;
  RepairResult r = repair_pattern(d, q, cfg, eng);
  CHECK(r.status == RepairStatus::TimeLimit);
  CHECK(d.n_alive() == 6);
}

}  // TEST_SUITE
