#pragma once

#include <cstdint>
#include <optional>

#include "ateaudit/dataset.hpp"

namespace ateaudit {

// Synthetic benchmark family. Base draw: confounders z_1..z_c ~ N(0,1) iid,
// treatment t ~ Bernoulli(sigmoid(propensity_coef * sum z)), outcome
// o = treatment_effect * t + confounder_coef * sum z + N(0, noise_sd).
// Optional categorical marker attributes (uniform levels, no outcome role)
// enlarge the pattern space.
//
// Planted distortions, mutually exclusive:
//  * planted_fraction > 0: ceil(fraction * n) extra treated rows are appended
//    whose outcomes are shifted by +planted_shift (a planted_down_fraction
//    share get -planted_shift instead). Removing exactly these rows restores
//    the clean data, so ground truth carries their ids and the clean ATE as
//    the natural target.
//  * planted_pattern_preds > 0: a marker-level combination is reserved;
//    roughly planted_pattern_fraction of rows get that combination and their
//    outcomes shifted by +planted_shift. Ground truth carries the pattern and
//    the exact post-removal ATE as the target.
struct SynthSpec {
  Index n = 10000;
  int n_confounders = 3;
  double treatment_effect = 2.0;
  double confounder_coef = 1.0;
  double propensity_coef = 1.0;
  double noise_sd = 1.0;

  int n_marker_attrs = 0;
  int marker_levels = 4;

  double planted_fraction = 0.0;
  double planted_shift = 10.0;
  double planted_down_fraction = 0.0;

  int planted_pattern_preds = 0;
  double planted_pattern_fraction = 0.10;
};

struct GroundTruth {
  double clean_ate = 0.0;  // difference-in-means fit on the undistorted rows
  double target = 0.0;     // value a perfect repair restores
  std::vector<Index> planted_ids;
  std::optional<Pattern> planted_pattern;
};

// Deterministic for (spec, seed). Column names: z1..zc, seg1.., T, O.
std::pair<Dataset, GroundTruth> generate(const SynthSpec& spec, std::uint64_t seed);

// Query matching the generated schema (all confounders, target/epsilon 0).
CausalQuery synth_query(const SynthSpec& spec);

enum class NoiseKind { Duplicates, MissingZero, Outliers };

NoiseKind noise_kind_from_string(const std::string& s);
const char* noise_kind_name(NoiseKind k);

struct InjectionLog {
  NoiseKind kind = NoiseKind::Duplicates;
  double level = 0.0;
  std::vector<Index> ids;      // affected rows (appended ids for duplicates)
  std::vector<Index> sources;  // duplicates only: the copied rows
};

// Returns a modified copy (the input is never mutated). m = ceil(level * n_alive):
//  * duplicates: append m copies of uniformly drawn alive rows;
//  * missing_zero: in m distinct alive rows set every confounder cell to zero
//    (categorical confounders get the literal category "0");
//  * outliers: in m distinct alive rows replace the outcome with
//    mean(O) +/- 10 std(O), sign random per row.
// Row selection is a seeded prefix draw, so for a fixed seed the affected
// rows at a lower level are a subset of those at a higher level.
std::pair<Dataset, InjectionLog> inject_noise(const Dataset& d, const CausalQuery& q,
                                              NoiseKind kind, double level, std::uint64_t seed);

}  // namespace ateaudit
