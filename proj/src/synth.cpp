#include "ateaudit/synth.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "ateaudit/ols.hpp"
#include "ateaudit/rng.hpp"

namespace ateaudit {

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

std::string z_name(int j) { return "z" + std::to_string(j + 1); }
std::string seg_name(int j) { return "seg" + std::to_string(j + 1); }

}  // namespace

CausalQuery synth_query(const SynthSpec& spec) {
  CausalQuery q;
  q.treatment = "T";
  q.outcome = "O";
  for (int j = 0; j < spec.n_confounders; ++j) q.confounders.push_back(z_name(j));
  return q;
}

std::pair<Dataset, GroundTruth> generate(const SynthSpec& spec, std::uint64_t seed) {
  if (spec.n < 2) fail(Err::BadConfig, "need n >= 2");
  if (spec.n_confounders < 0 || spec.marker_levels < 2)
    fail(Err::BadConfig, "bad confounder/marker configuration");
  if (spec.planted_fraction > 0 && spec.planted_pattern_preds > 0)
    fail(Err::BadConfig, "appended planting and pattern planting are mutually exclusive");
  if (spec.planted_pattern_preds > spec.n_marker_attrs)
    fail(Err::BadConfig, "pattern planting needs at least as many marker attributes");
  if (spec.planted_pattern_preds > 2)
    fail(Err::BadConfig, "pattern planting supports 1 or 2 predicates");

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);

  const Index n = spec.n;
  const int nz = spec.n_confounders;
  const int nm = spec.n_marker_attrs;
  const int L = spec.marker_levels;

  std::vector<Eigen::VectorXd> z(nz, Eigen::VectorXd(static_cast<Eigen::Index>(n)));
  std::vector<std::vector<std::int32_t>> seg(nm);
  Eigen::VectorXd tv(static_cast<Eigen::Index>(n)), ov(static_cast<Eigen::Index>(n));
  GroundTruth truth;

  const bool plant_pattern = spec.planted_pattern_preds > 0;
  const std::int32_t reserved = static_cast<std::int32_t>(L - 1);

  for (Index i = 0; i < n; ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    double zsum = 0.0;
    for (int j = 0; j < nz; ++j) {
      z[j][ii] = gauss(rng);
      zsum += z[j][ii];
    }
    const double t = rand01(rng()) < sigmoid(spec.propensity_coef * zsum) ? 1.0 : 0.0;
    tv[ii] = t;
    ov[ii] = spec.treatment_effect * t + spec.confounder_coef * zsum + spec.noise_sd * gauss(rng);

    bool in_pattern = false;
    if (plant_pattern) in_pattern = rand01(rng()) < spec.planted_pattern_fraction;
    for (int j = 0; j < nm; ++j) {
      std::int32_t v;
      if (plant_pattern && j < spec.planted_pattern_preds) {
        if (in_pattern) {
          v = reserved;
        } else if (spec.planted_pattern_preds == 1 && j == 0) {
          // keep the reserved level exclusive to planted rows
          v = static_cast<std::int32_t>(pick_below(rng, static_cast<Index>(L - 1)));
        } else {
          v = static_cast<std::int32_t>(pick_below(rng, static_cast<Index>(L)));
        }
      } else {
        v = static_cast<std::int32_t>(pick_below(rng, static_cast<Index>(L)));
      }
      seg[j].push_back(v);
    }
    if (plant_pattern && spec.planted_pattern_preds == 2 && !in_pattern && seg[0][i] == reserved &&
        seg[1][i] == reserved) {
      // reject the reserved combination for unplanted rows
      seg[1][i] = static_cast<std::int32_t>(pick_below(rng, static_cast<Index>(L - 1)));
    }
    if (plant_pattern && in_pattern) truth.planted_ids.push_back(i);
  }

  // Appended noisy rows: treated, outcome shifted off the clean model.
  std::vector<Index> appended;
  if (spec.planted_fraction > 0.0) {
    const Index m =
        static_cast<Index>(std::ceil(spec.planted_fraction * static_cast<double>(n)));
    const Index m_down =
        static_cast<Index>(std::llround(spec.planted_down_fraction * static_cast<double>(m)));
    const Index total = n + m;
    for (auto& zj : z) zj.conservativeResize(static_cast<Eigen::Index>(total));
    tv.conservativeResize(static_cast<Eigen::Index>(total));
    ov.conservativeResize(static_cast<Eigen::Index>(total));
    for (Index i = n; i < total; ++i) {
      const auto ii = static_cast<Eigen::Index>(i);
      double zsum = 0.0;
      for (int j = 0; j < nz; ++j) {
        z[j][ii] = gauss(rng);
        zsum += z[j][ii];
      }
      tv[ii] = 1.0;
      const double shift = (i - n < m_down) ? -spec.planted_shift : spec.planted_shift;
      ov[ii] = spec.treatment_effect + spec.confounder_coef * zsum +
               spec.noise_sd * gauss(rng) + shift;
      for (int j = 0; j < nm; ++j)
        seg[j].push_back(static_cast<std::int32_t>(pick_below(rng, static_cast<Index>(L))));
      appended.push_back(i);
    }
    truth.planted_ids = appended;
  }

  // Assemble columns: z1..zc, seg1.., T, O.
  Schema schema;
  std::vector<Column> cols;
  for (int j = 0; j < nz; ++j) {
    schema.attrs.push_back({z_name(j), AttrKind::NumericContinuous});
    Column c;
    c.kind = AttrKind::NumericContinuous;
    c.num = z[j];
    cols.push_back(std::move(c));
  }
  for (int j = 0; j < nm; ++j) {
    schema.attrs.push_back({seg_name(j), AttrKind::Categorical});
    Column c;
    c.kind = AttrKind::Categorical;
    for (int l = 0; l < L; ++l) c.labels.push_back("v" + std::to_string(l));
    c.codes = seg[j];
    cols.push_back(std::move(c));
  }
  {
    schema.attrs.push_back({"T", AttrKind::NumericBinary});
    Column c;
    c.kind = AttrKind::NumericBinary;
    c.num = tv;
    cols.push_back(std::move(c));
  }

  CausalQuery q = synth_query(spec);
  Dataset clean_probe;  // pre-shift dataset for ground-truth fits

  if (plant_pattern) {
    // Shift planted rows' outcomes in place.
    Eigen::VectorXd o_shifted = ov;
    for (Index id : truth.planted_ids)
      o_shifted[static_cast<Eigen::Index>(id)] += spec.planted_shift;
    Schema schema_o = schema;
    schema_o.attrs.push_back({"O", AttrKind::NumericContinuous});
    std::vector<Column> cols_clean = cols;
    {
      Column c;
      c.kind = AttrKind::NumericContinuous;
      c.num = ov;
      cols_clean.push_back(std::move(c));
    }
    std::vector<Column> cols_shifted = cols;
    {
      Column c;
      c.kind = AttrKind::NumericContinuous;
      c.num = o_shifted;
      cols_shifted.push_back(std::move(c));
    }
    Dataset clean(schema_o, std::move(cols_clean));
    Dataset shifted(schema_o, std::move(cols_shifted));
    truth.clean_ate = ate(fit_ols(clean, q));
    if (spec.planted_pattern_preds >= 1)
      truth.planted_pattern = Pattern{{{seg_name(0), "v" + std::to_string(L - 1)}}};
    if (spec.planted_pattern_preds == 2)
      truth.planted_pattern->preds.push_back({seg_name(1), "v" + std::to_string(L - 1)});
    // Target: exact ATE once the planted subpopulation is gone.
    Dataset probe = shifted;  // copy; deletions here don't reach the caller
    probe.delete_rows(truth.planted_ids);
    truth.target = ate(fit_ols(probe, q));
    return {std::move(shifted), std::move(truth)};
  }

  Schema schema_o = schema;
  schema_o.attrs.push_back({"O", AttrKind::NumericContinuous});
  {
    Column c;
    c.kind = AttrKind::NumericContinuous;
    c.num = ov;
    cols.push_back(std::move(c));
  }
  Dataset full(schema_o, std::move(cols));
  if (!appended.empty()) {
    Dataset probe = full;
    probe.delete_rows(appended);
    truth.clean_ate = ate(fit_ols(probe, q));
  } else {
    truth.clean_ate = ate(fit_ols(full, q));
  }
  truth.target = truth.clean_ate;
  return {std::move(full), std::move(truth)};
}

NoiseKind noise_kind_from_string(const std::string& s) {
  if (s == "duplicates") return NoiseKind::Duplicates;
  if (s == "missing_zero") return NoiseKind::MissingZero;
  if (s == "outliers") return NoiseKind::Outliers;
  fail(Err::BadConfig, "noise kind must be duplicates|missing_zero|outliers, got '" + s + "'");
}

const char* noise_kind_name(NoiseKind k) {
  switch (k) {
    case NoiseKind::Duplicates: return "duplicates";
    case NoiseKind::MissingZero: return "missing_zero";
    case NoiseKind::Outliers: return "outliers";
  }
  return "?";
}

std::pair<Dataset, InjectionLog> inject_noise(const Dataset& d, const CausalQuery& q,
                                              NoiseKind kind, double level, std::uint64_t seed) {
  if (!(level >= 0.0)) fail(Err::BadConfig, "noise level must be >= 0");
  q.validate(d);
  std::mt19937_64 rng(seed);
  const Index n = d.n_alive();
  const Index m = static_cast<Index>(std::ceil(level * static_cast<double>(n)));
  InjectionLog log;
  log.kind = kind;
  log.level = level;

  std::vector<Index> alive = d.alive_rows();
  auto preserve_dead = [&](Dataset& out) {
    std::vector<Index> dead;
    for (Index r = 0; r < d.n_rows(); ++r)
      if (!d.alive(r)) dead.push_back(r);
    if (!dead.empty()) out.delete_rows(dead);
  };

  if (kind == NoiseKind::Duplicates) {
    // Uniform draws with replacement, appended as new rows.
    for (Index j = 0; j < m; ++j) {
      log.sources.push_back(alive[pick_below(rng, alive.size())]);
      log.ids.push_back(d.n_rows() + j);
    }
    std::vector<Column> cols(d.schema().size());
    for (Index a = 0; a < d.schema().size(); ++a) {
      const Column& src = d.col(a);
      Column& c = cols[a];
      c.kind = src.kind;
      c.labels = src.labels;
      if (c.kind == AttrKind::Categorical) {
        c.codes = src.codes;
        c.codes.reserve(c.codes.size() + m);
        for (Index s : log.sources) c.codes.push_back(src.codes[s]);
      } else {
        c.num.resize(src.num.size() + static_cast<Eigen::Index>(m));
        c.num.head(src.num.size()) = src.num;
        for (Index j = 0; j < m; ++j)
          c.num[src.num.size() + static_cast<Eigen::Index>(j)] =
              src.num[static_cast<Eigen::Index>(log.sources[j])];
      }
    }
    Dataset out(d.schema(), std::move(cols));
    preserve_dead(out);
    return {std::move(out), std::move(log)};
  }

  std::vector<Column> cols(d.schema().size());
  for (Index a = 0; a < d.schema().size(); ++a) cols[a] = d.col(a);

  if (kind == NoiseKind::MissingZero) {
    log.ids = sample_without_replacement(std::move(alive), m, rng);
    std::sort(log.ids.begin(), log.ids.end());
    for (const auto& zname : q.confounders) {
      const Index a = d.schema().require(zname);
      Column& c = cols[a];
      if (c.kind == AttrKind::Categorical) {
        const std::int32_t zero = c.intern("0");
        for (Index r : log.ids) c.codes[r] = zero;
      } else {
        for (Index r : log.ids) c.num[static_cast<Eigen::Index>(r)] = 0.0;
      }
    }
  } else {  // Outliers
    const Index oa = d.schema().require(q.outcome);
    double mean = 0.0, var = 0.0;
    for (Index r : alive) mean += d.col(oa).num[static_cast<Eigen::Index>(r)];
    mean /= static_cast<double>(alive.size());
    for (Index r : alive) {
      const double dv = d.col(oa).num[static_cast<Eigen::Index>(r)] - mean;
      var += dv * dv;
    }
    const double sd = std::sqrt(var / static_cast<double>(alive.size()));
    // Draw each row's sign immediately after selecting it so a lower level's
    // (row, sign) pairs are a prefix of a higher level's under the same seed.
    Column& oc = cols[oa];
    std::vector<Index> pool = alive;
    const Index take = std::min(m, pool.size());
    for (Index i = 0; i < take; ++i) {
      const Index j = i + pick_below(rng, pool.size() - i);
      std::swap(pool[i], pool[j]);
      const double sign = rand01(rng()) < 0.5 ? -1.0 : 1.0;
      oc.num[static_cast<Eigen::Index>(pool[i])] = mean + sign * 10.0 * sd;
      log.ids.push_back(pool[i]);
    }
    std::sort(log.ids.begin(), log.ids.end());
  }

  Dataset out(d.schema(), std::move(cols));
  preserve_dead(out);
  return {std::move(out), std::move(log)};
}

}  // namespace ateaudit
