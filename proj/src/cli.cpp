#include "ateaudit/cli.hpp"

#include <chrono>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "CLI11.hpp"
#include "ateaudit/opt.hpp"
#include "ateaudit/synth.hpp"

namespace ateaudit {
namespace {

using nlohmann::json;

double elapsed_s(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string csv_quote(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    out += c;
    if (c == '"') out += '"';
  }
  out += '"';
  return out;
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) fail(Err::IoError, "cannot write " + path);
  f << text;
}

// Rows alive before the repair but not after, with their original values.
void write_removed_rows(const std::string& path, const Dataset& d,
                        const std::vector<std::uint8_t>& alive_before) {
  std::ofstream f(path, std::ios::binary);
  if (!f) fail(Err::IoError, "cannot write " + path);
  f << "row_id";
  for (const auto& a : d.schema().attrs) f << ',' << csv_quote(a.name);
  f << '\n';
  for (Index r = 0; r < d.n_rows(); ++r) {
    if (!alive_before[r] || d.alive(r)) continue;
    f << r;
    for (Index a = 0; a < d.schema().size(); ++a) f << ',' << csv_quote(d.col(a).cell(r));
    f << '\n';
  }
}

void write_trace(const std::string& path, const std::vector<TraceEntry>& trace) {
  std::ofstream f(path, std::ios::binary);
  if (!f) fail(Err::IoError, "cannot write " + path);
  f << "iteration,ate,action\n";
  f << std::setprecision(12);
  for (const auto& e : trace) f << e.iteration << ',' << e.ate << ',' << csv_quote(e.action) << '\n';
}

json pattern_json(const Pattern& p) {
  json arr = json::array();
  std::vector<Predicate> preds = p.preds;
  std::sort(preds.begin(), preds.end(),
            [](const Predicate& x, const Predicate& y) { return x.attr < y.attr; });
  for (const auto& pr : preds) arr.push_back({{"attribute", pr.attr}, {"value", pr.value}});
  return arr;
}

std::vector<std::string> get_strings(const TomlTable& t, const std::string& key,
                                     std::vector<std::string> fallback) {
  const TomlValue* v = t.find(key);
  if (!v) return fallback;
  std::vector<std::string> out;
  for (const auto& item : v->as_array()) out.push_back(item.as_string());
  return out;
}

}  // namespace

SchemaHint hints_of(const RunConfig& rc) {
  SchemaHint h;
  auto add = [&](const std::vector<std::string>& names, AttrKind k) {
    for (const auto& n : names)
      if (!h.emplace(n, k).second)
        fail(Err::BadConfig, "attribute hinted twice: " + n);
  };
  add(rc.hint_binary, AttrKind::NumericBinary);
  add(rc.hint_categorical, AttrKind::Categorical);
  add(rc.hint_continuous, AttrKind::NumericContinuous);
  return h;
}

EngineOptions engine_options_of(const RunConfig& rc) {
  EngineOptions eo;
  eo.estimator = estimator_from_string(rc.estimator);
  eo.update = update_from_string(rc.update);
  eo.lambda = rc.lambda;
  eo.clip = rc.clip;
  eo.fisher_batch = rc.fisher_batch;
  eo.sigma = rc.sigma;
  eo.seed = rc.seed;
  return eo;
}

TupleRepairConfig tuple_config_of(const RunConfig& rc) {
  TupleRepairConfig cfg;
  cfg.seed = rc.seed;
  cfg.refresh_period = rc.refresh_period;
  cfg.reps_per_cluster = rc.reps_per_cluster;
  if (rc.k > 0) cfg.k = rc.k;
  cfg.samples_per_cluster = rc.samples_per_cluster;
  if (rc.max_removals > 0) cfg.max_removals = static_cast<Index>(rc.max_removals);
  cfg.time_limit_s = rc.time_limit_s;
  cfg.sample_threshold = static_cast<Index>(rc.sample_threshold);
  cfg.sample_fraction = rc.sample_fraction;
  cfg.knn_k = rc.knn_k;
  return cfg;
}

PatternRepairConfig pattern_config_of(const RunConfig& rc) {
  PatternRepairConfig cfg;
  cfg.seed = rc.seed;
  cfg.k_walks = rc.k_walks;
  cfg.tau = rc.tau;
  cfg.refit_fraction = rc.refit_fraction;
  cfg.patterns_may_use_treatment = rc.allow_treatment_patterns;
  cfg.time_limit_s = rc.time_limit_s;
  cfg.sample_threshold = static_cast<Index>(rc.sample_threshold);
  cfg.sample_fraction = rc.sample_fraction;
  return cfg;
}

void apply_config(const TomlTable& t, RunConfig& rc) {
  static const std::set<std::string> known = {
      "data.path", "data.binary", "data.categorical", "data.continuous",
      "query.treatment", "query.outcome", "query.confounders", "query.target", "query.epsilon",
      "repair.mode", "repair.estimator", "repair.update", "repair.seed", "repair.lambda",
      "repair.clip", "repair.fisher_batch", "repair.sigma", "repair.refresh_period",
      "repair.reps_per_cluster", "repair.samples_per_cluster", "repair.k", "repair.max_removals",
      "repair.time_limit_s", "repair.sample_threshold", "repair.sample_fraction", "repair.knn_k",
      "repair.k_walks", "repair.tau", "repair.refit_fraction", "repair.allow_treatment_patterns",
      "repair.opt_max_rows", "repair.opt_space_limit",
      "output.json", "output.removed_csv", "output.trace_csv", "output.dump_state",
      "output.no_trace", "output.quiet"};
  for (const auto& [key, value] : t.values) {
    (void)value;
    if (!known.count(key)) fail(Err::BadConfig, "unknown config key: " + key);
  }

  rc.data_path = t.get_string("data.path", rc.data_path);
  rc.hint_binary = get_strings(t, "data.binary", rc.hint_binary);
  rc.hint_categorical = get_strings(t, "data.categorical", rc.hint_categorical);
  rc.hint_continuous = get_strings(t, "data.continuous", rc.hint_continuous);

  rc.query.treatment = t.get_string("query.treatment", rc.query.treatment);
  rc.query.outcome = t.get_string("query.outcome", rc.query.outcome);
  rc.query.confounders = get_strings(t, "query.confounders", rc.query.confounders);
  rc.query.target = t.get_number("query.target", rc.query.target);
  rc.query.epsilon = t.get_number("query.epsilon", rc.query.epsilon);

  rc.mode = t.get_string("repair.mode", rc.mode);
  rc.estimator = t.get_string("repair.estimator", rc.estimator);
  rc.update = t.get_string("repair.update", rc.update);
  rc.seed = static_cast<std::uint64_t>(t.get_int("repair.seed", static_cast<long long>(rc.seed)));
  rc.lambda = t.get_number("repair.lambda", rc.lambda);
  rc.clip = t.get_number("repair.clip", rc.clip);
  rc.fisher_batch = static_cast<int>(t.get_int("repair.fisher_batch", rc.fisher_batch));
  rc.sigma = t.get_number("repair.sigma", rc.sigma);
  rc.refresh_period = static_cast<int>(t.get_int("repair.refresh_period", rc.refresh_period));
  rc.reps_per_cluster = static_cast<int>(t.get_int("repair.reps_per_cluster", rc.reps_per_cluster));
  rc.samples_per_cluster =
      static_cast<int>(t.get_int("repair.samples_per_cluster", rc.samples_per_cluster));
  rc.k = static_cast<int>(t.get_int("repair.k", rc.k));
  rc.max_removals = t.get_int("repair.max_removals", rc.max_removals);
  rc.time_limit_s = t.get_number("repair.time_limit_s", rc.time_limit_s);
  rc.sample_threshold = t.get_int("repair.sample_threshold", rc.sample_threshold);
  rc.sample_fraction = t.get_number("repair.sample_fraction", rc.sample_fraction);
  rc.knn_k = static_cast<int>(t.get_int("repair.knn_k", rc.knn_k));
  rc.k_walks = static_cast<int>(t.get_int("repair.k_walks", rc.k_walks));
  rc.tau = t.get_number("repair.tau", rc.tau);
  rc.refit_fraction = t.get_number("repair.refit_fraction", rc.refit_fraction);
  rc.allow_treatment_patterns =
      t.get_bool("repair.allow_treatment_patterns", rc.allow_treatment_patterns);
  rc.opt_max_rows = t.get_int("repair.opt_max_rows", rc.opt_max_rows);
  rc.opt_space_limit = t.get_int("repair.opt_space_limit", rc.opt_space_limit);

  rc.out_json = t.get_string("output.json", rc.out_json);
  rc.removed_csv = t.get_string("output.removed_csv", rc.removed_csv);
  rc.trace_csv = t.get_string("output.trace_csv", rc.trace_csv);
  rc.dump_state = t.get_string("output.dump_state", rc.dump_state);
  rc.no_trace = t.get_bool("output.no_trace", rc.no_trace);
  rc.quiet = t.get_bool("output.quiet", rc.quiet);
}

RepairResult execute_repair(Dataset& d, const RunConfig& rc) {
  const CausalQuery& q = rc.query;
  q.validate(d);
  const EngineOptions eo = engine_options_of(rc);
  auto maybe_dump = [&](const AteEngine& eng) {
    if (!rc.dump_state.empty()) write_text_file(rc.dump_state, eng.state_json() + "\n");
  };

  if (rc.mode == "tuple" || rc.mode == "tuple-single-update") {
    AteEngine eng(d, q, eo);
    const TupleRepairConfig cfg = tuple_config_of(rc);
    RepairResult r = rc.mode == "tuple" ? repair_tuples(d, q, cfg, eng)
                                        : repair_tuples_single_update(d, q, cfg, eng);
    maybe_dump(eng);
    return r;
  }
  if (rc.mode == "pattern") {
    AteEngine eng(d, q, eo);
    RepairResult r = repair_pattern(d, q, pattern_config_of(rc), eng);
    maybe_dump(eng);
    return r;
  }

  if (rc.mode == "opt-tuple") {
    const auto t0 = std::chrono::steady_clock::now();
    const Index n0 = d.n_alive();
    RepairResult r;
    r.mode = "tuple";
    {
      AteEngine eng(d, q, eo);
      r.ate_before = eng.ate();
    }
    std::optional<Index> cap;
    if (rc.max_removals > 0) cap = static_cast<Index>(rc.max_removals);
    const OptTupleResult o = opt_tuple(d, q, eo, static_cast<Index>(rc.opt_max_rows), cap);
    r.removed_ids = o.removed_ids;
    r.removed_count = o.removed_ids.size();
    r.removed_fraction = n0 ? static_cast<double>(r.removed_count) / static_cast<double>(n0) : 0.0;
    r.ate_after = o.found ? o.ate_after : r.ate_before;
    r.hit_range = o.found;
    r.status = o.found ? RepairStatus::Hit : RepairStatus::NoSolutionFound;
    if (!o.removed_ids.empty()) d.delete_rows(o.removed_ids);
    if (!rc.dump_state.empty()) maybe_dump(AteEngine(d, q, eo));
    r.wall_time = elapsed_s(t0);
    return r;
  }
  if (rc.mode == "opt-pattern") {
    const auto t0 = std::chrono::steady_clock::now();
    const Index n0 = d.n_alive();
    RepairResult r;
    r.mode = "pattern";
    {
      AteEngine eng(d, q, eo);
      r.ate_before = eng.ate();
    }
    const OptPatternResult o =
        opt_pattern(d, q, eo, rc.allow_treatment_patterns, rc.opt_space_limit);
    r.pattern = o.pattern;
    r.removed_count = o.support;
    r.removed_fraction = n0 ? static_cast<double>(o.support) / static_cast<double>(n0) : 0.0;
    r.ate_after = o.found ? o.ate_after : r.ate_before;
    r.hit_range = o.found;
    r.status = o.found ? RepairStatus::Hit : RepairStatus::NoSolutionFound;
    if (o.found && !o.pattern.empty()) {
      const std::vector<Index> rows = satisfies(d, o.pattern);
      if (!rows.empty()) d.delete_rows(rows);
    }
    if (!rc.dump_state.empty()) maybe_dump(AteEngine(d, q, eo));
    r.wall_time = elapsed_s(t0);
    return r;
  }
  fail(Err::BadConfig,
       "mode must be tuple|tuple-single-update|pattern|opt-tuple|opt-pattern, got '" + rc.mode +
           "'");
}

int exit_code_for(const RepairResult& r) { return r.hit_range ? 0 : 2; }

namespace {

int cmd_repair(RunConfig& rc) {
  if (rc.data_path.empty()) fail(Err::BadConfig, "no input data: pass --data or [data] path");
  Dataset d = load_csv_file(rc.data_path, hints_of(rc));
  const std::vector<std::uint8_t> alive_before = d.alive_mask();

  RepairResult r = execute_repair(d, rc);

  if (!rc.removed_csv.empty()) write_removed_rows(rc.removed_csv, d, alive_before);
  if (!rc.trace_csv.empty()) write_trace(rc.trace_csv, r.trace);

  if (rc.no_trace) r.trace.clear();
  const std::string js = to_json(r) + "\n";
  if (rc.out_json.empty() || rc.out_json == "-")
    std::cout << js;
  else
    write_text_file(rc.out_json, js);

  if (!rc.quiet) {
    std::ostringstream msg;
    msg << "status=" << status_name(r.status) << "  " << format_shift(r.ate_before, r.ate_after)
        << "  removed=" << r.removed_count << " (" << std::fixed << std::setprecision(2)
        << 100.0 * r.removed_fraction << "%)";
    if (r.pattern && !r.pattern->empty()) msg << "  pattern: " << r.pattern->display();
    msg << "  in " << std::setprecision(2) << r.wall_time << "s";
    std::cerr << msg.str() << "\n";
  }
  return exit_code_for(r);
}

struct SynthCli {
  SynthSpec spec;
  std::uint64_t seed = 1;
  std::string out;
  std::string truth_path;
  bool quiet = false;
};

int cmd_synth(const SynthCli& sc) {
  auto [d, truth] = generate(sc.spec, sc.seed);
  write_csv_file(sc.out, d);
  if (!sc.truth_path.empty()) {
    json j;
    j["clean_ate"] = truth.clean_ate;
    j["target"] = truth.target;
    j["planted_ids"] = truth.planted_ids;
    j["planted_pattern"] = truth.planted_pattern ? pattern_json(*truth.planted_pattern) : json();
    write_text_file(sc.truth_path, j.dump(2) + "\n");
  }
  if (!sc.quiet) {
    std::ostringstream msg;
    msg << "wrote " << d.n_alive() << " rows to " << sc.out << std::setprecision(6)
        << "  clean_ate=" << truth.clean_ate << " target=" << truth.target;
    if (!truth.planted_ids.empty()) msg << " planted=" << truth.planted_ids.size();
    if (truth.planted_pattern) msg << " pattern: " << truth.planted_pattern->display();
    std::cerr << msg.str() << "\n";
  }
  return 0;
}

struct InjectCli {
  std::string kind = "duplicates";
  double level = 0.1;
  std::uint64_t seed = 1;
  std::string out;
  std::string log_path;
};

int cmd_inject(RunConfig& rc, const InjectCli& ic) {
  if (rc.data_path.empty()) fail(Err::BadConfig, "no input data: pass --data");
  const Dataset d = load_csv_file(rc.data_path, hints_of(rc));
  const NoiseKind kind = noise_kind_from_string(ic.kind);
  auto [noisy, log] = inject_noise(d, rc.query, kind, ic.level, ic.seed);
  write_csv_file(ic.out, noisy);
  if (!ic.log_path.empty()) {
    json j;
    j["kind"] = noise_kind_name(log.kind);
    j["level"] = log.level;
    j["ids"] = log.ids;
    j["sources"] = log.sources;
    write_text_file(ic.log_path, j.dump(2) + "\n");
  }
  if (!rc.quiet)
    std::cerr << "kind=" << noise_kind_name(kind) << " level=" << ic.level
              << " affected=" << log.ids.size() << " -> " << ic.out << "\n";
  return 0;
}

int cmd_inspect(RunConfig& rc) {
  if (rc.data_path.empty()) fail(Err::BadConfig, "no input data: pass --data");
  const Dataset d = load_csv_file(rc.data_path, hints_of(rc));
  std::cout << "rows=" << d.n_rows() << " alive=" << d.n_alive() << "\n";
  for (Index a = 0; a < d.schema().size(); ++a) {
    const auto& at = d.schema().attrs[a];
    std::cout << "  " << at.name << ": ";
    switch (at.kind) {
      case AttrKind::NumericBinary: std::cout << "binary"; break;
      case AttrKind::NumericContinuous: std::cout << "continuous"; break;
      case AttrKind::Categorical:
        std::cout << "categorical(" << d.col(a).labels.size() << " levels)";
        break;
    }
    std::cout << "\n";
  }
  if (!rc.query.treatment.empty() && !rc.query.outcome.empty()) {
    AteEngine eng(d, rc.query, engine_options_of(rc));
    std::cout << std::setprecision(10) << "ate(" << rc.estimator << ")=" << eng.ate() << "\n";
    if (rc.query.epsilon > 0 || rc.query.target != 0.0)
      std::cout << "in_range=" << (rc.query.in_range(eng.ate()) ? "yes" : "no") << "\n";
  }
  return 0;
}

struct BenchCli {
  std::string suite = "all";
  std::string out;
  int seeds = 2;
  bool quick = false;
  std::string estimator = "ols";
  std::uint64_t seed = 7;
};

// One scenario cell. A failed cell is recorded with its error code instead of
// aborting the sweep.
void bench_cell(std::ostream& os, const std::string& suite, const std::string& param, double value,
                const Dataset& base, const CausalQuery& q, const std::string& mode,
                const BenchCli& bc, std::uint64_t seed) {
  const Index n = base.n_alive();
  RepairResult r;
  std::string error;
  try {
    RunConfig rc;
    rc.query = q;
    rc.mode = mode;
    rc.estimator = bc.estimator;
    rc.seed = seed;
    rc.time_limit_s = 300.0;
    rc.opt_max_rows = 64;  // the opt sweep runs past the default guard
    Dataset scratch = base;
    r = execute_repair(scratch, rc);
  } catch (const Error& e) {
    error = err_name(e.code());
  }
  os << suite << ',' << param << ',' << value << ',' << n << ',' << seed << ',' << mode << ','
     << (r.hit_range ? 1 : 0) << ',' << r.removed_count << ',' << r.removed_fraction << ','
     << r.ate_before << ',' << r.ate_after << ',' << q.target << ',' << q.epsilon << ','
     << r.wall_time << ',' << error << '\n';
}

int cmd_bench(const BenchCli& bc) {
  std::ofstream file;
  if (!bc.out.empty()) {
    file.open(bc.out, std::ios::binary);
    if (!file) fail(Err::IoError, "cannot write " + bc.out);
  }
  std::ostream& os = bc.out.empty() ? std::cout : file;
  os << std::setprecision(10);
  os << "suite,param,value,n,seed,mode,hit,removed_count,removed_fraction,"
        "ate_before,ate_after,target,epsilon,wall_time_s,error\n";

  const bool all = bc.suite == "all";
  auto want = [&](const char* s) { return all || bc.suite == s; };
  const Index base_n = bc.quick ? 1000 : 2000;

  if (want("size")) {
    const std::vector<Index> sizes =
        bc.quick ? std::vector<Index>{500, 2000} : std::vector<Index>{1000, 4000, 16000};
    for (Index n : sizes)
      for (int s = 0; s < bc.seeds; ++s) {
        SynthSpec spec;
        spec.n = n;
        spec.planted_fraction = 0.05;
        auto [d, truth] = generate(spec, bc.seed + static_cast<std::uint64_t>(s));
        CausalQuery q = synth_query(spec);
        q.target = truth.target;
        q.epsilon = 0.05;
        for (const char* mode : {"tuple", "tuple-single-update"})
          bench_cell(os, "size", "n", static_cast<double>(n), d, q, mode, bc, bc.seed + s);
      }
  }

  if (want("noise")) {
    for (int s = 0; s < bc.seeds; ++s) {
      SynthSpec spec;
      spec.n = base_n;
      spec.planted_fraction = 0.05;
      auto [d, truth] = generate(spec, bc.seed + static_cast<std::uint64_t>(s));
      CausalQuery q = synth_query(spec);
      q.target = truth.target;
      q.epsilon = 0.05;
      for (NoiseKind kind : {NoiseKind::Duplicates, NoiseKind::MissingZero, NoiseKind::Outliers})
        for (double level : {0.05, 0.15, 0.25, 0.35, 0.45, 0.55}) {
          auto [noisy, log] = inject_noise(d, q, kind, level, bc.seed + 100 + s);
          for (const char* mode : {"tuple", "tuple-single-update"})
            bench_cell(os, "noise", noise_kind_name(kind), level, noisy, q, mode, bc, bc.seed + s);
        }
    }
  }

  if (want("target")) {
    for (int s = 0; s < bc.seeds; ++s) {
      SynthSpec spec;
      spec.n = base_n;
      auto [d, truth] = generate(spec, bc.seed + static_cast<std::uint64_t>(s));
      for (double delta : {0.25, 0.5, 1.0}) {
        CausalQuery q = synth_query(spec);
        q.target = truth.clean_ate - delta;
        q.epsilon = 0.05;
        bench_cell(os, "target", "shift_down", delta, d, q, "tuple", bc, bc.seed + s);
      }
    }
  }

  if (want("confounders")) {
    for (int c : {2, 4, 8})
      for (int s = 0; s < bc.seeds; ++s) {
        SynthSpec spec;
        spec.n = base_n;
        spec.n_confounders = c;
        spec.planted_fraction = 0.05;
        auto [d, truth] = generate(spec, bc.seed + static_cast<std::uint64_t>(s));
        CausalQuery q = synth_query(spec);
        q.target = truth.target;
        q.epsilon = 0.05;
        bench_cell(os, "confounders", "c", c, d, q, "tuple", bc, bc.seed + s);
      }
  }

  if (want("opt")) {
    const std::vector<Index> sizes =
        bc.quick ? std::vector<Index>{10, 20} : std::vector<Index>{10, 20, 30, 40, 50};
    for (Index n : sizes)
      for (int s = 0; s < bc.seeds; ++s) {
        SynthSpec spec;
        spec.n = n;
        spec.planted_fraction = 0.04;  // 1-2 planted rows, keeps enumeration cheap
        spec.planted_shift = 10.0;
        auto [d, truth] = generate(spec, bc.seed + static_cast<std::uint64_t>(s));
        CausalQuery q = synth_query(spec);
        q.target = truth.target;
        q.epsilon = 0.05;
        for (const char* mode : {"opt-tuple", "tuple"})
          bench_cell(os, "opt", "n", static_cast<double>(n), d, q, mode, bc, bc.seed + s);
      }
  }
  return 0;
}

}  // namespace

int run_cli(int argc, char** argv) {
  RunConfig rc;

  // The config file seeds the defaults, flags override: apply it before the
  // real parse so CLI11 only touches fields the user actually passed.
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    std::string path;
    if (a == "--config" && i + 1 < argc)
      path = argv[i + 1];
    else if (a.rfind("--config=", 0) == 0)
      path = a.substr(9);
    if (path.empty()) continue;
    try {
      apply_config(load_toml_file(path), rc);
    } catch (const Error& e) {
      std::cerr << "error: " << e.what() << "\n";
      return 1;
    }
  }

  CLI::App app{
      "stress-test a causal effect estimate: find small tuple or pattern removals "
      "that move the ATE into a target range"};
  app.require_subcommand(1);
  std::string config_sink;

  auto add_data_opts = [&](CLI::App* c) {
    c->add_option("--data", rc.data_path, "input CSV (header required)");
    c->add_option("--binary", rc.hint_binary, "force 0/1 numeric typing")->delimiter(',');
    c->add_option("--categorical", rc.hint_categorical, "force categorical typing")
        ->delimiter(',');
    c->add_option("--continuous", rc.hint_continuous, "force continuous typing")->delimiter(',');
  };
  auto add_query_opts = [&](CLI::App* c) {
    c->add_option("--treatment", rc.query.treatment, "binary treatment attribute");
    c->add_option("--outcome", rc.query.outcome, "numeric outcome attribute");
    c->add_option("--confounders", rc.query.confounders, "confounder attributes")->delimiter(',');
  };

  CLI::App* rep = app.add_subcommand("repair", "run a removal search against a CSV");
  rep->add_option("--config", config_sink, "TOML config file (applied before flags)");
  add_data_opts(rep);
  add_query_opts(rep);
  rep->add_option("--target", rc.query.target, "target ATE");
  rep->add_option("--epsilon", rc.query.epsilon, "half-width of the accepted interval");
  rep->add_option("--mode", rc.mode, "search strategy")
      ->check(CLI::IsMember(
          {"tuple", "tuple-single-update", "pattern", "opt-tuple", "opt-pattern"}));
  rep->add_option("--estimator", rc.estimator, "ols or ipw")
      ->check(CLI::IsMember({"ols", "ipw"}));
  rep->add_option("--update", rc.update, "incremental update flavor")
      ->check(CLI::IsMember({"exact", "neumann", "refit"}));
  rep->add_option("--seed", rc.seed, "RNG seed");
  rep->add_option("--lambda", rc.lambda, "IPW ridge strength");
  rep->add_option("--clip", rc.clip, "IPW propensity clip");
  rep->add_option("--fisher-batch", rc.fisher_batch, "IPW unlearning batch size");
  rep->add_option("--sigma", rc.sigma, "IPW unlearning noise scale");
  rep->add_option("--refresh-period", rc.refresh_period, "iterations between rescores");
  rep->add_option("--reps-per-cluster", rc.reps_per_cluster, "cached representatives per cluster");
  rep->add_option("--samples-per-cluster", rc.samples_per_cluster, "sample size per rescore");
  rep->add_option("--k", rc.k, "cluster count (0 = automatic)");
  rep->add_option("--max-removals", rc.max_removals, "removal budget (0 = 20% of rows)");
  rep->add_option("--time-limit", rc.time_limit_s, "wall-clock limit in seconds");
  rep->add_option("--sample-threshold", rc.sample_threshold,
                  "row count above which the search runs on a sample");
  rep->add_option("--sample-fraction", rc.sample_fraction, "sample share for huge inputs");
  rep->add_option("--knn-k", rc.knn_k, "neighbors per sampled removal");
  rep->add_option("--k-walks", rc.k_walks, "pattern walks before giving up");
  rep->add_option("--tau", rc.tau, "max pattern support as a share of rows");
  rep->add_option("--refit-fraction", rc.refit_fraction,
                  "pattern support share beyond which probes refit");
  rep->add_flag("--allow-treatment-patterns", rc.allow_treatment_patterns,
                "let patterns constrain the treatment attribute");
  rep->add_option("--opt-max-rows", rc.opt_max_rows, "row cap for exhaustive tuple search");
  rep->add_option("--opt-space-limit", rc.opt_space_limit,
                  "combination cap for exhaustive pattern search");
  rep->add_option("--out", rc.out_json, "write the result JSON here ('-' = stdout)");
  rep->add_option("--removed-csv", rc.removed_csv, "write removed rows here");
  rep->add_option("--trace-csv", rc.trace_csv, "write the search trace here");
  rep->add_option("--dump-state", rc.dump_state, "write estimator internals here (JSON)");
  rep->add_flag("--no-trace", rc.no_trace, "omit the trace from the result JSON");
  rep->add_flag("--quiet", rc.quiet, "suppress the stderr summary");

  SynthCli sc;
  CLI::App* syn = app.add_subcommand("synth", "generate a synthetic benchmark CSV");
  syn->add_option("--n", sc.spec.n, "base row count");
  syn->add_option("--confounders", sc.spec.n_confounders, "confounder count");
  syn->add_option("--effect", sc.spec.treatment_effect, "true treatment effect");
  syn->add_option("--confounder-coef", sc.spec.confounder_coef, "confounder weight in the outcome");
  syn->add_option("--propensity-coef", sc.spec.propensity_coef,
                  "confounder weight in the treatment draw");
  syn->add_option("--noise-sd", sc.spec.noise_sd, "outcome noise sd");
  syn->add_option("--markers", sc.spec.n_marker_attrs, "categorical marker attributes");
  syn->add_option("--marker-levels", sc.spec.marker_levels, "levels per marker");
  syn->add_option("--planted-fraction", sc.spec.planted_fraction,
                  "share of appended outcome-shifted rows");
  syn->add_option("--planted-shift", sc.spec.planted_shift, "outcome shift of planted rows");
  syn->add_option("--planted-down-fraction", sc.spec.planted_down_fraction,
                  "share of planted rows shifted down instead of up");
  syn->add_option("--pattern-preds", sc.spec.planted_pattern_preds,
                  "predicates in a planted pattern (0 = none)");
  syn->add_option("--pattern-fraction", sc.spec.planted_pattern_fraction,
                  "share of rows carrying the planted pattern");
  syn->add_option("--seed", sc.seed, "RNG seed");
  syn->add_option("--out", sc.out, "output CSV")->required();
  syn->add_option("--truth", sc.truth_path, "write ground truth JSON here");
  syn->add_flag("--quiet", sc.quiet, "suppress the stderr summary");

  InjectCli ic;
  CLI::App* inj = app.add_subcommand("inject", "corrupt a CSV with benchmark noise");
  add_data_opts(inj);
  add_query_opts(inj);
  inj->add_option("--kind", ic.kind, "duplicates | missing_zero | outliers")
      ->check(CLI::IsMember({"duplicates", "missing_zero", "outliers"}));
  inj->add_option("--level", ic.level, "affected share of rows");
  inj->add_option("--seed", ic.seed, "RNG seed");
  inj->add_option("--out", ic.out, "output CSV")->required();
  inj->add_option("--log", ic.log_path, "write affected row ids here (JSON)");
  inj->add_flag("--quiet", rc.quiet, "suppress the stderr summary");

  CLI::App* ins = app.add_subcommand("inspect", "print schema and baseline estimate");
  add_data_opts(ins);
  add_query_opts(ins);
  ins->add_option("--target", rc.query.target, "target ATE");
  ins->add_option("--epsilon", rc.query.epsilon, "half-width of the accepted interval");
  ins->add_option("--estimator", rc.estimator, "ols or ipw")
      ->check(CLI::IsMember({"ols", "ipw"}));

  BenchCli bc;
  CLI::App* ben = app.add_subcommand("bench", "run the benchmark sweeps, emit long CSV");
  ben->add_option("--suite", bc.suite, "which sweep to run")
      ->check(CLI::IsMember({"all", "size", "noise", "target", "confounders", "opt"}));
  ben->add_option("--out", bc.out, "output CSV (default stdout)");
  ben->add_option("--seeds", bc.seeds, "replicates per configuration");
  ben->add_flag("--quick", bc.quick, "smaller sizes for a fast pass");
  ben->add_option("--estimator", bc.estimator, "ols or ipw")
      ->check(CLI::IsMember({"ols", "ipw"}));
  ben->add_option("--seed", bc.seed, "base RNG seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (rep->parsed()) return cmd_repair(rc);
    if (syn->parsed()) return cmd_synth(sc);
    if (inj->parsed()) return cmd_inject(rc, ic);
    if (ins->parsed()) return cmd_inspect(rc);
    if (ben->parsed()) return cmd_bench(bc);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}

}  // namespace ateaudit
