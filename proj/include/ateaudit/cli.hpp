#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ateaudit/csv.hpp"
#include "ateaudit/engine.hpp"
#include "ateaudit/pattern_repair.hpp"
#include "ateaudit/repair_result.hpp"
#include "ateaudit/toml_lite.hpp"
#include "ateaudit/tuple_repair.hpp"

namespace ateaudit {

// Everything a repair run needs, fed from an optional TOML config file and
// then overridden by command-line flags (flags win key by key).
struct RunConfig {
  // data
  std::string data_path;
  std::vector<std::string> hint_binary;
  std::vector<std::string> hint_categorical;
  std::vector<std::string> hint_continuous;

  // query
  CausalQuery query;

  // repair
  std::string mode = "tuple";  // tuple | tuple-single-update | pattern | opt-tuple | opt-pattern
  std::string estimator = "ols";
  std::string update = "exact";
  std::uint64_t seed = 42;
  double lambda = 1e-4;
  double clip = 0.01;
  int fisher_batch = 512;
  double sigma = 0.0;

  // tuple search
  int refresh_period = 10;
  int reps_per_cluster = 2;
  int samples_per_cluster = 5;
  int k = 0;                    // 0 = automatic
  long long max_removals = 0;   // 0 = default (20% of rows)
  double time_limit_s = 36000.0;
  long long sample_threshold = 500000;
  double sample_fraction = 0.10;
  int knn_k = 100;

  // pattern search
  int k_walks = 1000;
  double tau = 0.20;
  double refit_fraction = 0.05;
  bool allow_treatment_patterns = false;

  // exhaustive baselines
  long long opt_max_rows = 30;
  long long opt_space_limit = 1000000;

  // output
  std::string out_json;  // empty or "-" = stdout
  std::string removed_csv;
  std::string trace_csv;
  std::string dump_state;  // estimator internals as JSON, for debugging
  bool no_trace = false;   // strip the trace from the result JSON
  bool quiet = false;
};

SchemaHint hints_of(const RunConfig& rc);
EngineOptions engine_options_of(const RunConfig& rc);
TupleRepairConfig tuple_config_of(const RunConfig& rc);
PatternRepairConfig pattern_config_of(const RunConfig& rc);

// Folds a parsed config file into `rc`. Unknown keys are BadConfig errors.
void apply_config(const TomlTable& t, RunConfig& rc);

// Runs the configured repair mode against `d` (removals are committed to the
// dataset). BadConfig on an unknown mode.
RepairResult execute_repair(Dataset& d, const RunConfig& rc);

// 0 when the target interval was hit, 2 for a valid run that missed it.
int exit_code_for(const RepairResult& r);

// Full command-line program (subcommands repair / bench / synth / inject /
// inspect). Returns the process exit code; errors are reported on stderr
// and yield 1.
int run_cli(int argc, char** argv);

}  // namespace ateaudit
