#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "ateaudit/cli.hpp"
#include "ateaudit/ols.hpp"
#include "doctest.h"
#include "support/fixtures.hpp"

using namespace ateaudit;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Capture {
  std::string out, err;
};

int run(std::vector<std::string> args, Capture* cap = nullptr) {
  args.insert(args.begin(), "ateaudit");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  std::ostringstream co, ce;
  auto* old_out = std::cout.rdbuf(co.rdbuf());
  auto* old_err = std::cerr.rdbuf(ce.rdbuf());
  const int rc = run_cli(static_cast<int>(argv.size()), argv.data());
  std::cout.rdbuf(old_out);
  std::cerr.rdbuf(old_err);
  if (cap) {
    cap->out = co.str();
    cap->err = ce.str();
  }
  return rc;
}

std::string tmp_path(const std::string& name) {
  fs::create_directories("cli_tmp");
  return (fs::path("cli_tmp") / name).string();
}

std::string write_golden_csv() {
  const std::string path = tmp_path("golden.csv");
  std::ofstream f(path, std::ios::binary);
  f << fixtures::golden_csv();
  return path;
}

std::string slurp(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  REQUIRE(f.good());
  std::ostringstream buf;
  buf << f.rdbuf();
  return buf.str();
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("shift formatting") {
  CHECK(format_shift(2.41, 0.11) == "ATE 2.41 -> 0.11 (down 95.4%)");
  CHECK(format_shift(1.0, 1.25) == "ATE 1 -> 1.25 (up 25%)");
  CHECK(format_shift(0.0, 1.5) == "ATE 0 -> 1.5");  // no percentage from zero
  CHECK(format_shift(1.25, 0.0) == "ATE 1.25 -> 0 (down 100%)");
  CHECK(format_shift(-2.0, -1.0) == "ATE -2 -> -1 (up 50%)");
}

TEST_CASE("exit codes follow the hit flag") {
  RepairResult r;
  r.hit_range = true;
  CHECK(exit_code_for(r) == 0);
  r.hit_range = false;
  CHECK(exit_code_for(r) == 2);
}

TEST_CASE("hint mapping and duplicate detection") {
  RunConfig rc;
  rc.hint_binary = {"t"};
  rc.hint_categorical = {"g"};
  rc.hint_continuous = {"x"};
  SchemaHint h = hints_of(rc);
  CHECK(h.at("t") == AttrKind::NumericBinary);
  CHECK(h.at("g") == AttrKind::Categorical);
  CHECK(h.at("x") == AttrKind::NumericContinuous);
  rc.hint_continuous.push_back("t");
  CHECK_THROWS_AS(hints_of(rc), Error);
}

TEST_CASE("repair hits the window and reports the removal") {
  const std::string data = write_golden_csv();
  const std::string out = tmp_path("hit.json");
  Capture cap;
  const int rc = run({"repair", "--data", data, "--treatment", "T", "--outcome", "O",
                      "--target", "0", "--epsilon", "1e-9", "--mode", "tuple", "--k", "7",
                      "--samples-per-cluster", "7", "--out", out},
                     &cap);
  CHECK(rc == 0);
  json j = json::parse(slurp(out));
  CHECK(j["mode"] == "tuple");
  CHECK(j["removed_ids"] == json::array({2}));
  CHECK(j["removed_count"] == 1);
  CHECK(j["ate_before"].get<double>() == 1.25);
  CHECK(std::abs(j["ate_after"].get<double>()) < 1e-12);
  CHECK(j["hit_range"] == true);
  CHECK(j["removed_fraction"].get<double>() == doctest::Approx(1.0 / 7));
  CHECK_FALSE(j["trace"].empty());
  CHECK(j["trace"][0].contains("iteration"));
  CHECK(j["wall_time"].get<double>() >= 0.0);
  // stderr one-liner
  CHECK(cap.err.rfind("status=Hit  ATE 1.25 -> 0 (down 100%)", 0) == 0);
  CHECK(cap.err.find("removed=1 (14.29%)") != std::string::npos);
}

TEST_CASE("a search that cannot reach the window exits 2") {
  const std::string data = write_golden_csv();
  Capture cap;
  const int rc = run({"repair", "--data", data, "--treatment", "T", "--outcome", "O",
                      "--target", "-50", "--epsilon", "0.1", "--max-removals", "2",
                      "--k", "7", "--samples-per-cluster", "7", "--out",
                      tmp_path("miss.json"), "--quiet"},
                     &cap);
  CHECK(rc == 2);
  json j = json::parse(slurp(tmp_path("miss.json")));
  CHECK(j["hit_range"] == false);
  CHECK(cap.err.empty());  // --quiet suppresses the summary
}

TEST_CASE("errors exit 1 with a message") {
  Capture cap;
  const int rc = run({"repair", "--data", "no_such_file.csv", "--treatment", "T",
                      "--outcome", "O"},
                     &cap);
  CHECK(rc == 1);
  CHECK(cap.err.find("error:") != std::string::npos);
  // Unknown enum values are rejected by the argument parser itself.
  CHECK(run({"repair", "--data", "x.csv", "--mode", "bogus"}) != 0);
  // A repair without any input data is refused.
  CHECK(run({"repair", "--treatment", "T", "--outcome", "O"}) == 1);
}

TEST_CASE("config file seeds the run, flags override") {
  const std::string data = write_golden_csv();
  const std::string cfg = tmp_path("run.toml");
  {
    std::ofstream f(cfg, std::ios::binary);
    f << "[data]\npath = \"" << data << "\"\n"
      << "[query]\ntreatment = \"T\"\noutcome = \"O\"\ntarget = 0.0\nepsilon = 99.0\n"
      << "[repair]\nmode = \"tuple\"\nk = 7\nsamples_per_cluster = 7\n"
      << "[output]\nquiet = true\n";
  }
  const std::string out1 = tmp_path("cfg1.json");
  REQUIRE(run({"repair", "--config", cfg, "--out", out1}) == 0);
  json j1 = json::parse(slurp(out1));
  CHECK(j1["removed_count"] == 0);  // epsilon 99: baseline already in range

  const std::string out2 = tmp_path("cfg2.json");
  REQUIRE(run({"repair", "--config", cfg, "--epsilon", "1e-9", "--out", out2}) == 0);
  json j2 = json::parse(slurp(out2));
  CHECK(j2["removed_count"] == 1);  // flag forced a real search
  CHECK(j2["removed_ids"] == json::array({2}));

  // Broken config files surface as exit 1 before any parsing of other flags.
  const std::string bad = tmp_path("bad.toml");
  {
    std::ofstream f(bad, std::ios::binary);
    f << "[repair]\nbogus = 1\n";
  }
  Capture cap;
  CHECK(run({"repair", "--config", bad, "--out", out1}, &cap) == 1);
  CHECK(cap.err.find("bogus") != std::string::npos);
}

TEST_CASE("side outputs: removed rows, trace csv, state dump, no-trace") {
  const std::string data = write_golden_csv();
  const std::string out = tmp_path("side.json");
  const std::string removed = tmp_path("removed.csv");
  const std::string trace = tmp_path("trace.csv");
  const std::string state = tmp_path("state.json");
  REQUIRE(run({"repair", "--data", data, "--treatment", "T", "--outcome", "O", "--target",
               "0", "--epsilon", "1e-9", "--k", "7", "--samples-per-cluster", "7",
               "--out", out, "--removed-csv", removed, "--trace-csv", trace,
               "--dump-state", state, "--no-trace", "--quiet"}) == 0);
  // --no-trace strips the JSON trace but the CSV side channel keeps it.
  json j = json::parse(slurp(out));
  CHECK(j["trace"].empty());
  const std::string tr = slurp(trace);
  CHECK(tr.rfind("iteration,ate,action", 0) == 0);
  CHECK(tr.find("remove id=2") != std::string::npos);
  // Removed rows carry their original values.
  CHECK(slurp(removed) == "row_id,T,O\n2,1,5\n");
  // The state dump exposes the estimator internals.
  json st = json::parse(slurp(state));
  CHECK(st["estimator"] == "ols");
  CHECK(st.contains("beta"));
  CHECK(st.contains("gram"));
}

TEST_CASE("synth then repair round-trips through files") {
  const std::string data = tmp_path("synth.csv");
  const std::string truth_path = tmp_path("truth.json");
  Capture cap;
  REQUIRE(run({"synth", "--n", "300", "--confounders", "2", "--planted-fraction", "0.1",
               "--planted-shift", "10", "--seed", "3", "--out", data, "--truth", truth_path},
              &cap) == 0);
  CHECK(cap.err.find("wrote 330 rows") != std::string::npos);
  json truth = json::parse(slurp(truth_path));
  REQUIRE(truth.contains("target"));
  CHECK(truth["planted_ids"].size() == 30);
  CHECK(truth["planted_pattern"].is_null());

  std::ostringstream tgt;
  tgt.precision(17);
  tgt << truth["target"].get<double>();
  const std::string out = tmp_path("roundtrip.json");
  const int rc = run({"repair", "--data", data, "--treatment", "T", "--outcome", "O",
                      "--confounders", "z1,z2", "--target", tgt.str(), "--epsilon", "0.1",
                      "--seed", "9", "--out", out, "--quiet"});
  REQUIRE(rc == 0);
  json j = json::parse(slurp(out));
  REQUIRE(j["hit_range"] == true);

  // The reported estimate matches an in-process refit of the survivors.
  std::ifstream f(data, std::ios::binary);
  Dataset d = load_csv(f);
  std::vector<Index> removed;
  for (const auto& id : j["removed_ids"]) removed.push_back(id.get<Index>());
  CHECK_FALSE(removed.empty());
  d.delete_rows(removed);
  CausalQuery q;
  q.treatment = "T";
  q.outcome = "O";
  q.confounders = {"z1", "z2"};
  CHECK(ate(fit_ols(d, q)) == doctest::Approx(j["ate_after"].get<double>()).epsilon(1e-6));
}

TEST_CASE("inject subcommand corrupts a copy and logs the rows") {
  const std::string data = write_golden_csv();
  const std::string noisy = tmp_path("noisy.csv");
  const std::string log_path = tmp_path("inject.json");
  REQUIRE(run({"inject", "--data", data, "--treatment", "T", "--outcome", "O", "--kind",
               "outliers", "--level", "0.3", "--seed", "2", "--out", noisy, "--log",
               log_path}) == 0);
  json log = json::parse(slurp(log_path));
  CHECK(log["kind"] == "outliers");
  CHECK(log["ids"].size() == 3);  // ceil(0.3 * 7)
  std::ifstream f(noisy, std::ios::binary);
  Dataset d = load_csv(f);
  CHECK(d.n_rows() == 7);
  Dataset orig = fixtures::golden();
  for (const auto& idj : log["ids"]) {
    const Index r = idj.get<Index>();
    CHECK(d.col("O").num[static_cast<Eigen::Index>(r)] !=
          orig.col("O").num[static_cast<Eigen::Index>(r)]);
  }
  CHECK(run({"inject", "--data", data, "--treatment", "T", "--outcome", "O", "--kind",
             "nonsense", "--out", noisy}) != 0);
}

TEST_CASE("inspect prints the schema and the baseline estimate") {
  const std::string data = write_golden_csv();
  Capture cap;
  REQUIRE(run({"inspect", "--data", data, "--treatment", "T", "--outcome", "O", "--target",
               "1.2", "--epsilon", "0.1"},
              &cap) == 0);
  CHECK(cap.out.find("rows=7 alive=7") != std::string::npos);
  CHECK(cap.out.find("T: binary") != std::string::npos);
  CHECK(cap.out.find("O: continuous") != std::string::npos);
  CHECK(cap.out.find("ate(ols)=1.25") != std::string::npos);
  CHECK(cap.out.find("in_range=yes") != std::string::npos);
  // Typing hints flow through: forcing T continuous breaks the query.
  CHECK(run({"inspect", "--data", data, "--continuous", "T", "--treatment", "T",
             "--outcome", "O"}) == 1);
}

TEST_CASE("opt modes commit their removals") {
  const std::string data = write_golden_csv();
  const std::string out = tmp_path("opt.json");
  const std::string removed = tmp_path("opt_removed.csv");
  REQUIRE(run({"repair", "--data", data, "--treatment", "T", "--outcome", "O", "--target",
               "0", "--epsilon", "1e-9", "--mode", "opt-tuple", "--out", out,
               "--removed-csv", removed, "--quiet"}) == 0);
  json j = json::parse(slurp(out));
  CHECK(j["mode"] == "tuple");
  CHECK(j["removed_ids"] == json::array({2}));
  CHECK(j["hit_range"] == true);
  CHECK(slurp(removed) == "row_id,T,O\n2,1,5\n");
}

TEST_CASE("execute_repair rejects unknown modes") {
  Dataset d = fixtures::golden();
  RunConfig rc;
  rc.query = fixtures::golden_query(0.0, 1e-9);
  rc.mode = "annealing";
  try {
    execute_repair(d, rc);
    FAIL("expected BadConfig");
  } catch (const Error& e) {
    CHECK(e.code() == Err::BadConfig);
  }
}

TEST_CASE("bench emits the long table") {
  const std::string out = tmp_path("bench.csv");
  REQUIRE(run({"bench", "--suite", "opt", "--quick", "--seeds", "1", "--out", out}) == 0);
  std::istringstream in(slurp(out));
  std::string line;
  REQUIRE(std::getline(in, line));
  CHECK(line ==
        "suite,param,value,n,seed,mode,hit,removed_count,removed_fraction,"
        "ate_before,ate_after,target,epsilon,wall_time_s,error");
  int rows = 0;
  while (std::getline(in, line)) {
    ++rows;
    CHECK(line.rfind("opt,n,", 0) == 0);
    CHECK(std::count(line.begin(), line.end(), ',') == 14);
  }
  CHECK(rows == 4);  // 2 sizes x 1 seed x {opt-tuple, tuple}
}

}  // TEST_SUITE
