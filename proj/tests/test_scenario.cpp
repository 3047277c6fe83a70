#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"
#include "json.hpp"
#include "nlkpp/scenario.hpp"

using namespace nlkpp;
namespace fs = std::filesystem;

namespace {

bool parse_fails_with(const std::string& text, const std::string& needle) {
  try {
    (void)parse_scenario_text(text, "test");
  } catch (const ScenarioParseError& e) {
    return std::string(e.what()).find(needle) != std::string::npos;
  }
  return false;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path fresh_dir(const std::string& tag) {
  fs::path p = fs::temp_directory_path() /
               ("nlkpp_test_" + tag + "_" + std::to_string(::getpid()));
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

const std::string kMini = R"INI(
# mini scenario exercising the whole grammar
name = mini
kind = lyapunov
seed = 77
method = direct
output_dir = /tmp/mini-out

[domain]
kind = torus
dimension = 1
points = 64
lower = 0
upper = 6.283185307179586

[kernel]
family = gaussian
sigma = 0.4
truncation_threshold = 1e-10
truncation_radius = 2.5

[coefficient.a]
constant = 0.3
mode.1.frequency = 1.0
mode.1.phase = -1.5707963267948966
mode.1.amplitude = 0.5
mode.1.spatial.1.wavevector = 1
mode.1.spatial.1.amplitude = 0.15
mode.1.spatial.1.phase = 0.25

[coefficient.b]
constant = 1.25

[initial]
kind = random
lo = 0.25
hi = 2.0

[run]
dt = 0.005
horizon = 120
window = 2, 12
renorm_dt = 0.5
record_every = 4
pullback_tol = 1e-7
initials = 4
ensemble = 6

[expect]
lyapunov_min = 0.2
lyapunov_max = 1.9
window_gap = 0
window_gap_tol = 0.02
)INI";

// cheap simulate scenario used by the run_scenario tests; expect lines appended
std::string tiny_simulate(const std::string& expects) {
  return R"INI(
name = tiny
kind = simulate
seed = 5
[domain]
kind = torus
dimension = 1
points = 16
lower = 0
upper = 6.283185307179586
[kernel]
family = gaussian
sigma = 0.5
[coefficient.a]
constant = -0.5
[run]
horizon = 2
record_every = 10
)INI" + expects;
}

void check_scenarios_equal(const Scenario& x, const Scenario& y) {
  CHECK(x.name == y.name);
  CHECK(x.kind == y.kind);
  CHECK(x.seed == y.seed);
  CHECK(x.method == y.method);
  CHECK(x.output_dir == y.output_dir);

  CHECK(x.domain.is_torus() == y.domain.is_torus());
  CHECK(x.domain.dim == y.domain.dim);
  for (int ax = 0; ax < x.domain.dim; ++ax) {
    CHECK(x.domain.counts[ax] == y.domain.counts[ax]);
    CHECK(x.domain.lower[ax] == y.domain.lower[ax]);
    CHECK(x.domain.spacing[ax] == y.domain.spacing[ax]);
  }

  CHECK(x.kernel.family == y.kernel.family);
  CHECK(x.kernel.param == y.kernel.param);
  CHECK(x.kernel.truncation_threshold == y.kernel.truncation_threshold);
  CHECK(x.kernel.truncation_radius.has_value() == y.kernel.truncation_radius.has_value());

  CHECK(x.a.constant == y.a.constant);
  REQUIRE(x.a.modes.size() == y.a.modes.size());
  for (size_t m = 0; m < x.a.modes.size(); ++m) {
    CHECK(x.a.modes[m].frequency == y.a.modes[m].frequency);
    CHECK(x.a.modes[m].phase == y.a.modes[m].phase);
    CHECK(x.a.modes[m].profile.constant == y.a.modes[m].profile.constant);
    REQUIRE(x.a.modes[m].profile.modes.size() == y.a.modes[m].profile.modes.size());
    for (size_t s = 0; s < x.a.modes[m].profile.modes.size(); ++s) {
      CHECK(x.a.modes[m].profile.modes[s].wavevector[0] ==
            y.a.modes[m].profile.modes[s].wavevector[0]);
      CHECK(x.a.modes[m].profile.modes[s].amplitude == y.a.modes[m].profile.modes[s].amplitude);
      CHECK(x.a.modes[m].profile.modes[s].phase == y.a.modes[m].profile.modes[s].phase);
    }
  }
  CHECK(x.b.constant == y.b.constant);
  CHECK(x.b.modes.size() == y.b.modes.size());

  CHECK(x.initial.kind == y.initial.kind);
  CHECK(x.initial.value == y.initial.value);
  CHECK(x.initial.lo == y.initial.lo);
  CHECK(x.initial.hi == y.initial.hi);

  CHECK(x.run.dt == y.run.dt);
  CHECK(x.run.horizon == y.run.horizon);
  CHECK(x.run.window_lo == y.run.window_lo);
  CHECK(x.run.window_hi == y.run.window_hi);
  CHECK(x.run.renorm_dt == y.run.renorm_dt);
  CHECK(x.run.record_every == y.run.record_every);
  CHECK(x.run.pullback_tol == y.run.pullback_tol);
  CHECK(x.run.initials == y.run.initials);
  CHECK(x.run.ensemble == y.run.ensemble);

  REQUIRE(x.expects.size() == y.expects.size());
  for (size_t i = 0; i < x.expects.size(); ++i) {
    CHECK(x.expects[i].key == y.expects[i].key);
    CHECK(x.expects[i].value == y.expects[i].value);
    CHECK(x.expects[i].tol == y.expects[i].tol);
  }
}

}  // namespace

TEST_CASE("INI grammar: every field of the mini scenario lands") {
  const Scenario sc = parse_scenario_text(kMini, "mini.ini");
  CHECK(sc.name == "mini");
  CHECK(sc.kind == ExperimentKind::Lyapunov);
  CHECK(sc.seed == 77);
  CHECK(sc.method == ConvolutionMethod::Direct);
  CHECK(sc.output_dir == "/tmp/mini-out");

  CHECK(sc.domain.is_torus());
  CHECK(sc.domain.dim == 1);
  CHECK(sc.domain.counts[0] == 64);
  CHECK(sc.domain.lower[0] == 0.0);
  CHECK(sc.domain.spacing[0] == doctest::Approx(6.283185307179586 / 64).epsilon(1e-15));

  CHECK(sc.kernel.family == KernelFamily::Gaussian);
  CHECK(sc.kernel.param == 0.4);
  CHECK(sc.kernel.truncation_threshold == 1e-10);
  REQUIRE(sc.kernel.truncation_radius.has_value());
  CHECK(*sc.kernel.truncation_radius == 2.5);

  CHECK(sc.a.constant == 0.3);
  REQUIRE(sc.a.modes.size() == 1);
  CHECK(sc.a.modes[0].frequency == 1.0);
  CHECK(sc.a.modes[0].phase == -1.5707963267948966);
  CHECK(sc.a.modes[0].profile.constant == 0.5);
  REQUIRE(sc.a.modes[0].profile.modes.size() == 1);
  CHECK(sc.a.modes[0].profile.modes[0].wavevector[0] == 1.0);
  CHECK(sc.a.modes[0].profile.modes[0].amplitude == 0.15);
  CHECK(sc.a.modes[0].profile.modes[0].phase == 0.25);

  CHECK(sc.b.constant == 1.25);
  CHECK(sc.b.modes.empty());

  CHECK(sc.initial.kind == InitialSpec::Kind::RandomUniform);
  CHECK(sc.initial.lo == 0.25);
  CHECK(sc.initial.hi == 2.0);

  CHECK(sc.run.dt == 0.005);
  CHECK(sc.run.horizon == 120.0);
  CHECK(sc.run.window_lo == 2.0);
  CHECK(sc.run.window_hi == 12.0);
  CHECK(sc.run.renorm_dt == 0.5);
  CHECK(sc.run.record_every == 4);
  CHECK(sc.run.pullback_tol == 1e-7);
  CHECK(sc.run.initials == 4);
  CHECK(sc.run.ensemble == 6);

  // expects come back in sorted key order; one-sided keys carry no tol
  REQUIRE(sc.expects.size() == 3);
  CHECK(sc.expects[0].key == "lyapunov_max");
  CHECK(sc.expects[0].value == 1.9);
  CHECK(sc.expects[1].key == "lyapunov_min");
  CHECK(sc.expects[1].value == 0.2);
  CHECK(sc.expects[2].key == "window_gap");
  CHECK(sc.expects[2].value == 0.0);
  CHECK(sc.expects[2].tol == 0.02);
}

TEST_CASE("parse errors carry origin, line and a usable message") {
  CHECK(parse_fails_with(kMini + "\n[scenario]\nfoo = 1\n", "unknown key"));
  CHECK(parse_fails_with(kMini + "\n[run]\ndt = 0.01\n", "duplicate key"));
  CHECK(parse_fails_with("name = x\nkind = simulate\n",
                         "missing required key 'seed'"));
  CHECK(parse_fails_with(kMini + "\n[run]\nhorizon2 = fast\n", "unknown key"));
  {
    std::string bad = kMini;
    const std::string from = "horizon = 120", to = "horizon = fast";
    bad.replace(bad.find(from), from.size(), to);
    CHECK(parse_fails_with(bad, "expected a number"));
  }
  CHECK(parse_fails_with(tiny_simulate("[expect]\nfinal_sup = 1\n"), "needs a companion"));
  CHECK(parse_fails_with(tiny_simulate("[expect]\nfinal_sup_tol = 1\n"), "unknown key"));
  CHECK(parse_fails_with("{ bad json", "JSON parse error"));
  CHECK(parse_fails_with("[domain\nkind = torus\n", "unterminated section"));
  CHECK(parse_fails_with("name mini\n", "no '='"));
  {
    std::string bad = kMini;
    const std::string from = "points = 64", to = "points = 4";
    bad.replace(bad.find(from), from.size(), to);
    CHECK(parse_fails_with(bad, "invalid domain"));
  }
  {
    std::string bad = kMini;
    const std::string from = "kind = lyapunov", to = "kind = explode";
    bad.replace(bad.find(from), from.size(), to);
    CHECK(parse_fails_with(bad, "kind"));
  }
}

TEST_CASE("builtin scenarios: all parse; files mirror the embedded texts") {
  const auto names = builtin_scenario_names();
  CHECK(names.size() == 9);
  for (const auto& name : names) {
    const Scenario sc = builtin_scenario(name);
    CHECK(sc.name == name);
    CHECK(!sc.expects.empty());

    const fs::path file = fs::path(NLKPP_SOURCE_DIR) / "tools" / "scenarios" / (name + ".ini");
    INFO("drift check for ", file.string());
    CHECK(slurp(file) == builtin_scenario_text(name));
  }
  CHECK_THROWS_AS(builtin_scenario("no_such_scenario"), ScenarioParseError);
  CHECK_THROWS_AS(builtin_scenario_text("no_such_scenario"), ScenarioParseError);
}

TEST_CASE("JSON encoding parses to the same scenario as the INI text") {
  const fs::path file =
      fs::path(NLKPP_SOURCE_DIR) / "tools" / "scenarios" / "constant_logistic.json";
  const Scenario from_json = parse_scenario_file(file.string());
  const Scenario from_ini = builtin_scenario("constant_logistic");
  check_scenarios_equal(from_json, from_ini);
}

TEST_CASE("run_scenario: artifacts, summary schema and determinism") {
  const fs::path root1 = fresh_dir("run1");
  const fs::path root2 = fresh_dir("run2");
  const Scenario sc = builtin_scenario("torus2d");

  RunOptions ro;
  ro.out_dir = root1.string();
  const RunResult res = run_scenario(sc, ro);
  CHECK(res.exit_code == 0);
  CHECK(res.failed_check.empty());
  REQUIRE(fs::exists(res.summary_path));
  CHECK(fs::path(res.summary_path).filename() == "summary.json");

  const auto j = nlohmann::json::parse(slurp(res.summary_path));
  CHECK(j.at("schema") == "nlkpp.summary.v1");
  CHECK(j.at("scenario") == "torus2d");
  CHECK(j.at("kind") == "simulate");
  CHECK(j.at("pass") == true);
  CHECK(j.at("metrics").contains("final_sup"));
  CHECK(j.at("metrics").contains("max_sup"));
  CHECK(!j.at("checks").empty());
  for (const auto& c : j.at("checks")) CHECK(c.at("pass") == true);
  CHECK(fs::exists(fs::path(res.summary_path).parent_path() / "trajectory.csv"));
  CHECK(fs::exists(fs::path(res.summary_path).parent_path() / "final_state.csv"));

  // bit-for-bit determinism across output roots
  RunOptions ro2;
  ro2.out_dir = root2.string();
  const RunResult res2 = run_scenario(sc, ro2);
  CHECK(res2.exit_code == 0);
  CHECK(slurp(res.summary_path) == slurp(res2.summary_path));

  fs::remove_all(root1);
  fs::remove_all(root2);
}

TEST_CASE("run_scenario: failing expectation sets exit code 1 and names the check") {
  const fs::path root = fresh_dir("fail");
  const Scenario sc = parse_scenario_text(
      tiny_simulate("[expect]\nfinal_sup = 99\nfinal_sup_tol = 0.001\n"), "tiny.ini");
  RunOptions ro;
  ro.out_dir = root.string();
  const RunResult res = run_scenario(sc, ro);
  CHECK(res.exit_code == 1);
  CHECK(res.failed_check == "final_sup");
  const auto j = nlohmann::json::parse(slurp(res.summary_path));
  CHECK(j.at("pass") == false);
  bool saw_failed = false;
  for (const auto& c : j.at("checks"))
    if (c.at("metric") == "final_sup" && c.at("pass") == false) saw_failed = true;
  CHECK(saw_failed);
  fs::remove_all(root);
}

TEST_CASE("run_scenario: unknown expectation metric is a config error") {
  const fs::path root = fresh_dir("badmetric");
  const Scenario sc = parse_scenario_text(
      tiny_simulate("[expect]\nbogus = 1\nbogus_tol = 1\n"), "tiny.ini");
  RunOptions ro;
  ro.out_dir = root.string();
  CHECK_THROWS_AS(run_scenario(sc, ro), ScenarioParseError);
  fs::remove_all(root);
}

TEST_CASE("output root precedence: flag > scenario > environment > cwd") {
  const fs::path env_root = fresh_dir("envroot");
  const fs::path flag_root = fresh_dir("flagroot");
  REQUIRE(::setenv("NLKPP_OUT_ROOT", env_root.c_str(), 1) == 0);

  Scenario sc = parse_scenario_text(tiny_simulate(""), "tiny.ini");
  CHECK(sc.output_dir.empty());

  const RunResult via_env = run_scenario(sc);
  CHECK(fs::path(via_env.summary_path).parent_path().parent_path() == env_root);

  RunOptions ro;
  ro.out_dir = flag_root.string();
  const RunResult via_flag = run_scenario(sc, ro);
  CHECK(fs::path(via_flag.summary_path).parent_path().parent_path() == flag_root);

  REQUIRE(::unsetenv("NLKPP_OUT_ROOT") == 0);
  fs::remove_all(env_root);
  fs::remove_all(flag_root);
}

TEST_CASE("seed override is recorded in the summary") {
  const fs::path root = fresh_dir("seed");
  Scenario sc = parse_scenario_text(tiny_simulate(""), "tiny.ini");
  sc.initial.kind = InitialSpec::Kind::RandomUniform;
  RunOptions ro;
  ro.out_dir = root.string();
  ro.seed_override = 123456;
  const RunResult res = run_scenario(sc, ro);
  const auto j = nlohmann::json::parse(slurp(res.summary_path));
  CHECK(j.at("seed") == 123456);
  fs::remove_all(root);
}
