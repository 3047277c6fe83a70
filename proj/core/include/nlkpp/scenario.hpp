#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>

#include "nlkpp/dynamics.hpp"

namespace nlkpp {

// Config/parse problems: CLI exit 2.
struct ScenarioParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
// Embedded expectation failed: CLI exit 1, message names the check.
struct CheckFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class ExperimentKind { Simulate, Lyapunov, Eigen, Entire };

std::string to_string(ExperimentKind k);

struct InitialSpec {
  enum class Kind { Constant, RandomUniform, Profile } kind = Kind::Constant;
  double value = 1.0;           // Constant
  double lo = 0.5, hi = 1.5;    // RandomUniform bounds
  SpatialProfile profile;       // Profile
};

struct RunParams {
  double dt = 0.01;
  double horizon = 100.0;
  double window_lo = 0.0, window_hi = 60.0;  // entire-solution window
  double renorm_dt = 1.0;
  int record_every = 10;
  double pullback_tol = 1e-6;
  int initials = 3;
  int ensemble = 20;
};

struct Expect {
  std::string key;
  double value = 0.0;
  double tol = 0.0;
};

struct Scenario {
  std::string name;
  ExperimentKind kind = ExperimentKind::Simulate;
  std::uint64_t seed = 0;
  Domain domain;
  KernelSpec kernel;
  APCoefficient a;
  APCoefficient b;
  InitialSpec initial;
  RunParams run;
  ConvolutionMethod method = ConvolutionMethod::Auto;
  std::vector<Expect> expects;
  std::string output_dir;  // optional override
};

// Flat key/value grammar (INI-like, documented in the README):
//   [section.subsection] headers, key = value lines, # or ; comments.
// JSON is the alternate encoding (same tree, arrays become 1-based .N keys).
Scenario parse_scenario_text(const std::string& text, const std::string& origin);
Scenario parse_scenario_file(const std::string& path);

// Shipped scenarios, by name, as config text in the flat grammar.  The files
// under tools/scenarios mirror these (tested for drift).
std::vector<std::string> builtin_scenario_names();
const std::string& builtin_scenario_text(const std::string& name);
Scenario builtin_scenario(const std::string& name);

struct RunOptions {
  std::string out_dir;  // highest-precedence output root ("" = scenario/env/cwd)
  std::optional<std::uint64_t> seed_override;
  int jobs = 1;
};

struct RunResult {
  int exit_code = 0;         // 0 ok, 1 named check failed
  std::string failed_check;  // empty when ok
  std::string summary_path;  // summary.json location
};

// Executes the scenario's experiment, writes CSV/JSON artifacts under
// <root>/<scenario name>/, evaluates embedded [expect] entries.
// Output root precedence: RunOptions.out_dir > scenario output_dir >
// NLKPP_OUT_ROOT env var > ./out.
RunResult run_scenario(const Scenario& scenario, const RunOptions& opts = {});

}  // namespace nlkpp
