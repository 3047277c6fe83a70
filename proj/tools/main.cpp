// Command-line front end: scenario-driven experiments plus the acceptance
// suite.  Exit codes: 0 success, 1 a check failed, 2 configuration error.

#include <cstdio>
#include <future>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "nlkpp/acceptance.hpp"
#include "nlkpp/scenario.hpp"

namespace {

constexpr const char* kBuiltinPrefix = "builtin:";

nlkpp::Scenario load_scenario(const std::string& ref) {
  if (ref.rfind(kBuiltinPrefix, 0) == 0)
    return nlkpp::builtin_scenario(ref.substr(std::string(kBuiltinPrefix).size()));
  return nlkpp::parse_scenario_file(ref);
}

struct ScenarioArgs {
  std::string scenario;
  std::string out;
  std::uint64_t seed = 0;
  bool seed_set = false;
  int jobs = 1;
};

void add_scenario_flags(CLI::App* cmd, ScenarioArgs& args) {
  cmd->add_option("--scenario", args.scenario,
                  "scenario file (flat config or JSON) or builtin:<name>")
      ->required();
  cmd->add_option("--out", args.out, "output root (overrides scenario and NLKPP_OUT_ROOT)");
  auto* seed = cmd->add_option("--seed", args.seed, "override the scenario seed");
  cmd->add_option("--jobs", args.jobs, "worker threads (reserved for scenario runs)")
      ->check(CLI::PositiveNumber);
  cmd->parse_complete_callback([seed, &args] { args.seed_set = seed->count() > 0; });
}

int run_scenario_command(const ScenarioArgs& args, nlkpp::ExperimentKind kind) {
  const nlkpp::Scenario sc = load_scenario(args.scenario);
  if (sc.kind != kind)
    throw nlkpp::ScenarioParseError("scenario '" + sc.name + "' declares kind=" +
                                    nlkpp::to_string(sc.kind) + "; run it with the " +
                                    nlkpp::to_string(sc.kind) + " subcommand");
  nlkpp::RunOptions ro;
  ro.out_dir = args.out;
  ro.jobs = args.jobs;
  if (args.seed_set) ro.seed_override = args.seed;
  const nlkpp::RunResult res = nlkpp::run_scenario(sc, ro);
  if (res.exit_code == 0) {
    std::cout << "ok: " << sc.name << " (" << res.summary_path << ")\n";
  } else {
    std::cout << "check failed: " << res.failed_check << " (" << res.summary_path << ")\n";
  }
  return res.exit_code;
}

void print_criterion(const nlkpp::CriterionResult& r, bool verbose) {
  std::printf("[%s] %2d/13 %s (%.1fs)\n", r.pass ? "PASS" : "FAIL", r.id, r.name.c_str(),
              r.seconds);
  if ((!r.pass || verbose) && !r.detail.empty()) std::printf("       %s\n", r.detail.c_str());
  std::fflush(stdout);
}

int run_verify(int jobs, int only, bool keep_going, bool verbose) {
  using nlkpp::AcceptanceOptions;
  using nlkpp::CriterionResult;
  std::vector<CriterionResult> results;
  if (jobs <= 1 || only != 0) {
    AcceptanceOptions ao;
    ao.only = only;
    ao.fail_fast = !keep_going;
    ao.on_result = [verbose](const CriterionResult& r) { print_criterion(r, verbose); };
    results = nlkpp::run_acceptance(ao);
  } else {
    // criteria are independent and deterministic; fan them out, print in order
    std::vector<int> ids;
    for (int id = 1; id <= 13; ++id) ids.push_back(id);
    std::size_t next = 0;
    std::vector<std::future<std::vector<CriterionResult>>> inflight;
    std::vector<int> inflight_ids;
    while (next < ids.size() || !inflight.empty()) {
      while (next < ids.size() && static_cast<int>(inflight.size()) < jobs) {
        const int id = ids[next++];
        inflight_ids.push_back(id);
        inflight.push_back(std::async(std::launch::async, [id] {
          AcceptanceOptions ao;
          ao.only = id;
          return nlkpp::run_acceptance(ao);
        }));
      }
      auto batch = inflight.front().get();
      inflight.erase(inflight.begin());
      inflight_ids.erase(inflight_ids.begin());
      for (const CriterionResult& r : batch) {
        print_criterion(r, verbose);
        results.push_back(r);
      }
    }
  }
  int passed = 0;
  for (const auto& r : results)
    if (r.pass) ++passed;
  std::printf("verify: %d/%zu criteria passed\n", passed, results.size());
  return (!results.empty() && passed == static_cast<int>(results.size())) ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"nonlocal-dispersal KPP laboratory"};
  app.require_subcommand(1);

  ScenarioArgs sim_args, lya_args, eig_args, ent_args;
  auto* sim = app.add_subcommand("simulate", "forward run with trajectory artifacts");
  add_scenario_flags(sim, sim_args);
  auto* lya = app.add_subcommand("lyapunov", "top Lyapunov exponent of the linear flow");
  add_scenario_flags(lya, lya_args);
  auto* eig = app.add_subcommand("eigen", "principal eigenvalue of the static operator");
  add_scenario_flags(eig, eig_args);
  auto* ent = app.add_subcommand("entire", "pullback entire solution on a window");
  add_scenario_flags(ent, ent_args);

  auto* ver = app.add_subcommand("verify", "run the 13-criterion acceptance suite");
  int ver_jobs = 1, ver_only = 0;
  bool ver_keep = false, ver_verbose = false;
  ver->add_option("--jobs", ver_jobs, "run criteria concurrently (implies --keep-going)")
      ->check(CLI::PositiveNumber);
  ver->add_option("--criterion", ver_only, "run a single criterion id")
      ->check(CLI::Range(1, 13));
  ver->add_flag("--keep-going", ver_keep, "do not stop at the first failing criterion");
  ver->add_flag("--verbose", ver_verbose, "print detail lines for passing criteria too");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (sim->parsed()) return run_scenario_command(sim_args, nlkpp::ExperimentKind::Simulate);
    if (lya->parsed()) return run_scenario_command(lya_args, nlkpp::ExperimentKind::Lyapunov);
    if (eig->parsed()) return run_scenario_command(eig_args, nlkpp::ExperimentKind::Eigen);
    if (ent->parsed()) return run_scenario_command(ent_args, nlkpp::ExperimentKind::Entire);
    if (ver->parsed()) return run_verify(ver_jobs, ver_only, ver_keep, ver_verbose);
  } catch (const nlkpp::ScenarioParseError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const nlkpp::CheckFailure& e) {
    std::cerr << "check failed: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
