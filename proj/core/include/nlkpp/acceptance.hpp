#pragma once

#include <functional>
#include <string>
#include <vector>

namespace nlkpp {

struct CriterionResult {
  int id = 0;
  std::string name;
  bool pass = false;
  std::string detail;
  double seconds = 0.0;
};

struct AcceptanceOptions {
  bool fail_fast = false;
  int only = 0;  // run a single criterion id (0 = all)
  std::function<void(const CriterionResult&)> on_result;
};

// The 13-criterion acceptance suite (the CLI's verify subcommand and the
// ctest acceptance binary both drive this).  Deterministic; returns results in
// criterion order, truncated after the first failure when fail_fast is set.
std::vector<CriterionResult> run_acceptance(const AcceptanceOptions& opts = {});

}  // namespace nlkpp
