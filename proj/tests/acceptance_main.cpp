// Acceptance gate: one line per criterion, nonzero exit on any failure.

#include <cstdio>

#include "nlkpp/acceptance.hpp"

int main() {
  nlkpp::AcceptanceOptions opts;
  opts.on_result = [](const nlkpp::CriterionResult& r) {
    std::printf("[%s] criterion %2d: %s (%.1fs)\n", r.pass ? "PASS" : "FAIL", r.id,
                r.name.c_str(), r.seconds);
    if (!r.pass) std::printf("       %s\n", r.detail.c_str());
    std::fflush(stdout);
  };
  const auto results = nlkpp::run_acceptance(opts);
  int failed = 0;
  for (const auto& r : results)
    if (!r.pass) ++failed;
  std::printf("%zu criteria, %d failed\n", results.size(), failed);
  return failed == 0 && results.size() == 13 ? 0 : 1;
}
