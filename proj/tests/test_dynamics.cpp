#include <cmath>
#include <numbers>

#include "doctest.h"
#include "nlkpp/dynamics.hpp"

using namespace nlkpp;

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;

// logistic problem on a small torus: u' = Ku + u(a0 - u), u* = 1 + a0
Problem logistic_problem(double a0, int n = 64) {
  Problem p;
  p.domain = build_domain(DomainKind::Torus, 1, {0.0, 0.0}, {kTwoPi, 0.0}, {n, 1});
  KernelSpec spec;
  spec.param = 0.35;
  p.kernel = sample_kernel(spec, p.domain);
  p.reaction = make_reaction(ap_constant(a0), ap_constant(1.0), p.domain);
  return p;
}
}  // namespace

TEST_CASE("part metric: frozen value and X++ preconditions") {
  CHECK(part_metric({1.0, 2.0}, {2.0, 1.0}) ==
        doctest::Approx(0.69314718055994531).epsilon(1e-15));  // ln 2
  CHECK(part_metric({3.0, 3.0}, {3.0, 3.0}) == 0.0);
  // scaling one argument shifts rho by the log of the factor
  CHECK(part_metric({1.0, 1.0}, {4.0, 4.0}) ==
        doctest::Approx(2.0 * 0.69314718055994531).epsilon(1e-15));

  CHECK_THROWS_AS(part_metric({1.0, 0.0}, {1.0, 1.0}), std::invalid_argument);
  CHECK_THROWS_AS(part_metric({1.0, 1.0}, {1.0, -2.0}), std::invalid_argument);
  CHECK_THROWS_AS(part_metric({1.0}, {1.0, 1.0}), std::invalid_argument);
  CHECK_THROWS_AS(part_metric({}, {}), std::invalid_argument);
}

TEST_CASE("contraction: the part metric shrinks along the logistic flow") {
  const Problem p = logistic_problem(0.5);
  const Field u0 = constant_field(p.domain, 1.0);
  const Field v0 = constant_field(p.domain, 1.8);
  const PartMetricTrace trace = contraction_check(p, u0, v0, 1.0, 10);

  REQUIRE(trace.rho.size() == 11);
  CHECK(trace.times.front() == 0.0);
  CHECK(trace.times.back() == doctest::Approx(10.0));
  CHECK(trace.rho.front() == doctest::Approx(std::log(1.8)).epsilon(1e-12));
  CHECK(trace.nonexpansive);
  CHECK(trace.max_increase <= 0.0);
  CHECK(trace.sigma_tilde > 0.0);
  CHECK(trace.decrement_samples >= 2);
  CHECK(trace.rho.back() < 1e-5);

  CHECK_THROWS_AS(contraction_check(p, constant_field(p.domain, 0.0), v0, 1.0, 3),
                  std::invalid_argument);
  CHECK_THROWS_AS(contraction_check(p, u0, v0, -1.0, 3), std::invalid_argument);
  CHECK_THROWS_AS(contraction_check(p, u0, v0, 1.0, 0), std::invalid_argument);
}

TEST_CASE("pullback entire solution: constant logistic collapses onto u* = 1.5") {
  const Problem p = logistic_problem(0.5);
  PullbackOptions po;
  po.lambda_hint = 1.5;  // skip the internal spectral run; covered elsewhere
  const EntireSolution e = pullback_entire_solution(p, 0.0, 10.0, po);

  CHECK(e.converged);
  CHECK(e.monotone_in_k);
  CHECK(!e.spectral_warn);
  CHECK(e.lambda_estimate == 1.5);
  CHECK(e.floor == doctest::Approx(1.5).epsilon(1e-6));
  CHECK(e.ceiling == doctest::Approx(1.5).epsilon(1e-6));
  CHECK(e.last_gap < 1e-6);
  REQUIRE(e.k_used.size() == 2);  // 20 then 40: second depth already agrees
  CHECK(e.k_used.front() == doctest::Approx(20.0));

  // window bookkeeping: cadence 0.05 over [0, 10]
  REQUIRE(e.window.size() == 201);
  CHECK(e.window.times.front() == doctest::Approx(0.0));
  CHECK(e.window.times.back() == doctest::Approx(10.0));

  // probes: 17 evenly spaced indices, full-rate traces over the window
  REQUIRE(e.probe_indices.size() == 17);
  CHECK(e.probe_indices.front() == 0);
  for (size_t i = 1; i < e.probe_indices.size(); ++i)
    CHECK(e.probe_indices[i] > e.probe_indices[i - 1]);
  REQUIRE(e.probe_traces.size() == 17);
  CHECK(e.probe_dt == doctest::Approx(0.01));
  CHECK(e.probe_t_end == doctest::Approx(10.0));
  CHECK(e.probe_traces[0].size() == 1001);

  // at(): exact recorded times (with 1e-9 jitter allowance), refuses the rest
  CHECK(&e.at(0.0) == &e.window.fields[0]);
  CHECK(&e.at(0.05 + 1e-10) == &e.window.fields[1]);
  CHECK(&e.at(10.0) == &e.window.fields.back());
  CHECK_THROWS_AS(e.at(-0.05), std::invalid_argument);
  CHECK_THROWS_AS(e.at(10.05), std::invalid_argument);
  CHECK_THROWS_AS(e.at(0.07), std::invalid_argument);

  CHECK_THROWS_AS(pullback_entire_solution(p, 1.0, 1.0, po), std::invalid_argument);
  PullbackOptions bad = po;
  bad.k0 = 100.0;
  bad.k_max = 50.0;
  CHECK_THROWS_AS(pullback_entire_solution(p, 0.0, 10.0, bad), std::invalid_argument);
}

TEST_CASE("uniqueness: caps, sub-level start and window shift agree") {
  const Problem p = logistic_problem(0.5);
  PullbackOptions base;
  base.lambda_hint = 1.5;
  const UniquenessReport rep = uniqueness_check(p, 0.0, 10.0, 1e-6, base);
  CHECK(rep.pass);
  CHECK(rep.gap_caps <= 1e-6);
  CHECK(rep.gap_below <= 1e-6);
  CHECK(rep.gap_shift <= 1e-6);

  // extinction problems (u_cap = 0) have no positive entire solution to compare
  const Problem dying = logistic_problem(-1.2);
  CHECK(dying.reaction.u_cap == 0.0);
  CHECK_THROWS_AS(uniqueness_check(dying, 0.0, 10.0), std::invalid_argument);
}

TEST_CASE("stability: seeded ensemble converges to the entire solution") {
  const Problem p = logistic_problem(0.5);
  PullbackOptions po;
  po.lambda_hint = 1.5;
  const EntireSolution e = pullback_entire_solution(p, 0.0, 30.0, po);
  REQUIRE(e.converged);

  const StabilityReport rep = stability_check(p, e, 4, 30.0);
  CHECK(rep.pass);
  CHECK(rep.max_final_dist <= 1e-4);
  CHECK(rep.rho_nonincreasing);
  REQUIRE(rep.final_dist.size() == 4);
  for (double d : rep.final_dist) CHECK(d <= 1e-4);

  CHECK_THROWS_AS(stability_check(p, e, 1, 30.0), std::invalid_argument);
  CHECK_THROWS_AS(stability_check(p, e, 4, 31.0), std::invalid_argument);  // past the window
}

TEST_CASE("extinction: decay rate matches the negative spectral bound") {
  const Problem p = logistic_problem(-1.2);
  const ExtinctionReport rep = extinction_check(p, constant_field(p.domain, 1.5), 60.0);
  CHECK(rep.lambda_estimate == doctest::Approx(-0.2).epsilon(1e-6));
  CHECK(rep.rate == doctest::Approx(-0.2).epsilon(0.05));  // within 1e-2 absolute
  CHECK(std::abs(rep.rate + 0.2) <= 1e-2);
  CHECK(rep.consistent);
  CHECK(rep.final_sup < 1e-5);
  CHECK(rep.final_sup > 0.0);

  CHECK_THROWS_AS(extinction_check(p, constant_field(p.domain, 1.5), 10.0),
                  std::invalid_argument);
}

TEST_CASE("scalar pullback: logistic and forced-linear reductions") {
  // autonomous logistic u' = u(1.5 - u): the entire trace is the constant 1.5
  {
    const ScalarPullback pb = ode_pullback(
        [](double) { return 0.0; }, [](double, double u) { return 1.5 - u; }, 0.0, 10.0, 3.0,
        0.5);
    CHECK(pb.converged);
    CHECK(pb.gap_starts <= 1e-8);
    REQUIRE(!pb.values.empty());
    for (double v : pb.values) CHECK(v == doctest::Approx(1.5).epsilon(1e-8));
    CHECK(pb.times.front() == doctest::Approx(0.01));
    CHECK(pb.times.back() == doctest::Approx(10.0));
  }
  // forced linear decay u' = 0.1(1 + sin t) - u has the explicit entire
  // solution u(t) = 0.1 + 0.1 (sin t - cos t) / 2 (independent oracle)
  {
    const ScalarPullback pb = ode_pullback(
        [](double t) { return 0.1 * (1.0 + std::sin(t)); },
        [](double, double) { return -1.0; }, 0.0, 10.0, 1.0, 0.1);
    CHECK(pb.converged);
    CHECK(pb.gap_starts <= 1e-8);
    REQUIRE(!pb.values.empty());
    for (size_t i = 0; i < pb.values.size(); ++i) {
      const double t = pb.times[i];
      const double exact = 0.1 + 0.1 * (std::sin(t) - std::cos(t)) / 2.0;
      CHECK(pb.values[i] == doctest::Approx(exact).epsilon(1e-6));
    }
  }
  CHECK_THROWS_AS(ode_pullback([](double) { return 0.0; },
                               [](double, double) { return -1.0; }, 0.0, 10.0, -1.0, 0.5),
                  std::invalid_argument);
  CHECK_THROWS_AS(ode_pullback([](double) { return 0.0; },
                               [](double, double) { return -1.0; }, 5.0, 5.0, 1.0, 0.5),
                  std::invalid_argument);
}

TEST_CASE("almost-periodicity diagnostic refuses short probe spans") {
  const Problem p = logistic_problem(0.5);
  PullbackOptions po;
  po.lambda_hint = 1.5;
  const EntireSolution e = pullback_entire_solution(p, 0.0, 10.0, po);  // span 10 <= 61
  CHECK_THROWS_AS(almost_periodicity_diagnostic(e, p.reaction.a, {0.1, 0.05}),
                  std::invalid_argument);
  EntireSolution empty;
  CHECK_THROWS_AS(almost_periodicity_diagnostic(empty, p.reaction.a, {0.1}),
                  std::invalid_argument);
}
