#include <benchmark/benchmark.h>

#include <cmath>
#include <numbers>
#include <random>

#include "nlkpp/dynamics.hpp"
#include "nlkpp/scenario.hpp"

using namespace nlkpp;

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;

Domain torus1(int n) {
  return build_domain(DomainKind::Torus, 1, {0.0, 0.0}, {kTwoPi, 0.0}, {n, 1});
}

std::vector<double> random_values(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(0.5, 1.5);
  std::vector<double> v(n);
  for (auto& x : v) x = dist(rng);
  return v;
}
}  // namespace

static void BM_DispersalDirect(benchmark::State& state) {
  const Domain d = torus1(static_cast<int>(state.range(0)));
  KernelSpec spec;
  spec.param = 0.35;
  const Kernel k = sample_kernel(spec, d);
  DispersalOperator op(k, d, ConvolutionMethod::Direct);
  std::vector<double> u = random_values(d.total(), 1), out(d.total());
  for (auto _ : state) {
    op.apply(u, out);
    benchmark::DoNotOptimize(out.data());
  }
}
BENCHMARK(BM_DispersalDirect)->Arg(64)->Arg(256);

static void BM_DispersalFft(benchmark::State& state) {
  const Domain d = torus1(static_cast<int>(state.range(0)));
  KernelSpec spec;
  spec.param = 0.35;
  const Kernel k = sample_kernel(spec, d);
  DispersalOperator op(k, d, ConvolutionMethod::Fft);
  std::vector<double> u = random_values(d.total(), 1), out(d.total());
  for (auto _ : state) {
    op.apply(u, out);
    benchmark::DoNotOptimize(out.data());
  }
}
BENCHMARK(BM_DispersalFft)->Arg(64)->Arg(256)->Arg(512);

static void BM_EvolutionStep(benchmark::State& state) {
  Problem p;
  p.domain = torus1(256);
  KernelSpec spec;
  spec.param = 0.35;
  p.kernel = sample_kernel(spec, p.domain);
  p.reaction = make_reaction(ap_constant(0.5), ap_constant(1.0), p.domain);
  EvolutionOptions eo;
  Propagator prop(p, eo);
  Field u = constant_field(p.domain, 1.0);
  for (auto _ : state) {
    prop.advance(u, 1, 0.01);
    benchmark::DoNotOptimize(u.values.data());
  }
}
BENCHMARK(BM_EvolutionStep);

static void BM_PowerIteration(benchmark::State& state) {
  const Domain d = build_domain(DomainKind::BoundedBox, 1, {0.0, 0.0}, {1.0, 0.0}, {101, 1});
  KernelSpec spec;
  spec.param = 1.0;
  const Kernel k = sample_kernel(spec, d);
  const SpatialProfile zero = profile_constant(0.0);
  for (auto _ : state) {
    EigenReport rep = principal_eigenvalue_static(zero, k, d);
    benchmark::DoNotOptimize(rep.lambda);
  }
}
BENCHMARK(BM_PowerIteration);

static void BM_PartMetric(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  std::vector<double> u = random_values(n, 2), v = random_values(n, 3);
  for (auto _ : state) {
    double rho = part_metric(u, v);
    benchmark::DoNotOptimize(rho);
  }
}
BENCHMARK(BM_PartMetric)->Arg(256)->Arg(4096);

static void BM_BohrCoefficient(benchmark::State& state) {
  const double dt = 0.02;
  const size_t n = 1 + static_cast<size_t>(1000.0 / dt);
  std::vector<double> trace(n);
  for (size_t i = 0; i < n; ++i) {
    const double t = i * dt;
    trace[i] = 1.1 + 0.4 * std::cos(t) + 0.15 * std::cos(std::numbers::sqrt2 * t);
  }
  for (auto _ : state) {
    auto c = bohr_fourier_coeff(trace, dt, 1.0);
    benchmark::DoNotOptimize(c);
  }
}
BENCHMARK(BM_BohrCoefficient);

BENCHMARK_MAIN();
