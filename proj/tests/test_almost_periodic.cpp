#include <cmath>
#include <complex>
#include <numbers>
#include <random>

#include "doctest.h"
#include "nlkpp/almost_periodic.hpp"

using namespace nlkpp;

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;

Domain torus1(int n = 64) {
  return build_domain(DomainKind::Torus, 1, {0.0, 0.0}, {kTwoPi, 0.0}, {n, 1});
}

// a(t,x) = 0.3 + 0.5 sin(t) (1 + 0.3 cos x): the quasi-periodic workhorse
APCoefficient workhorse() {
  APCoefficient a;
  a.constant = 0.3;
  TemporalMode m;
  m.frequency = 1.0;
  m.phase = -std::numbers::pi / 2;  // cos(t - pi/2) = sin t
  m.profile.constant = 0.5;
  SpatialMode s;
  s.wavevector[0] = 1.0;
  s.amplitude = 0.15;
  m.profile.modes.push_back(s);
  a.modes.push_back(m);
  return a;
}
}  // namespace

TEST_CASE("coefficient evaluation matches the closed form") {
  const APCoefficient a = workhorse();
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> dt(-30.0, 30.0), dx(0.0, kTwoPi);
  for (int i = 0; i < 200; ++i) {
    const double t = dt(rng), x = dx(rng);
    const double want = 0.3 + 0.5 * std::sin(t) * (1.0 + 0.3 * std::cos(x));
    CHECK(a.evaluate(t, &x, 1) == doctest::Approx(want).epsilon(1e-14));
    CHECK(std::abs(a.evaluate(t, &x, 1)) <= a.sup_bound() + 1e-14);
  }
  CHECK(a.sup_bound() == doctest::Approx(0.3 + 0.5 + 0.15));
  CHECK(!a.is_static());
  CHECK(a.frequencies() == std::vector<double>{1.0});
  CHECK(ap_constant(0.7).is_static());
  CHECK(ap_constant(0.7).evaluate(3.0, nullptr, 0) == doctest::Approx(0.7));
}

TEST_CASE("time mean: exact route vs quadrature route") {
  const APCoefficient a = workhorse();
  const SpatialProfile mean = time_mean(a);
  // every positive-frequency mode drops out
  for (double x : {0.0, 1.0, 2.5}) {
    CHECK(mean.evaluate(&x, 1) == doctest::Approx(0.3).epsilon(1e-14));
    CHECK(time_mean_numeric(a, &x, 1, 4000.0) == doctest::Approx(0.3).epsilon(1e-3));
  }

  // a frequency-0 mode folds into the mean through its phase
  APCoefficient b = ap_constant(1.0);
  TemporalMode m0;
  m0.frequency = 0.0;
  m0.phase = std::numbers::pi / 3;  // cos = 1/2
  m0.profile.constant = 0.4;
  b.modes.push_back(m0);
  double x = 0.0;
  CHECK(time_mean(b).evaluate(&x, 1) == doctest::Approx(1.0 + 0.2).epsilon(1e-14));
  CHECK(b.is_static());
}

TEST_CASE("space mean uses the domain quadrature") {
  const Domain t = torus1(128);
  SpatialProfile p;
  p.constant = 0.75;
  SpatialMode m;
  m.wavevector[0] = 1.0;
  m.amplitude = 0.4;
  m.phase = 0.3;
  p.modes.push_back(m);
  // commensurate cosine averages to zero on the full period
  CHECK(space_mean(p, t) == doctest::Approx(0.75).epsilon(1e-13));
  CHECK(space_mean(p.gridded(t), t) == doctest::Approx(0.75).epsilon(1e-13));

  const Domain b = build_domain(DomainKind::BoundedBox, 1, {0.0, 0.0}, {1.0, 0.0}, {101, 1});
  // trapezoid mean of x on [0,1] is exactly 1/2
  std::vector<double> lin(b.total());
  for (int i = 0; i < b.total(); ++i) lin[i] = b.coord(0, i);
  CHECK(space_mean(lin, b) == doctest::Approx(0.5).epsilon(1e-14));
}

TEST_CASE("Bohr-Fourier coefficient extracts amplitude and phase") {
  const double T = 3000.0, dt = 0.02;
  const int n = static_cast<int>(T / dt) + 1;
  std::vector<double> trace(n);
  for (int i = 0; i < n; ++i) {
    const double t = i * dt;
    trace[i] = 1.1 + 0.8 * std::cos(1.0 * t + 0.4) + 0.3 * std::cos(std::numbers::sqrt2 * t);
  }
  // coefficient at a carried frequency: (amp/2) e^{i phase}
  const std::complex<double> c1 = bohr_fourier_coeff(trace, dt, 1.0);
  CHECK(std::abs(c1 - 0.4 * std::polar(1.0, 0.4)) < 2e-3);
  const std::complex<double> c2 = bohr_fourier_coeff(trace, dt, std::numbers::sqrt2);
  CHECK(std::abs(c2 - std::complex<double>(0.15, 0.0)) < 2e-3);
  // DC: lambda = 0 returns the plain mean
  CHECK(bohr_fourier_coeff(trace, dt, 0.0).real() == doctest::Approx(1.1).epsilon(1e-3));
  // off-module frequency carries nothing
  CHECK(std::abs(bohr_fourier_coeff(trace, dt, 0.77)) < 2e-3);

  // preconditions: horizon >= 1e3 and dt fine enough for the frequency
  std::vector<double> tiny(100, 1.0);
  CHECK_THROWS_AS(bohr_fourier_coeff(tiny, 0.01, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(bohr_fourier_coeff(trace, dt, 100.0), std::invalid_argument);
}

TEST_CASE("translation numbers of a periodic coefficient sit on the period") {
  APCoefficient a = ap_constant(0.0);
  TemporalMode m;
  m.frequency = kTwoPi / 5.0;  // period 5
  m.profile.constant = 1.0;
  a.modes.push_back(m);
  const TranslationScan scan = epsilon_translation_numbers(a, 0.05, 21.0, 0.005);
  REQUIRE(!scan.tau.empty());
  for (double tau : scan.tau) {
    const double frac = std::abs(std::remainder(tau, 5.0));
    CHECK(frac < 0.05);  // |2 sin(pi tau/5)| < eps forces tau near multiples of 5
  }
  CHECK(scan.max_gap == doctest::Approx(5.0).epsilon(0.02));

  // almost periodic pair (1, sqrt 2): translation numbers exist and are
  // relatively dense, though not periodic
  const APCoefficient w = workhorse();
  APCoefficient two = w;
  TemporalMode m2;
  m2.frequency = std::numbers::sqrt2;
  m2.profile.constant = 0.3;
  two.modes.push_back(m2);
  const TranslationScan s2 = epsilon_translation_numbers(two, 0.25, 400.0, 0.01);
  CHECK(s2.tau.size() > 3);
  CHECK(s2.max_gap < 400.0);
}

TEST_CASE("module containment: synthetic trace in and out of the module") {
  const double dt = 0.05, T = 2000.0;
  const int n = static_cast<int>(T / dt) + 1;
  const std::vector<double> base = {1.0, std::numbers::sqrt2};

  std::vector<double> inside(n);
  for (int i = 0; i < n; ++i) {
    const double t = i * dt;
    inside[i] = 1.3 + 0.4 * std::cos(t + 0.1) + 0.3 * std::cos(std::numbers::sqrt2 * t) +
                0.1 * std::cos((2.0 - std::numbers::sqrt2) * t + 0.7);
  }
  const ModuleContainment good = module_containment_check(inside, dt, base, 0.02);
  CHECK(good.pass);
  REQUIRE(!good.flags.empty());
  int matched = 0;
  for (const auto& f : good.flags)
    if (f.matched) ++matched;
  CHECK(matched == static_cast<int>(good.flags.size()));
  // the three carried lines plus the DC flag all surface
  CHECK(good.flags.size() >= 4);

  std::vector<double> outside(n);
  for (int i = 0; i < n; ++i) {
    const double t = i * dt;
    outside[i] = 1.3 + 0.4 * std::cos(t) + 0.25 * std::cos(0.77 * t);  // 0.77 off-module
  }
  const ModuleContainment bad = module_containment_check(outside, dt, base, 0.02);
  CHECK(!bad.pass);
  bool found_culprit = false;
  for (const auto& f : bad.flags)
    if (!f.matched && std::abs(f.frequency - 0.77) < 0.05) found_culprit = true;
  CHECK(found_culprit);
}

TEST_CASE("torus seam mismatch vanishes iff wavevectors are commensurate") {
  const Domain t = torus1();
  APCoefficient a = ap_constant(0.2);
  TemporalMode m;
  m.frequency = 1.0;
  SpatialMode s;
  s.wavevector[0] = 2.0;  // integer mode on the 2 pi torus
  s.amplitude = 0.5;
  m.profile.modes.push_back(s);
  a.modes.push_back(m);
  CHECK(torus_seam_mismatch(a, t) < 1e-12);

  a.modes[0].profile.modes[0].wavevector[0] = 1.1;
  CHECK(torus_seam_mismatch(a, t) > 0.01);
}
