#include <Eigen/Dense>
#include <cmath>
#include <numbers>

#include "dense_eig.hpp"
#include "doctest.h"
#include "nlkpp/spectral.hpp"

using namespace nlkpp;

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;

Domain torus1(int n) {
  return build_domain(DomainKind::Torus, 1, {0.0, 0.0}, {kTwoPi, 0.0}, {n, 1});
}
Domain box01(int n = 101) {
  return build_domain(DomainKind::BoundedBox, 1, {0.0, 0.0}, {1.0, 0.0}, {n, 1});
}

// third, library-backed route: LAPACK-style solve on the symmetrized operator
double eigen_dense_top(const SpatialProfile& a, const Kernel& kernel, const Domain& d) {
  const int n = d.total();
  const std::vector<double> flat = detail::dense_operator_symmetrized(a, kernel, d);
  Eigen::MatrixXd M(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) M(i, j) = flat[static_cast<size_t>(i) * n + j];
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M, Eigen::EigenvaluesOnly);
  return es.eigenvalues().maxCoeff();
}

SpatialProfile one_plus_cos() {
  SpatialProfile p;
  p.constant = 1.0;
  SpatialMode m;
  m.wavevector[0] = 1.0;
  m.amplitude = 1.0;
  p.modes.push_back(m);
  return p;
}
}  // namespace

TEST_CASE("power iteration vs two dense routes: frozen eigenvalues") {
  // bounded interval, no growth
  {
    const Domain d = box01();
    KernelSpec spec;
    spec.param = 1.0;
    const Kernel k = sample_kernel(spec, d);
    const SpatialProfile zero = profile_constant(0.0);
    const EigenReport rep = principal_eigenvalue_static(zero, k, d);
    CHECK(rep.converged);
    CHECK(rep.residual < 1e-10);
    CHECK(rep.lambda == doctest::Approx(0.36916622014140312).epsilon(1e-10));  // frozen
    CHECK(eigen_dense_top(zero, k, d) == doctest::Approx(rep.lambda).epsilon(1e-10));
    const double jac =
        detail::dense_top_eigenvalue(detail::dense_operator_symmetrized(zero, k, d), d.total());
    CHECK(jac == doctest::Approx(rep.lambda).epsilon(1e-10));
    // eigenvector: strictly positive, sup-normalized, boundary-dipped
    double mx = 0.0;
    for (double v : rep.eigenvector) {
      CHECK(v > 0.0);
      mx = std::max(mx, v);
    }
    CHECK(mx == doctest::Approx(1.0));
    CHECK(rep.eigenvector.front() < rep.eigenvector[50]);
  }
  // torus with a = 1 + cos x
  {
    const Domain d = torus1(256);
    KernelSpec spec;
    spec.param = 0.35;
    const Kernel k = sample_kernel(spec, d);
    const EigenReport rep = principal_eigenvalue_static(one_plus_cos(), k, d);
    CHECK(rep.converged);
    CHECK(rep.lambda == doctest::Approx(2.8396804602217007).epsilon(1e-9));  // frozen
    CHECK(eigen_dense_top(one_plus_cos(), k, d) == doctest::Approx(rep.lambda).epsilon(1e-10));
  }
  // constants are exact eigenfunctions on the torus: lambda = 1 + a0
  {
    const Domain d = torus1(64);
    KernelSpec spec;
    spec.param = 0.35;
    const Kernel k = sample_kernel(spec, d);
    for (double a0 : {-0.5, 0.0, 0.8}) {
      const EigenReport rep = principal_eigenvalue_static(profile_constant(a0), k, d);
      CHECK(rep.lambda == doctest::Approx(1.0 + a0).epsilon(1e-12));
      for (double v : rep.eigenvector) CHECK(v == doctest::Approx(1.0).epsilon(1e-10));
    }
  }
}

TEST_CASE("analytic lower bounds for the principal eigenvalue") {
  const Domain d = box01();
  KernelSpec spec;
  spec.param = 1.0;
  const Kernel k = sample_kernel(spec, d);
  const auto bounds = pe_lower_bounds(ap_constant(0.0), k, d);
  REQUIRE(bounds.size() >= 2);
  double best = -1e300;
  for (const auto& b : bounds) best = std::max(best, b.value);
  // frozen discrete double integral (1/|D|) iint kappa; the continuum value
  // 0.36874638037250724 sits within the trapezoid budget
  CHECK(best == doctest::Approx(0.36874114802055691).epsilon(1e-12));
  CHECK(std::abs(best - 0.36874638037250724) < 1e-5);
  // and the bound is actually below the eigenvalue
  CHECK(best <= 0.36916622014140312);

  const Domain t = torus1(256);
  KernelSpec spec2;
  spec2.param = 0.35;
  const Kernel k2 = sample_kernel(spec2, t);
  APCoefficient a = ap_constant(0.0);
  TemporalMode m0;
  m0.frequency = 0.0;
  m0.profile = one_plus_cos();
  a.modes.push_back(m0);
  const auto tb = pe_lower_bounds(a, k2, t);
  double sup_mean = -1e300, mean_mass = -1e300;
  for (const auto& b : tb) {
    sup_mean = std::max(sup_mean, b.value);
    if (b.provenance.find("mass") != std::string::npos) mean_mass = b.value;
  }
  CHECK(sup_mean == doctest::Approx(2.0).epsilon(1e-12));  // both routes give 2 here
  CHECK(mean_mass == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("Lyapunov estimator: exact constant rate, dual convolution routes") {
  const Domain d = torus1(64);
  KernelSpec spec;
  spec.param = 0.35;
  const Kernel k = sample_kernel(spec, d);
  LyapunovOptions opts;
  opts.horizon = 100;
  const LyapunovReport rep = lyapunov_exponent(ap_constant(-0.3), k, d, opts);
  CHECK(rep.lambda == doctest::Approx(0.7).epsilon(1e-9));
  // random initials carry a slowest-mode transient (spectral gap ~0.06 on this
  // torus) into the second-half average; ~1e-4 is the honest scale at T=100
  CHECK(rep.initial_spread < 2e-3);
  CHECK(rep.windows_converged);
  CHECK(rep.per_initial.size() == 3);
  REQUIRE(rep.windows.size() == 4);
  CHECK(rep.windows.back().t_end == doctest::Approx(100.0));

  LyapunovOptions direct = opts;
  direct.method = ConvolutionMethod::Direct;
  const LyapunovReport rep2 = lyapunov_exponent(ap_constant(-0.3), k, d, direct);
  CHECK(rep2.lambda == doctest::Approx(rep.lambda).epsilon(1e-11));

  // preconditions
  LyapunovOptions bad = opts;
  bad.horizon = 50;
  CHECK_THROWS_AS(lyapunov_exponent(ap_constant(0.0), k, d, bad), std::invalid_argument);
  bad = opts;
  bad.renorm_dt = 0.05;
  CHECK_THROWS_AS(lyapunov_exponent(ap_constant(0.0), k, d, bad), std::invalid_argument);
  bad = opts;
  bad.initials = 2;
  CHECK_THROWS_AS(lyapunov_exponent(ap_constant(0.0), k, d, bad), std::invalid_argument);
}

TEST_CASE("certificates: manufactured eigen-trajectories bracket their rate") {
  const Domain d = torus1(64);
  KernelSpec spec;
  spec.param = 0.35;
  const Kernel k = sample_kernel(spec, d);

  // phi(t) = e^{mu t} v with (K + a)v = lambda v gives
  // L phi = -dphi/dt + (K + a)phi = (lambda - sinh(mu delta)/delta) phi
  // pointwise under the centered time difference, up to the eigen residual.
  const auto manufactured = [&](const SpatialProfile& a) {
    const EigenReport eig = principal_eigenvalue_static(a, k, d);
    REQUIRE(eig.converged);
    const double mu = -0.5, delta = 0.02;
    Trajectory phi;
    phi.dt = delta;
    phi.record_every = 1;
    for (int s = 0; s <= 40; ++s) {
      phi.times.push_back(s * delta);
      std::vector<double> f(eig.eigenvector);
      const double g = std::exp(mu * phi.times.back());
      for (double& v : f) v *= g;
      phi.fields.push_back(std::move(f));
    }
    APCoefficient ap = ap_constant(0.0);
    TemporalMode m0;
    m0.frequency = 0.0;
    m0.profile = a;
    ap.modes.push_back(m0);
    const double rate = eig.lambda - std::sinh(mu * delta) / delta;

    const CertificateReport lower =
        certificate_check(phi, ap, k, d, rate, CertificateKind::Lower, 1e-3);
    CHECK(lower.pass);
    const CertificateReport upper =
        certificate_check(phi, ap, k, d, rate, CertificateKind::Upper, 1e-3);
    CHECK(upper.pass);

    // negative controls: the rate claim is sharp on both sides
    CHECK(!certificate_check(phi, ap, k, d, rate + 0.05, CertificateKind::Lower, 1e-3).pass);
    CHECK(!certificate_check(phi, ap, k, d, rate - 0.05, CertificateKind::Upper, 1e-3).pass);
    return std::pair{lower, rate};
  };

  // constant profile: v is exactly constant, so the sampled ratio is sharp
  const auto [cl, crate] = manufactured(profile_constant(0.4));
  CHECK(cl.min_ratio == doctest::Approx(crate).epsilon(1e-9));
  CHECK(cl.max_ratio == doctest::Approx(crate).epsilon(1e-9));

  // nontrivial profile: margins still certify the rate
  manufactured(one_plus_cos());

  // precondition: the upper certificate refuses sign-changing test functions
  Trajectory bad;
  bad.dt = 0.02;
  for (int s = 0; s < 3; ++s) {
    bad.times.push_back(s * 0.02);
    bad.fields.push_back(std::vector<double>(d.total(), s == 1 ? 0.0 : 1.0));
  }
  CHECK_THROWS_AS(
      certificate_check(bad, ap_constant(0.0), k, d, 1.0, CertificateKind::Upper, 1e-3),
      std::invalid_argument);
}

TEST_CASE("certificate from a renormalized run brackets the constant rate") {
  const Domain d = torus1(64);
  KernelSpec spec;
  spec.param = 0.35;
  const Kernel k = sample_kernel(spec, d);
  LyapunovOptions opts;
  opts.horizon = 100;
  const TrajectoryCertificate cert = certificate_from_run(ap_constant(0.2), k, d, opts);
  CHECK(cert.lower == doctest::Approx(1.2).epsilon(1e-6));
  CHECK(cert.upper == doctest::Approx(1.2).epsilon(1e-6));
  CHECK(cert.lower <= cert.upper);
  CHECK(cert.lambda_ref == doctest::Approx(1.2).epsilon(1e-6));
}

TEST_CASE("relation audit orders the three spectral routes") {
  const Domain d = torus1(64);
  KernelSpec spec;
  spec.param = 0.35;
  const Kernel k = sample_kernel(spec, d);
  AuditOptions ao;
  ao.lyapunov.horizon = 100;
  const AuditReport rep = relation_audit(ap_constant(0.3), k, d, ao);
  CHECK(rep.ordered);
  CHECK(rep.best_lower <= rep.lyapunov.lambda + rep.slack);
  CHECK(rep.lyapunov.lambda <= rep.cert_upper + rep.slack);
  REQUIRE(rep.static_eigen.has_value());
  CHECK(rep.static_eigen->lambda == doctest::Approx(1.3).epsilon(1e-10));
}

TEST_CASE("domain monotonicity: nested boxes and box-in-torus alignment") {
  KernelSpec spec;
  spec.param = 1.0;
  const SpatialProfile zero = profile_constant(0.0);
  const Domain inner =
      build_domain(DomainKind::BoundedBox, 1, {0.3, 0.0}, {0.7, 0.0}, {41, 1});
  const Domain outer = box01();
  const MonotonicityReport rep = domain_monotonicity_check(zero, spec, inner, outer);
  CHECK(rep.ok);
  CHECK(rep.lambda_inner < rep.lambda_outer);

  // misaligned grids are refused rather than silently compared
  const Domain off =
      build_domain(DomainKind::BoundedBox, 1, {0.3, 0.0}, {0.7, 0.0}, {38, 1});
  CHECK_THROWS_AS(domain_monotonicity_check(zero, spec, off, outer), std::invalid_argument);
}
