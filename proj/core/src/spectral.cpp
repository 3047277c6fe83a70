#include "nlkpp/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

#include "coefficient_grid.hpp"

namespace nlkpp {

namespace {

Field random_positive_field(const Domain& domain, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(0.5, 1.5);
  Field f;
  f.values.resize(domain.total());
  for (auto& v : f.values) v = dist(rng);
  return f;
}

struct StepLayout {
  double dt = 0.0;
  int steps_per_renorm = 0;
  int renorms = 0;  // R: horizon covered is R * renorm_dt >= requested horizon
};

StepLayout lyapunov_layout(const APCoefficient& a, const LyapunovOptions& opts) {
  if (opts.horizon < 100.0)
    throw std::invalid_argument("lyapunov: horizon must be >= 100 (transient discard)");
  if (!(opts.dt > 0.0) || opts.renorm_dt < 10.0 * opts.dt - 1e-12)
    throw std::invalid_argument("lyapunov: renorm_dt must be >= 10 * dt");
  if (opts.initials < 3)
    throw std::invalid_argument("lyapunov: need at least 3 distinct initial states");
  StepLayout lay;
  const double dt0 = std::min(opts.dt, dt_stability_bound_linear(a));
  lay.steps_per_renorm = static_cast<int>(std::ceil(opts.renorm_dt / dt0 - 1e-9));
  lay.dt = opts.renorm_dt / lay.steps_per_renorm;
  lay.renorms = static_cast<int>(std::ceil(opts.horizon / opts.renorm_dt - 1e-9));
  return lay;
}

}  // namespace

LyapunovReport lyapunov_exponent(const APCoefficient& a, const Kernel& kernel,
                                 const Domain& domain, const LyapunovOptions& opts) {
  const StepLayout lay = lyapunov_layout(a, opts);
  const int R = lay.renorms;
  const int k_half = R / 2;

  LyapunovReport rep;
  rep.horizon = R * opts.renorm_dt;
  rep.renorm_dt = opts.renorm_dt;

  EvolutionOptions eo;
  eo.dt = lay.dt;
  eo.method = opts.method;

  for (int init = 0; init < opts.initials; ++init) {
    Field u = init == 0 ? constant_field(domain, 1.0)
                        : random_positive_field(domain, opts.seed + init);
    Propagator prop(domain, kernel, a, eo);
    std::vector<double> cum(R + 1, 0.0);
    for (int k = 1; k <= R; ++k) {
      u.time = (k - 1) * opts.renorm_dt;  // rebase to suppress drift
      prop.advance(u, lay.steps_per_renorm, lay.dt);
      const double m = u.sup_norm();
      if (!(m > 0.0) || !std::isfinite(m))
        throw std::runtime_error("lyapunov: renormalized field degenerated");
      cum[k] = cum[k - 1] + std::log(m);
      for (auto& v : u.values) v /= m;
    }
    rep.per_initial.push_back((cum[R] - cum[k_half]) / ((R - k_half) * opts.renorm_dt));

    if (init == 0) {
      for (int q = 1; q <= 4; ++q) {
        const int kq = k_half + static_cast<int>(std::llround(q * (R - k_half) / 4.0));
        WindowEstimate w;
        w.t_begin = k_half * opts.renorm_dt;
        w.t_end = kq * opts.renorm_dt;
        w.value = (cum[kq] - cum[k_half]) / ((kq - k_half) * opts.renorm_dt);
        rep.windows.push_back(w);
      }
      rep.window_gap = std::abs(rep.windows[3].value - rep.windows[2].value);
      rep.windows_converged = rep.window_gap < opts.window_tol;
    }
  }
  rep.lambda = rep.per_initial[0];
  const auto [lo, hi] = std::minmax_element(rep.per_initial.begin(), rep.per_initial.end());
  rep.initial_spread = *hi - *lo;
  return rep;
}

EigenReport principal_eigenvalue_static(const SpatialProfile& a, const Kernel& kernel,
                                        const Domain& domain, double tol, int max_iter) {
  const int n = domain.total();
  const std::vector<double> ag = a.gridded(domain);
  double amax = 0.0;
  for (double v : ag) amax = std::max(amax, std::abs(v));
  const double c = 1.0 + amax;  // shift making the iteration matrix nonnegative

  std::vector<double> w(n);
  for (int i = 0; i < n; ++i) w[i] = domain.quad_weight(i);

  DispersalOperator op(kernel, domain);
  std::vector<double> v(n, 1.0), y(n);
  double ray = 0.0, res = 0.0;
  int it = 0;
  bool converged = false;
  for (it = 1; it <= max_iter; ++it) {
    op.apply(v.data(), y.data());
    for (int i = 0; i < n; ++i) y[i] += (ag[i] + c) * v[i];
    // Rayleigh quotient in the quadrature-weighted inner product, under which
    // the operator is self-adjoint.
    double num = 0.0, den = 0.0;
    for (int i = 0; i < n; ++i) {
      num += w[i] * v[i] * y[i];
      den += w[i] * v[i] * v[i];
    }
    ray = num / den;
    // Sup-norm eigen-residual of the current (sup-normalized) iterate.  The
    // Rayleigh estimate settles quadratically in the eigenvector error, so a
    // Rayleigh plateau alone would leave the residual orders of magnitude
    // behind; drive the residual itself below tol instead.
    res = 0.0;
    for (int i = 0; i < n; ++i) res = std::max(res, std::abs(y[i] - ray * v[i]));
    double m = 0.0;
    for (double x : y) m = std::max(m, std::abs(x));
    if (!(m > 0.0) || !std::isfinite(m))
      throw std::runtime_error("power iteration degenerated to zero or non-finite state");
    for (int i = 0; i < n; ++i) v[i] = y[i] / m;
    if (it >= 2 && res <= tol * (c + std::abs(ray))) {
      converged = true;
      break;
    }
  }
  if (!converged)
    throw std::runtime_error("power iteration: eigen-residual did not settle within " +
                             std::to_string(max_iter) + " iterations");

  op.apply(v.data(), y.data());
  for (int i = 0; i < n; ++i) y[i] += (ag[i] + c) * v[i];
  res = 0.0;
  for (int i = 0; i < n; ++i) res = std::max(res, std::abs(y[i] - ray * v[i]));

  EigenReport rep;
  rep.lambda = ray - c;
  rep.eigenvector = std::move(v);
  rep.residual = res;
  rep.iterations = it;
  rep.converged = true;
  return rep;
}

std::vector<LowerBound> pe_lower_bounds(const APCoefficient& a, const Kernel& kernel,
                                        const Domain& domain) {
  std::vector<LowerBound> out;
  const SpatialProfile mean_t = time_mean(a);
  const std::vector<double> g = mean_t.gridded(domain);
  double sup = -std::numeric_limits<double>::infinity();
  for (double v : g) sup = std::max(sup, v);
  out.push_back({"sup of the time mean", sup});

  // The refined bounds need a static coefficient and a symmetric kernel; both
  // shipped families are radial, hence symmetric.
  if (a.is_static()) {
    const double abar = space_mean(g, domain);
    if (domain.is_torus()) {
      out.push_back({"space mean + unit kernel mass (torus)", abar + kernel.discrete_mass});
    } else {
      const double dbl = space_mean(neumann_shift(kernel, domain), domain);
      out.push_back({"space mean + kernel double integral over D x D / |D|", abar + dbl});
    }
  }
  return out;
}

namespace {

struct RatioScan {
  double min_ratio = std::numeric_limits<double>::infinity();
  double max_ratio = -std::numeric_limits<double>::infinity();
  double worst_low = -std::numeric_limits<double>::infinity();   // max of (lambda phi - L phi)
  double worst_high = -std::numeric_limits<double>::infinity();  // max of (L phi - lambda phi)
  double sup_phi = 0.0;
};

RatioScan scan_certificate(const Trajectory& phi, const APCoefficient& a, const Kernel& kernel,
                           const Domain& domain, double lambda) {
  if (phi.size() < 3)
    throw std::invalid_argument("certificate: need at least three recorded slices");
  const int n = domain.total();
  const double delta = phi.times[1] - phi.times[0];
  DispersalOperator op(kernel, domain);
  detail::CoefficientGrid agrid(a, domain);
  std::vector<double> Kv(n), av(n);

  RatioScan scan;
  for (const auto& f : phi.fields)
    for (double v : f) scan.sup_phi = std::max(scan.sup_phi, std::abs(v));
  const double floor = 1e-12 * scan.sup_phi;

  for (int k = 1; k + 1 < phi.size(); ++k) {
    if (std::abs((phi.times[k + 1] - phi.times[k - 1]) - 2.0 * delta) >
        1e-9 * std::max(1.0, 2.0 * delta))
      throw std::invalid_argument("certificate: recorded times must be uniform");
    const auto& f = phi.fields[k];
    op.apply(f.data(), Kv.data());
    agrid.eval_into(phi.times[k], av.data());
    for (int i = 0; i < n; ++i) {
      const double dphi = (phi.fields[k + 1][i] - phi.fields[k - 1][i]) / (2.0 * delta);
      const double L = -dphi + Kv[i] + av[i] * f[i];
      scan.worst_low = std::max(scan.worst_low, lambda * f[i] - L);
      scan.worst_high = std::max(scan.worst_high, L - lambda * f[i]);
      if (f[i] > floor) {
        const double r = L / f[i];
        scan.min_ratio = std::min(scan.min_ratio, r);
        scan.max_ratio = std::max(scan.max_ratio, r);
      }
    }
  }
  return scan;
}

}  // namespace

CertificateReport certificate_check(const Trajectory& phi, const APCoefficient& a,
                                    const Kernel& kernel, const Domain& domain, double lambda,
                                    CertificateKind kind, double tol) {
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  for (const auto& f : phi.fields)
    for (double v : f) {
      lo = std::min(lo, v);
      hi = std::max(hi, std::abs(v));
    }
  if (kind == CertificateKind::Lower) {
    if (lo < -1e-15 * std::max(1.0, hi) || !(hi > 0.0))
      throw std::invalid_argument(
          "certificate (lower): test function must be nonnegative and not identically zero");
  } else {
    if (!(lo > 0.0))
      throw std::invalid_argument("certificate (upper): test function must be strictly positive");
  }

  const RatioScan scan = scan_certificate(phi, a, kernel, domain, lambda);
  CertificateReport rep;
  rep.tol = tol;
  rep.min_ratio = scan.min_ratio;
  rep.max_ratio = scan.max_ratio;
  rep.margin = (kind == CertificateKind::Lower ? scan.worst_low : scan.worst_high) / scan.sup_phi;
  rep.pass = rep.margin <= tol;
  return rep;
}

TrajectoryCertificate certificate_from_run(const APCoefficient& a, const Kernel& kernel,
                                           const Domain& domain, const LyapunovOptions& opts,
                                           int sample_every) {
  if (sample_every < 1) throw std::invalid_argument("certificate_from_run: sample_every >= 1");
  const StepLayout lay = lyapunov_layout(a, opts);
  const int R = lay.renorms;
  const int k_half = R / 2;
  const double t0 = k_half * opts.renorm_dt;

  EvolutionOptions eo;
  eo.dt = lay.dt;
  eo.method = opts.method;
  Propagator prop(domain, kernel, a, eo);
  Field u = constant_field(domain, 1.0);

  struct Snapshot {
    double t;
    double cum_base;
    std::vector<double> values;
  };
  std::vector<Snapshot> snaps;
  std::vector<double> cum(R + 1, 0.0);
  long global_step = 0;
  for (int k = 1; k <= R; ++k) {
    u.time = (k - 1) * opts.renorm_dt;
    for (int s = 0; s < lay.steps_per_renorm; ++s) {
      prop.advance(u, 1, lay.dt);
      ++global_step;
      const double t = (k - 1) * opts.renorm_dt + (s + 1) * lay.dt;
      if (t >= t0 - 1e-12 && global_step % sample_every == 0)
        snaps.push_back({t, cum[k - 1], u.values});
    }
    const double m = u.sup_norm();
    if (!(m > 0.0) || !std::isfinite(m))
      throw std::runtime_error("certificate_from_run: renormalized field degenerated");
    cum[k] = cum[k - 1] + std::log(m);
    for (auto& v : u.values) v /= m;
  }
  const double lambda_hat = (cum[R] - cum[k_half]) / ((R - k_half) * opts.renorm_dt);

  TrajectoryCertificate cert;
  cert.lambda_ref = lambda_hat;
  cert.phi.dt = lay.dt;
  cert.phi.record_every = sample_every;
  for (const auto& s : snaps) {
    const double scale = std::exp(s.cum_base - lambda_hat * (s.t - t0));
    cert.phi.times.push_back(s.t);
    cert.phi.fields.push_back(s.values);
    for (auto& v : cert.phi.fields.back()) v *= scale;
  }
  const RatioScan scan = scan_certificate(cert.phi, a, kernel, domain, lambda_hat);
  cert.lower = scan.min_ratio;
  cert.upper = scan.max_ratio;
  return cert;
}

AuditReport relation_audit(const APCoefficient& a, const Kernel& kernel, const Domain& domain,
                           const AuditOptions& opts) {
  AuditReport rep;
  rep.slack = opts.slack;
  rep.lyapunov = lyapunov_exponent(a, kernel, domain, opts.lyapunov);
  rep.analytic_bounds = pe_lower_bounds(a, kernel, domain);
  const TrajectoryCertificate cert = certificate_from_run(a, kernel, domain, opts.lyapunov);
  rep.cert_lower = cert.lower;
  rep.cert_upper = cert.upper;

  rep.best_lower = cert.lower;
  for (const auto& b : rep.analytic_bounds) rep.best_lower = std::max(rep.best_lower, b.value);
  double best_upper = cert.upper;
  if (a.is_static()) {
    rep.static_eigen = principal_eigenvalue_static(time_mean(a), kernel, domain);
    rep.best_lower = std::max(rep.best_lower,
                              rep.static_eigen->lambda - rep.static_eigen->residual);
    best_upper = std::min(best_upper, rep.static_eigen->lambda + rep.static_eigen->residual);
  }
  rep.ordered = rep.best_lower <= rep.lyapunov.lambda + opts.slack &&
                rep.lyapunov.lambda <= best_upper + opts.slack;
  return rep;
}

MonotonicityReport domain_monotonicity_check(const SpatialProfile& a, const KernelSpec& spec,
                                             const Domain& d1, const Domain& d2, double tol) {
  if (d1.is_torus())
    throw std::invalid_argument("domain_monotonicity_check: the inner domain must be a box");
  if (d2.is_torus()) {
    for (int ax = 0; ax < d1.dim; ++ax) {
      if (std::abs(d1.spacing[ax] - d2.spacing[ax]) > 1e-9 * d2.spacing[ax])
        throw std::invalid_argument("domain_monotonicity_check: grid spacings differ");
      const double off = (d1.lower[ax] - d2.lower[ax]) / d2.spacing[ax];
      if (std::abs(off - std::llround(off)) > 1e-6)
        throw std::invalid_argument("domain_monotonicity_check: grids are not aligned");
      if (d1.extent(ax) > d2.extent(ax) + 1e-12)
        throw std::invalid_argument(
            "domain_monotonicity_check: the box exceeds one torus period");
    }
  } else {
    (void)subgrid_indices(d1, d2);  // validates alignment and containment
  }
  const Kernel k1 = sample_kernel(spec, d1);
  const Kernel k2 = sample_kernel(spec, d2);
  MonotonicityReport rep;
  rep.lambda_inner = principal_eigenvalue_static(a, k1, d1).lambda;
  rep.lambda_outer = principal_eigenvalue_static(a, k2, d2).lambda;
  rep.ok = rep.lambda_inner <= rep.lambda_outer + tol;
  return rep;
}

}  // namespace nlkpp
