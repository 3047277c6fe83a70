#pragma once

#include <optional>
#include <string>

#include "nlkpp/evolution.hpp"

namespace nlkpp {

struct WindowEstimate {
  double t_begin = 0.0, t_end = 0.0;
  double value = 0.0;
};

struct LyapunovOptions {
  double horizon = 200.0;  // pre: >= 100
  double renorm_dt = 1.0;  // pre: >= 10 * dt
  double dt = 0.01;
  int initials = 3;  // contract: >= 3 distinct X++ starts
  std::uint64_t seed = 20240601;
  ConvolutionMethod method = ConvolutionMethod::Auto;
  double window_tol = 2e-2;
};

// Renormalized linear propagation: divide by the sup norm every renorm_dt,
// accumulate the logs; estimate = accumulated log / elapsed over the second
// half of the horizon (first half discarded as transient).
struct LyapunovReport {
  double lambda = 0.0;                // estimate from the reference initial
  std::vector<double> per_initial;    // [0] = constant start, then seeded starts
  double initial_spread = 0.0;        // max - min over per_initial
  std::vector<WindowEstimate> windows;  // expanding second-half windows
  double window_gap = 0.0;            // |last - previous| window estimate
  bool windows_converged = false;
  double horizon = 0.0, renorm_dt = 0.0;
};

LyapunovReport lyapunov_exponent(const APCoefficient& a, const Kernel& kernel,
                                 const Domain& domain, const LyapunovOptions& opts = {});

struct EigenReport {
  double lambda = 0.0;
  std::vector<double> eigenvector;  // strictly positive, sup norm 1
  double residual = 0.0;            // ||M phi - lambda phi||_inf / ||phi||_inf
  int iterations = 0;
  bool converged = false;
};

// Dominant eigenpair of M[i,j] = w_j kappa(x_j - x_i) + a(x_i) [i=j] by power
// iteration on M + cI, c = 1 + sup|a| (nonnegative irreducible shift).  Stops
// when the sup-norm eigen-residual drops below tol * (c + |Rayleigh|); errors
// at max_iter.
EigenReport principal_eigenvalue_static(const SpatialProfile& a, const Kernel& kernel,
                                        const Domain& domain, double tol = 1e-12,
                                        int max_iter = 100000);

struct LowerBound {
  std::string provenance;
  double value = 0.0;
};

// Always: sup_x of the time mean.  When a is static and the kernel symmetric:
// space mean + (1/|D|) iint kappa (bounded domain) or space mean + 1 (torus).
std::vector<LowerBound> pe_lower_bounds(const APCoefficient& a, const Kernel& kernel,
                                        const Domain& domain);

enum class CertificateKind { Lower, Upper };

struct CertificateReport {
  bool pass = false;
  double min_ratio = 0.0, max_ratio = 0.0;  // (L phi)/phi over interior samples
  double margin = 0.0;  // worst signed violation of the inequality, scaled by sup phi
  double tol = 0.0;
};

// Test-function certificate for L(a)phi = -dphi/dt + K phi + a phi with
// centered time differences on the sampled window.  Lower kind: phi >= 0,
// positive somewhere, passes iff L(a)phi >= lambda phi - tol*sup(phi).
// Upper kind: inf phi > 0 required, passes iff L(a)phi <= lambda phi + tol*sup(phi).
CertificateReport certificate_check(const Trajectory& phi, const APCoefficient& a,
                                    const Kernel& kernel, const Domain& domain, double lambda,
                                    CertificateKind kind, double tol);

// Certificate manufactured from a renormalized linear run: the compensated
// trajectory phi = e^{-lambda (t-t0)} u(t) satisfies L(a)phi = lambda phi
// exactly along exact solutions, so the sampled ratio range brackets the
// grid-level growth rate.
struct TrajectoryCertificate {
  double lower = 0.0, upper = 0.0;  // min/max sampled ratio
  double lambda_ref = 0.0;          // compensation rate used
  Trajectory phi;
};

TrajectoryCertificate certificate_from_run(const APCoefficient& a, const Kernel& kernel,
                                           const Domain& domain,
                                           const LyapunovOptions& opts = {},
                                           int sample_every = 5);

struct AuditOptions {
  LyapunovOptions lyapunov;
  double slack = 2e-2;
};

struct AuditReport {
  LyapunovReport lyapunov;
  std::vector<LowerBound> analytic_bounds;
  double cert_lower = 0.0, cert_upper = 0.0;
  double best_lower = 0.0;
  std::optional<EigenReport> static_eigen;  // populated for static a
  double slack = 0.0;
  bool ordered = false;
};

// Prop-ordering audit: best certified lower <= Lyapunov estimate <= certified
// upper within slack + certificate width.
AuditReport relation_audit(const APCoefficient& a, const Kernel& kernel, const Domain& domain,
                           const AuditOptions& opts = {});

struct MonotonicityReport {
  double lambda_inner = 0.0, lambda_outer = 0.0;
  bool ok = false;
};

// lambda(D1) <= lambda(D2) + tol for aligned D1 subset D2 (static route:
// power iteration on both grids).
MonotonicityReport domain_monotonicity_check(const SpatialProfile& a, const KernelSpec& spec,
                                             const Domain& d1, const Domain& d2,
                                             double tol = 1e-10);

}  // namespace nlkpp
