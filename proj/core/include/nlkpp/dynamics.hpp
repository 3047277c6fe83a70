#pragma once

#include <functional>
#include <optional>

#include "nlkpp/spectral.hpp"

namespace nlkpp {

// rho(u,v) = inf{ln alpha : u/alpha <= v <= alpha u} = sup |ln(u/v)|
// on strictly positive fields; throws unless both inputs are in X++.
double part_metric(const std::vector<double>& u, const std::vector<double>& v);

struct PartMetricTrace {
  std::vector<double> times;
  std::vector<double> rho;
  bool nonexpansive = false;   // rho never increases by more than tol_step
  double max_increase = 0.0;   // worst per-interval increase observed
  double sigma_tilde = 0.0;    // min per-tau decrement while rho >= sigma
  int decrement_samples = 0;   // tau-intervals entering sigma_tilde
  double tol_step = 0.0;
};

// Evolves the pair and records rho at multiples of tau; estimates the strict
// per-tau decrement sigma_tilde over intervals where rho >= sigma_threshold.
PartMetricTrace contraction_check(const Problem& problem, const Field& u0, const Field& v0,
                                  double tau, int repetitions, double sigma_threshold = 0.1,
                                  const EvolutionOptions& opts = {}, double tol_step = 1e-9);

struct PullbackOptions {
  double tol = 1e-6;
  double k0 = 0.0;     // 0 -> max(20, window length)
  double k_max = 640.0;
  double cap_factor = 2.0;        // start value M = cap_factor * u_cap
  std::optional<double> start_value;  // overrides M when set
  double record_dt = 0.05;        // window recording cadence
  double dt = 0.01;
  ConvolutionMethod method = ConvolutionMethod::Auto;
  int probes = 17;                // evenly spaced probe points for traces
  double probe_extend_to = 0.0;   // continue probe traces past t_hi (0 = off)
  std::optional<double> lambda_hint;  // spectral estimate, to skip the internal run
};

struct EntireSolution {
  double t_lo = 0.0, t_hi = 0.0;
  Trajectory window;            // cadence record_dt on [t_lo, t_hi]
  double floor = 0.0;           // min over the window
  double ceiling = 0.0;
  std::vector<double> k_used;   // pullback depths tried
  double last_gap = 0.0;        // sup difference of the final two depths
  bool converged = false;
  bool monotone_in_k = true;    // deeper starts stay below shallower (1e-10)
  double monotone_violation = 0.0;
  bool spectral_warn = false;   // construction attempted with lambda <= 0
  double lambda_estimate = 0.0;

  std::vector<int> probe_indices;
  std::vector<std::vector<double>> probe_traces;  // per probe, cadence probe_dt
  double probe_dt = 0.0;
  double probe_t_end = 0.0;

  // window field at a recorded time (snaps to the recording grid)
  const std::vector<double>& at(double t) const;
};

// Pullback construction: solve from u = M at t_lo - K for K in the doubling
// schedule {K0, 2K0, ...} capped at k_max, declaring convergence when two
// successive depths agree to tol on the window.
EntireSolution pullback_entire_solution(const Problem& problem, double t_lo, double t_hi,
                                        const PullbackOptions& opts = {});

struct UniquenessReport {
  double gap_caps = 0.0;    // cap_factor 2 vs 4
  double gap_below = 0.0;   // vs strictly positive sub-level start
  double gap_shift = 0.0;   // vs +10 shifted window on the overlap
  double tol = 0.0;
  bool pass = false;
};

UniquenessReport uniqueness_check(const Problem& problem, double t_lo, double t_hi,
                                  double tol = 1e-6, const PullbackOptions& base = {});

struct StabilityReport {
  std::vector<double> final_dist;  // sup distance to u* at the horizon, per initial
  double max_final_dist = 0.0;
  bool rho_nonincreasing = true;   // part-metric traces against u*
  double max_rho_increase = 0.0;
  bool pass = false;
  double horizon = 0.0, tol = 0.0;
};

// Ensemble of seeded strictly positive initials (plus the 0.1*floor and
// 3*u_cap constant extremes) launched at t_lo; distances measured against the
// entire solution at the horizon.
StabilityReport stability_check(const Problem& problem, const EntireSolution& u_star,
                                int ensemble, double horizon, double tol = 1e-4,
                                std::uint64_t seed = 7, const EvolutionOptions& opts = {});

struct ExtinctionReport {
  double rate = 0.0;       // least-squares slope of ln sup over the second half
  double final_sup = 0.0;
  double lambda_estimate = 0.0;
  bool consistent = false;  // rate <= lambda + tol
  double tol = 0.0;
};

ExtinctionReport extinction_check(const Problem& problem, const Field& u0, double horizon,
                                  double tol = 2e-2, const EvolutionOptions& opts = {});

struct ScalarPullback {
  std::vector<double> times;
  std::vector<double> values;       // limit trace on the window
  double gap_starts = 0.0;          // sup gap between the two pullback starts
  bool converged = false;
};

// Scalar pullback for u' = g(t) + u f(t,u) (the fixed-x reduction); two
// distinct positive starts must collapse onto the same entire trace.
ScalarPullback ode_pullback(const std::function<double(double)>& g,
                            const std::function<double(double, double)>& f, double t_lo,
                            double t_hi, double start1, double start2, double tol = 1e-8,
                            double dt = 1e-3, double k_max = 640.0);

struct APDiagnostic {
  struct Level {
    double eps = 0.0;
    int n_tau = 0;            // usable translation numbers (tau >= 1) in range
    double max_shift_err = 0.0;  // E(eps): max over tau of sup_{t,probe} |u*(t+tau)-u*(t)|
    double c_ratio = 0.0;        // E(eps)/eps
  };
  std::vector<Level> levels;  // ordered as the input eps list
  bool monotone = false;      // E nonincreasing along decreasing eps
  bool vacuous = false;       // some level had no usable tau
  ModuleContainment containment;
  bool pass = false;
};

// Thm-style almost-periodicity diagnostics on the entire solution: recurrence
// errors under coefficient translation numbers (per eps), and Bohr-frequency
// module containment of the probe traces against the coefficient frequencies.
APDiagnostic almost_periodicity_diagnostic(const EntireSolution& u_star,
                                           const APCoefficient& a,
                                           const std::vector<double>& eps_list,
                                           double flag_eps = 0.02);

}  // namespace nlkpp
