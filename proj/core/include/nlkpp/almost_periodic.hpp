#pragma once

#include <complex>
#include <vector>

#include "nlkpp/domain.hpp"

namespace nlkpp {

// profile(x) = constant + sum_j amplitude_j * cos(wavevector_j . x + phase_j)
struct SpatialMode {
  std::array<double, 2> wavevector{{0.0, 0.0}};
  double amplitude = 0.0;
  double phase = 0.0;
};

struct SpatialProfile {
  double constant = 0.0;
  std::vector<SpatialMode> modes;

  double evaluate(const double* x, int dim) const;
  double evaluate1(double x) const { return evaluate(&x, 1); }
  // |constant| + sum |amplitude|: cheap upper bound for sup |profile|
  double sup_bound() const;
  std::vector<double> gridded(const Domain& domain) const;
};

SpatialProfile profile_constant(double c);

// a(t,x) = constant + sum_m profile_m(x) * cos(omega_m t + phi_m)
// Finite trigonometric polynomial: uniformly almost periodic by construction.
struct TemporalMode {
  double frequency = 0.0;  // omega >= 0
  double phase = 0.0;
  SpatialProfile profile;
};

struct APCoefficient {
  double constant = 0.0;
  std::vector<TemporalMode> modes;

  double evaluate(double t, const double* x, int dim) const;
  double sup_bound() const;  // upper bound for sup_{t,x} |a|
  bool is_static() const;    // no mode with frequency > 0
  std::vector<double> frequencies() const;  // distinct positive frequencies
};

APCoefficient ap_constant(double c);
APCoefficient ap_static(const SpatialProfile& p);

// Bohr time mean a^(x): drops every mode with omega > 0; omega = 0 modes
// collapse into the profile scaled by cos(phase).  Exact for trig polynomials.
SpatialProfile time_mean(const APCoefficient& a);
// quadrature mean (1/T) int_0^T a(t,x) dt, the independent numerical route
double time_mean_numeric(const APCoefficient& a, const double* x, int dim, double horizon,
                         double dt = 0.05);

// mean over D with the domain quadrature weights (trapezoid on a box)
double space_mean(const std::vector<double>& gridded, const Domain& domain);
double space_mean(const SpatialProfile& profile, const Domain& domain);

// (1/T) int_0^T trace(t) e^{-i lambda t} dt by trapezoid on the sampled trace.
// pre: horizon (size-1)*dt >= 1e3 and, for lambda > 0, dt <= (2 pi/lambda)/16.
std::complex<double> bohr_fourier_coeff(const std::vector<double>& trace, double dt,
                                        double lambda);

struct TranslationScan {
  std::vector<double> tau;  // passing translation numbers on the scan grid
  double max_gap = 0.0;     // largest gap between consecutive passes (relative density)
  double scan_step = 0.0;
  double window = 0.0;
  double eps = 0.0;
};

// Scans tau in [0, window] with the given step and keeps every tau whose
// translation defect sup_{t,x} |a(t+tau,x) - a(t,x)| is < eps.  The defect is
// evaluated through the mode-wise bound sum_m sup|P_m| * 2|sin(omega_m tau/2)|,
// which dominates the true sup and equals the sup over the almost periodic
// hull (mode phases equidistribute for rationally independent frequencies).
TranslationScan epsilon_translation_numbers(const APCoefficient& a, double eps, double window,
                                            double scan_step = 0.005);

struct ModuleContainment {
  struct Flag {
    double frequency = 0.0;
    double magnitude = 0.0;
    double nearest_combo = 0.0;  // closest |k . base_frequencies|
    bool matched = false;
  };
  std::vector<Flag> flags;
  bool pass = false;
  bool inconclusive = false;
  double resolution = 0.0;  // frequency-matching tolerance used
};

// Scans Bohr-Fourier coefficients of the trace over a frequency grid, flags
// every |coefficient| > eps, and checks each flagged frequency against integer
// combinations k . base_frequencies with sum|k_i| <= max_order, |k_i| <= max_coeff.
ModuleContainment module_containment_check(const std::vector<double>& trace, double dt,
                                           const std::vector<double>& base_frequencies,
                                           double eps, double freq_max = 6.0,
                                           double freq_step = 0.005, int max_order = 3,
                                           int max_coeff = 3);

// Torus surrogate fidelity: sup_t of the wrap-seam mismatch
// |a(t, x+P e_ax) - a(t, x)| summed over modes, per axis (0 when every
// wavevector is commensurate with the period).
double torus_seam_mismatch(const APCoefficient& a, const Domain& domain);

}  // namespace nlkpp
