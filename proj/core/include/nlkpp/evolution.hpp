#pragma once

#include <limits>
#include <memory>
#include <string>

#include "nlkpp/almost_periodic.hpp"
#include "nlkpp/kernel.hpp"

namespace nlkpp {

struct Field {
  std::vector<double> values;
  double time = 0.0;

  double min_value() const;
  double max_value() const;
  double sup_norm() const;  // max |values|
  bool nonnegative() const { return min_value() >= 0.0; }        // X+
  bool strictly_positive() const { return min_value() > 0.0; }   // X++
};

Field constant_field(const Domain& domain, double value, double time = 0.0);

// KPP logistic nonlinearity f(t,x,u) = a(t,x) - b(t,x) u with inf b > 0;
// u_cap = sup (1+a)/b, so f(t,x,u) + 1 < 0 above u_cap (saturation).
struct Reaction {
  APCoefficient a;
  APCoefficient b;
  double b_min = 0.0;
  double u_cap = 0.0;
};

Reaction make_reaction(const APCoefficient& a, const APCoefficient& b, const Domain& domain);

struct Problem {
  Domain domain;
  Kernel kernel;
  Reaction reaction;
};

// Recorded slices of a run; timestamps are uniform (dt * record_every apart).
struct Trajectory {
  double dt = 0.0;
  int record_every = 1;
  std::vector<double> times;
  std::vector<std::vector<double>> fields;
  double max_sup = 0.0;  // max sup-norm over every step taken, recorded or not

  int size() const { return static_cast<int>(times.size()); }
  const std::vector<double>& back() const { return fields.back(); }
  Field final_field() const { return Field{fields.back(), times.back()}; }
};

// Explicit stability bound keeping the 4-stage Runge-Kutta step positive:
// 0.5 / (1 + sup|a| + b_max * u_cap); the linear variant drops the reaction term.
double dt_stability_bound(const Reaction& r);
double dt_stability_bound_linear(const APCoefficient& a);

struct EvolutionOptions {
  double dt = 0.01;  // capped at the stability bound
  ConvolutionMethod method = ConvolutionMethod::Auto;
  int record_every = 1;
  double record_from = -std::numeric_limits<double>::infinity();
};

// One classical 4-stage Runge-Kutta step of u' = Ku + u f(t,x,u).
// pre: u in X+, dt <= stability bound.  Preserves nonnegativity.
Field step(const Problem& problem, const Field& u, double dt,
           ConvolutionMethod method = ConvolutionMethod::Auto);

// March u0 from time s to t (uniform steps, dt adjusted down so the interval
// divides evenly and recording lands on the final slice).
Trajectory solve(const Problem& problem, const Field& u0, double s, double t,
                 const EvolutionOptions& opts = {});

// Linear propagator u' = Ku + a u (no positivity requirement on u0).
Field linear_propagate(const APCoefficient& a, const Kernel& kernel, const Domain& domain,
                       const Field& u0, double s, double t, const EvolutionOptions& opts = {});

enum class SuperSubKind { Super, Sub, Both, Neither };

struct SuperSubReport {
  SuperSubKind kind = SuperSubKind::Neither;
  double max_negative_residual = 0.0;  // most negative phi_t - (K phi + phi f)
  double max_positive_residual = 0.0;
  double tol = 0.0;
};

// Classifies a sampled candidate: residual r = dphi/dt - (K phi + phi f) by
// centered differences at interior sample times; super iff r >= -tol, sub iff
// r <= tol.
SuperSubReport check_supersub(const Problem& problem, const Trajectory& phi, double tol);

struct OrderingReport {
  bool ok = false;
  double max_violation = 0.0;  // max over samples of u - v
  int time_index = -1;
  int space_index = -1;
};

// u <= v + tol at every recorded time (trajectories must share timestamps)
OrderingReport check_ordering(const Trajectory& u, const Trajectory& v, double tol);

struct DomainComparisonReport {
  bool ok = false;
  double max_violation = 0.0;
  double tol = 0.0;
};

// Prop-style domain comparison: the run restricted to a subdomain D0 (aligned
// subgrid of problem.domain, Dirichlet exterior) stays below the full-domain
// run on D0 at all recorded times.
DomainComparisonReport domain_comparison(const Problem& problem, const Domain& d0,
                                         const Field& u0, double s, double t,
                                         const EvolutionOptions& opts = {}, double tol = 1e-9);

// Aligned-subgrid mapping: indices of d0's grid points inside d's grid.
// Throws unless d0 is a subgrid of d (same spacing, endpoints on d's lattice).
std::vector<int> subgrid_indices(const Domain& d0, const Domain& d);

// Internal reusable stepper: one owner per concurrent caller.
class Propagator {
 public:
  // nonlinear right-hand side
  Propagator(const Problem& problem, const EvolutionOptions& opts);
  // linear right-hand side u' = Ku + a u
  Propagator(const Domain& domain, const Kernel& kernel, const APCoefficient& a,
             const EvolutionOptions& opts);
  ~Propagator();
  Propagator(Propagator&&) noexcept;

  double dt() const;
  // advance in place by n uniform steps of size dt
  void advance(Field& u, int n_steps, double dt);
  double max_sup_seen() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace nlkpp
