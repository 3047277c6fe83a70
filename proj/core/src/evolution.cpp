#include "nlkpp/evolution.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "coefficient_grid.hpp"

namespace nlkpp {

double Field::min_value() const {
  double m = std::numeric_limits<double>::infinity();
  for (double v : values) m = std::min(m, v);
  return m;
}

double Field::max_value() const {
  double m = -std::numeric_limits<double>::infinity();
  for (double v : values) m = std::max(m, v);
  return m;
}

double Field::sup_norm() const {
  double m = 0.0;
  for (double v : values) m = std::max(m, std::abs(v));
  return m;
}

Field constant_field(const Domain& domain, double value, double time) {
  Field f;
  f.values.assign(domain.total(), value);
  f.time = time;
  return f;
}

Reaction make_reaction(const APCoefficient& a, const APCoefficient& b, const Domain& domain) {
  (void)domain;
  Reaction r;
  r.a = a;
  r.b = b;
  // conservative analytic bounds over the almost periodic hull
  double b_inf = b.constant;
  for (const auto& m : b.modes) b_inf -= m.profile.sup_bound();
  if (!(b_inf > 0.0))
    throw std::invalid_argument("make_reaction: inf b must be strictly positive (lower bound " +
                                std::to_string(b_inf) + ")");
  r.b_min = b_inf;
  double a_sup = a.constant;
  for (const auto& m : a.modes) a_sup += m.profile.sup_bound();
  r.u_cap = std::max(0.0, (1.0 + a_sup) / b_inf);
  return r;
}

double dt_stability_bound(const Reaction& r) {
  return 0.5 / (1.0 + r.a.sup_bound() + r.b.sup_bound() * r.u_cap);
}

double dt_stability_bound_linear(const APCoefficient& a) {
  return 0.5 / (1.0 + a.sup_bound());
}

// ---------------------------------------------------------------------------

struct Propagator::Impl {
  Domain domain;
  DispersalOperator op;
  detail::CoefficientGrid agrid;
  std::unique_ptr<detail::CoefficientGrid> bgrid;  // null => linear problem
  double dt_bound = 0.0;
  double dt_default = 0.0;
  double max_sup = 0.0;
  std::vector<double> abuf, bbuf, Kv, k1, k2, k3, k4, stage;

  Impl(const Domain& dom, const Kernel& kernel, const APCoefficient& a,
       ConvolutionMethod method)
      : domain(dom), op(kernel, dom, method), agrid(a, dom) {}

  void alloc() {
    const int n = domain.total();
    abuf.resize(n);
    Kv.resize(n);
    k1.resize(n);
    k2.resize(n);
    k3.resize(n);
    k4.resize(n);
    stage.resize(n);
    if (bgrid) bbuf.resize(n);
  }

  void rhs(double t, const double* v, double* out) {
    const int n = domain.total();
    op.apply(v, Kv.data());
    agrid.eval_into(t, abuf.data());
    if (bgrid) {
      bgrid->eval_into(t, bbuf.data());
      for (int i = 0; i < n; ++i) out[i] = Kv[i] + v[i] * (abuf[i] - bbuf[i] * v[i]);
    } else {
      for (int i = 0; i < n; ++i) out[i] = Kv[i] + abuf[i] * v[i];
    }
  }

  void rk4(std::vector<double>& u, double t, double dt) {
    const int n = domain.total();
    rhs(t, u.data(), k1.data());
    for (int i = 0; i < n; ++i) stage[i] = u[i] + 0.5 * dt * k1[i];
    rhs(t + 0.5 * dt, stage.data(), k2.data());
    for (int i = 0; i < n; ++i) stage[i] = u[i] + 0.5 * dt * k2[i];
    rhs(t + 0.5 * dt, stage.data(), k3.data());
    for (int i = 0; i < n; ++i) stage[i] = u[i] + dt * k3[i];
    rhs(t + dt, stage.data(), k4.data());
    const double s = dt / 6.0;
    double sup = 0.0;
    for (int i = 0; i < n; ++i) {
      u[i] += s * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
      sup = std::max(sup, std::abs(u[i]));
    }
    if (!std::isfinite(sup)) throw std::runtime_error("time step produced a non-finite field");
    max_sup = std::max(max_sup, sup);
  }
};

Propagator::Propagator(const Problem& problem, const EvolutionOptions& opts)
    : impl_(std::make_unique<Impl>(problem.domain, problem.kernel, problem.reaction.a,
                                   opts.method)) {
  impl_->bgrid = std::make_unique<detail::CoefficientGrid>(problem.reaction.b, problem.domain);
  impl_->dt_bound = dt_stability_bound(problem.reaction);
  impl_->dt_default = std::min(opts.dt, impl_->dt_bound);
  impl_->alloc();
}

Propagator::Propagator(const Domain& domain, const Kernel& kernel, const APCoefficient& a,
                       const EvolutionOptions& opts)
    : impl_(std::make_unique<Impl>(domain, kernel, a, opts.method)) {
  impl_->dt_bound = dt_stability_bound_linear(a);
  impl_->dt_default = std::min(opts.dt, impl_->dt_bound);
  impl_->alloc();
}

Propagator::~Propagator() = default;
Propagator::Propagator(Propagator&&) noexcept = default;

double Propagator::dt() const { return impl_->dt_default; }
double Propagator::max_sup_seen() const { return impl_->max_sup; }

void Propagator::advance(Field& u, int n_steps, double dt) {
  if (static_cast<int>(u.values.size()) != impl_->domain.total())
    throw std::invalid_argument("advance: field size does not match the domain");
  if (!(dt > 0.0) || dt > impl_->dt_bound * (1.0 + 1e-12))
    throw std::invalid_argument("advance: dt " + std::to_string(dt) +
                                " violates the stability bound " +
                                std::to_string(impl_->dt_bound));
  const double t0 = u.time;
  for (int k = 0; k < n_steps; ++k) impl_->rk4(u.values, t0 + k * dt, dt);
  u.time = t0 + n_steps * dt;
}

// ---------------------------------------------------------------------------

Field step(const Problem& problem, const Field& u, double dt, ConvolutionMethod method) {
  if (!u.nonnegative()) throw std::invalid_argument("step: state must lie in the nonnegative cone");
  EvolutionOptions opts;
  opts.method = method;
  Propagator prop(problem, opts);
  Field out = u;
  prop.advance(out, 1, dt);  // validates dt against the stability bound
  return out;
}

namespace {

Trajectory run_recorded(Propagator& prop, const Field& u0, double s, double t,
                        const EvolutionOptions& opts) {
  if (!(t >= s)) throw std::invalid_argument("solve: need t >= s");
  if (opts.record_every < 1) throw std::invalid_argument("solve: record_every must be >= 1");

  Trajectory traj;
  const int re = opts.record_every;
  Field u = u0;
  u.time = s;

  auto record = [&](const Field& f) {
    if (f.time >= opts.record_from - 1e-12) {
      traj.times.push_back(f.time);
      traj.fields.push_back(f.values);
    }
  };

  if (t == s) {
    traj.dt = prop.dt();
    traj.record_every = re;
    record(u);
    traj.max_sup = u.sup_norm();
    return traj;
  }

  double dt = prop.dt();
  int n = static_cast<int>(std::ceil((t - s) / dt - 1e-9));
  n = ((n + re - 1) / re) * re;  // recording lands exactly on t
  dt = (t - s) / n;
  traj.dt = dt;
  traj.record_every = re;

  record(u);
  for (int k = 0; k < n; k += re) {
    prop.advance(u, re, dt);
    u.time = s + (k + re) * dt;  // rebase to suppress accumulation drift
    record(u);
  }
  traj.max_sup = std::max(prop.max_sup_seen(), u0.sup_norm());
  return traj;
}

}  // namespace

Trajectory solve(const Problem& problem, const Field& u0, double s, double t,
                 const EvolutionOptions& opts) {
  if (!u0.nonnegative())
    throw std::invalid_argument("solve: initial state must lie in the nonnegative cone");
  Propagator prop(problem, opts);
  return run_recorded(prop, u0, s, t, opts);
}

Field linear_propagate(const APCoefficient& a, const Kernel& kernel, const Domain& domain,
                       const Field& u0, double s, double t, const EvolutionOptions& opts) {
  Propagator prop(domain, kernel, a, opts);
  EvolutionOptions o = opts;
  o.record_from = t;  // keep only the endpoint
  Trajectory traj = run_recorded(prop, u0, s, t, o);
  return traj.final_field();
}

// ---------------------------------------------------------------------------

SuperSubReport check_supersub(const Problem& problem, const Trajectory& phi, double tol) {
  if (phi.size() < 3)
    throw std::invalid_argument("check_supersub: need at least three recorded slices");
  const int n = problem.domain.total();
  const double delta = phi.times[1] - phi.times[0];
  DispersalOperator op(problem.kernel, problem.domain);
  detail::CoefficientGrid agrid(problem.reaction.a, problem.domain);
  detail::CoefficientGrid bgrid(problem.reaction.b, problem.domain);
  std::vector<double> Kv(n), av(n), bv(n);

  SuperSubReport rep;
  rep.tol = tol;
  rep.max_negative_residual = 0.0;
  rep.max_positive_residual = 0.0;
  for (int k = 1; k + 1 < phi.size(); ++k) {
    if (std::abs((phi.times[k + 1] - phi.times[k - 1]) - 2.0 * delta) >
        1e-9 * std::max(1.0, 2.0 * delta))
      throw std::invalid_argument("check_supersub: recorded times must be uniform");
    const auto& f = phi.fields[k];
    if (static_cast<int>(f.size()) != n)
      throw std::invalid_argument("check_supersub: field size does not match the domain");
    op.apply(f.data(), Kv.data());
    agrid.eval_into(phi.times[k], av.data());
    bgrid.eval_into(phi.times[k], bv.data());
    for (int i = 0; i < n; ++i) {
      double dphi = (phi.fields[k + 1][i] - phi.fields[k - 1][i]) / (2.0 * delta);
      double r = dphi - (Kv[i] + f[i] * (av[i] - bv[i] * f[i]));
      rep.max_negative_residual = std::min(rep.max_negative_residual, r);
      rep.max_positive_residual = std::max(rep.max_positive_residual, r);
    }
  }
  const bool is_super = rep.max_negative_residual >= -tol;
  const bool is_sub = rep.max_positive_residual <= tol;
  if (is_super && is_sub) rep.kind = SuperSubKind::Both;
  else if (is_super) rep.kind = SuperSubKind::Super;
  else if (is_sub) rep.kind = SuperSubKind::Sub;
  else rep.kind = SuperSubKind::Neither;
  return rep;
}

OrderingReport check_ordering(const Trajectory& u, const Trajectory& v, double tol) {
  if (u.size() != v.size())
    throw std::invalid_argument("check_ordering: trajectories have different lengths");
  OrderingReport rep;
  rep.max_violation = -std::numeric_limits<double>::infinity();
  for (int k = 0; k < u.size(); ++k) {
    if (std::abs(u.times[k] - v.times[k]) > 1e-9)
      throw std::invalid_argument("check_ordering: recorded times differ");
    if (u.fields[k].size() != v.fields[k].size())
      throw std::invalid_argument("check_ordering: field sizes differ");
    for (size_t i = 0; i < u.fields[k].size(); ++i) {
      double d = u.fields[k][i] - v.fields[k][i];
      if (d > rep.max_violation) {
        rep.max_violation = d;
        rep.time_index = k;
        rep.space_index = static_cast<int>(i);
      }
    }
  }
  rep.ok = rep.max_violation <= tol;
  return rep;
}

std::vector<int> subgrid_indices(const Domain& d0, const Domain& d) {
  if (d0.dim != d.dim) throw std::invalid_argument("subgrid_indices: dimensions differ");
  if (d0.is_torus() || d.is_torus())
    throw std::invalid_argument("subgrid_indices: defined for bounded boxes only");
  std::array<int, 2> offset{{0, 0}};
  for (int ax = 0; ax < d0.dim; ++ax) {
    if (std::abs(d0.spacing[ax] - d.spacing[ax]) > 1e-9 * d.spacing[ax])
      throw std::invalid_argument("subgrid_indices: grid spacings differ");
    double off = (d0.lower[ax] - d.lower[ax]) / d.spacing[ax];
    offset[ax] = static_cast<int>(std::lround(off));
    if (std::abs(off - offset[ax]) > 1e-6)
      throw std::invalid_argument("subgrid_indices: grids are not aligned");
    if (offset[ax] < 0 || offset[ax] + d0.counts[ax] > d.counts[ax])
      throw std::invalid_argument("subgrid_indices: sub-domain extends outside the super-domain");
  }
  std::vector<int> map(d0.total());
  for (int j = 0; j < d0.total(); ++j) {
    auto idx = d0.unravel(j);
    map[j] = d.index(idx[0] + offset[0], d0.dim == 2 ? idx[1] + offset[1] : 0);
  }
  return map;
}

DomainComparisonReport domain_comparison(const Problem& problem, const Domain& d0,
                                         const Field& u0, double s, double t,
                                         const EvolutionOptions& opts, double tol) {
  std::vector<int> map = subgrid_indices(d0, problem.domain);
  if (static_cast<int>(u0.values.size()) != problem.domain.total())
    throw std::invalid_argument("domain_comparison: initial state must live on the super-domain");

  Problem p0;
  p0.domain = d0;
  p0.kernel = sample_kernel(problem.kernel.spec, d0);
  p0.reaction = make_reaction(problem.reaction.a, problem.reaction.b, d0);

  Field u0_sub;
  u0_sub.values.resize(d0.total());
  for (int j = 0; j < d0.total(); ++j) u0_sub.values[j] = u0.values[map[j]];

  EvolutionOptions o = opts;
  o.dt = std::min({opts.dt, dt_stability_bound(problem.reaction), dt_stability_bound(p0.reaction)});
  Trajectory big = solve(problem, u0, s, t, o);
  Trajectory small = solve(p0, u0_sub, s, t, o);
  if (big.size() != small.size())
    throw std::runtime_error("domain_comparison: recording grids diverged");

  DomainComparisonReport rep;
  rep.tol = tol;
  rep.max_violation = -std::numeric_limits<double>::infinity();
  for (int k = 0; k < big.size(); ++k)
    for (int j = 0; j < d0.total(); ++j)
      rep.max_violation = std::max(rep.max_violation, small.fields[k][j] - big.fields[k][map[j]]);
  rep.ok = rep.max_violation <= tol;
  return rep;
}

}  // namespace nlkpp
