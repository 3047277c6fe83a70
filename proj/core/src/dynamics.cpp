#include "nlkpp/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

namespace nlkpp {

double part_metric(const std::vector<double>& u, const std::vector<double>& v) {
  if (u.size() != v.size()) throw std::invalid_argument("part_metric: size mismatch");
  if (u.empty()) throw std::invalid_argument("part_metric: empty fields");
  double rho = 0.0;
  for (size_t i = 0; i < u.size(); ++i) {
    if (!(u[i] > 0.0) || !(v[i] > 0.0))
      throw std::invalid_argument("part_metric: both fields must be strictly positive (X++)");
    rho = std::max(rho, std::abs(std::log(u[i] / v[i])));
  }
  return rho;
}

PartMetricTrace contraction_check(const Problem& problem, const Field& u0, const Field& v0,
                                  double tau, int repetitions, double sigma_threshold,
                                  const EvolutionOptions& opts, double tol_step) {
  if (!(tau > 0.0)) throw std::invalid_argument("contraction_check: tau must be > 0");
  if (repetitions < 1) throw std::invalid_argument("contraction_check: repetitions >= 1");
  if (!u0.strictly_positive() || !v0.strictly_positive())
    throw std::invalid_argument("contraction_check: initial states must be in X++");

  Propagator prop(problem, opts);
  const int spr = static_cast<int>(std::ceil(tau / prop.dt() - 1e-9));
  const double dt = tau / spr;

  Field u = u0, v = v0;
  u.time = v.time = 0.0;
  PartMetricTrace trace;
  trace.tol_step = tol_step;
  trace.times.push_back(0.0);
  trace.rho.push_back(part_metric(u.values, v.values));
  for (int k = 1; k <= repetitions; ++k) {
    u.time = v.time = (k - 1) * tau;
    prop.advance(u, spr, dt);
    prop.advance(v, spr, dt);
    trace.times.push_back(k * tau);
    trace.rho.push_back(part_metric(u.values, v.values));
  }

  trace.nonexpansive = true;
  trace.sigma_tilde = std::numeric_limits<double>::infinity();
  for (size_t k = 0; k + 1 < trace.rho.size(); ++k) {
    const double inc = trace.rho[k + 1] - trace.rho[k];
    trace.max_increase = std::max(trace.max_increase, inc);
    if (inc > tol_step) trace.nonexpansive = false;
    if (trace.rho[k] >= sigma_threshold) {
      trace.sigma_tilde = std::min(trace.sigma_tilde, -inc);
      ++trace.decrement_samples;
    }
  }
  if (trace.decrement_samples == 0) trace.sigma_tilde = 0.0;
  return trace;
}

// ---------------------------------------------------------------------------

const std::vector<double>& EntireSolution::at(double t) const {
  if (window.size() < 2) throw std::logic_error("EntireSolution::at: window not populated");
  const double cadence = window.times[1] - window.times[0];
  const long j = std::lround((t - t_lo) / cadence);
  if (j < 0 || j >= window.size() || std::abs(window.times[j] - t) > 1e-9 * std::max(1.0, std::abs(t)) + 1e-9)
    throw std::invalid_argument("EntireSolution::at: time off the recorded window grid");
  return window.fields[j];
}

namespace {

struct PullbackRun {
  Trajectory window;                              // cadence record_dt on [t_lo, t_hi]
  std::vector<std::vector<double>> probe_traces;  // per probe, every dt from t_lo
  Field final_field;
};

PullbackRun pullback_run(const Problem& problem, double K, double t_lo, double t_hi, double M,
                         double dt, int steps_per_record, const std::vector<int>& probe_indices,
                         ConvolutionMethod method) {
  EvolutionOptions eo;
  eo.dt = dt;
  eo.method = method;
  Propagator prop(problem, eo);

  PullbackRun run;
  run.probe_traces.resize(probe_indices.size());
  Field u = constant_field(problem.domain, M, t_lo - K);

  const long pre_records = std::lround(K / (dt * steps_per_record));
  const long win_records = std::lround((t_hi - t_lo) / (dt * steps_per_record));
  run.window.dt = dt;
  run.window.record_every = steps_per_record;

  auto capture_probes = [&]() {
    for (size_t p = 0; p < probe_indices.size(); ++p)
      run.probe_traces[p].push_back(u.values[probe_indices[p]]);
  };
  auto record_window = [&](double t) {
    run.window.times.push_back(t);
    run.window.fields.push_back(u.values);
  };

  for (long r = 0; r < pre_records; ++r) {
    u.time = t_lo - K + r * (dt * steps_per_record);
    prop.advance(u, steps_per_record, dt);
  }
  u.time = t_lo;
  record_window(t_lo);
  capture_probes();
  for (long r = 0; r < win_records; ++r) {
    for (int s = 0; s < steps_per_record; ++s) {
      prop.advance(u, 1, dt);
      capture_probes();
    }
    u.time = t_lo + (r + 1) * (dt * steps_per_record);
    record_window(u.time);
  }
  run.window.max_sup = prop.max_sup_seen();
  run.final_field = u;
  return run;
}

double sup_gap(const Trajectory& x, const Trajectory& y) {
  double g = 0.0;
  for (int k = 0; k < x.size(); ++k)
    for (size_t i = 0; i < x.fields[k].size(); ++i)
      g = std::max(g, std::abs(x.fields[k][i] - y.fields[k][i]));
  return g;
}

}  // namespace

EntireSolution pullback_entire_solution(const Problem& problem, double t_lo, double t_hi,
                                        const PullbackOptions& opts) {
  if (!(t_hi > t_lo)) throw std::invalid_argument("pullback: need t_hi > t_lo");
  if (!(opts.record_dt > 0.0) || !(opts.dt > 0.0))
    throw std::invalid_argument("pullback: record_dt and dt must be > 0");
  if (opts.probes < 1) throw std::invalid_argument("pullback: need at least one probe");

  EntireSolution out;
  out.t_lo = t_lo;
  out.t_hi = t_hi;

  if (opts.lambda_hint) {
    out.lambda_estimate = *opts.lambda_hint;
  } else {
    LyapunovOptions lo;
    lo.dt = opts.dt;
    lo.method = opts.method;
    out.lambda_estimate =
        lyapunov_exponent(problem.reaction.a, problem.kernel, problem.domain, lo).lambda;
  }
  out.spectral_warn = out.lambda_estimate <= 0.0;

  const double M = opts.start_value.value_or(opts.cap_factor * problem.reaction.u_cap);
  if (!(M >= 0.0)) throw std::invalid_argument("pullback: start value must be >= 0");

  // step layout: dt divides record_dt, depths are multiples of record_dt
  const double dt0 = std::min(opts.dt, dt_stability_bound(problem.reaction));
  const int spr = static_cast<int>(std::ceil(opts.record_dt / dt0 - 1e-9));
  const double dt = opts.record_dt / spr;

  double k0 = opts.k0 > 0.0 ? opts.k0 : std::max(20.0, t_hi - t_lo);
  k0 = std::ceil(k0 / opts.record_dt) * opts.record_dt;
  if (k0 > opts.k_max * (1.0 + 1e-12))
    throw std::invalid_argument("pullback: initial depth exceeds k_max");

  const int n = problem.domain.total();
  out.probe_indices.resize(opts.probes);
  for (int p = 0; p < opts.probes; ++p)
    out.probe_indices[p] = static_cast<int>(static_cast<long>(p) * n / opts.probes);
  out.probe_dt = dt;

  PullbackRun prev, cur;
  out.monotone_in_k = true;
  out.converged = false;
  out.last_gap = std::numeric_limits<double>::infinity();
  for (double K = k0; K <= opts.k_max * (1.0 + 1e-12); K *= 2.0) {
    cur = pullback_run(problem, K, t_lo, t_hi, M, dt, spr, out.probe_indices, opts.method);
    out.k_used.push_back(K);
    if (!prev.window.times.empty()) {
      out.last_gap = sup_gap(cur.window, prev.window);
      double worst = 0.0;
      for (int k = 0; k < cur.window.size(); ++k)
        for (int i = 0; i < n; ++i)
          worst = std::max(worst, cur.window.fields[k][i] - prev.window.fields[k][i]);
      if (worst > 1e-10) {
        out.monotone_in_k = false;
        out.monotone_violation = std::max(out.monotone_violation, worst);
      }
      if (out.last_gap < opts.tol) {
        out.converged = true;
        break;
      }
    }
    prev = std::move(cur);
    cur = PullbackRun{};
  }
  PullbackRun& fin = cur.window.times.empty() ? prev : cur;
  out.window = std::move(fin.window);
  out.probe_traces = std::move(fin.probe_traces);
  out.probe_t_end = t_hi;

  // forward extension of the probe traces (the entire solution is invariant
  // under forward evolution, so this continues u* itself)
  if (opts.probe_extend_to > t_hi) {
    EvolutionOptions eo;
    eo.dt = dt;
    eo.method = opts.method;
    Propagator prop(problem, eo);
    Field u = fin.final_field;
    const long extra = std::lround((opts.probe_extend_to - t_hi) / dt);
    for (long s = 0; s < extra; ++s) {
      prop.advance(u, 1, dt);
      for (size_t p = 0; p < out.probe_indices.size(); ++p)
        out.probe_traces[p].push_back(u.values[out.probe_indices[p]]);
    }
    out.probe_t_end = t_hi + extra * dt;
  }

  out.floor = std::numeric_limits<double>::infinity();
  out.ceiling = -std::numeric_limits<double>::infinity();
  for (const auto& f : out.window.fields)
    for (double v : f) {
      out.floor = std::min(out.floor, v);
      out.ceiling = std::max(out.ceiling, v);
    }
  return out;
}

UniquenessReport uniqueness_check(const Problem& problem, double t_lo, double t_hi, double tol,
                                  const PullbackOptions& base) {
  if (!(problem.reaction.u_cap > 0.0))
    throw std::invalid_argument("uniqueness_check: needs a persistent problem (u_cap > 0)");

  PullbackOptions o = base;
  o.probe_extend_to = 0.0;  // probes not needed here
  if (!o.lambda_hint) {
    LyapunovOptions lo;
    lo.dt = o.dt;
    lo.method = o.method;
    o.lambda_hint =
        lyapunov_exponent(problem.reaction.a, problem.kernel, problem.domain, lo).lambda;
  }

  o.cap_factor = 2.0;
  o.start_value.reset();
  const EntireSolution e1 = pullback_entire_solution(problem, t_lo, t_hi, o);

  o.cap_factor = 4.0;
  const EntireSolution e2 = pullback_entire_solution(problem, t_lo, t_hi, o);

  PullbackOptions ob = o;
  ob.start_value = e1.floor > 0.0 ? 0.1 * e1.floor : 0.05 * problem.reaction.u_cap;
  const EntireSolution e3 = pullback_entire_solution(problem, t_lo, t_hi, ob);

  o.cap_factor = 2.0;
  const EntireSolution e4 = pullback_entire_solution(problem, t_lo + 10.0, t_hi + 10.0, o);

  UniquenessReport rep;
  rep.tol = tol;
  for (int k = 0; k < e1.window.size(); ++k)
    for (size_t i = 0; i < e1.window.fields[k].size(); ++i) {
      rep.gap_caps = std::max(rep.gap_caps,
                              std::abs(e1.window.fields[k][i] - e2.window.fields[k][i]));
      rep.gap_below = std::max(rep.gap_below,
                               std::abs(e1.window.fields[k][i] - e3.window.fields[k][i]));
    }
  const double cadence = e1.window.times[1] - e1.window.times[0];
  const long off = std::lround(10.0 / cadence);
  if (std::abs(off * cadence - 10.0) > 1e-9)
    throw std::logic_error("uniqueness_check: +10 shift is off the recording grid");
  for (int k = 0; k + off < e1.window.size(); ++k)
    for (size_t i = 0; i < e4.window.fields[k].size(); ++i)
      rep.gap_shift = std::max(rep.gap_shift,
                               std::abs(e4.window.fields[k][i] - e1.window.fields[k + off][i]));
  rep.pass = rep.gap_caps <= tol && rep.gap_below <= tol && rep.gap_shift <= tol;
  return rep;
}

StabilityReport stability_check(const Problem& problem, const EntireSolution& u_star,
                                int ensemble, double horizon, double tol, std::uint64_t seed,
                                const EvolutionOptions& opts) {
  if (ensemble < 2) throw std::invalid_argument("stability_check: ensemble must be >= 2");
  if (u_star.t_hi < u_star.t_lo + horizon - 1e-9)
    throw std::invalid_argument("stability_check: the window does not cover the horizon");
  if (!(u_star.floor > 0.0))
    throw std::invalid_argument("stability_check: entire solution must be strictly positive");
  const double u_cap = problem.reaction.u_cap;
  if (!(u_cap > 0.0)) throw std::invalid_argument("stability_check: u_cap must be > 0");

  const double cadence = u_star.window.times[1] - u_star.window.times[0];
  const long per_unit = std::lround(1.0 / cadence);
  if (std::abs(per_unit * cadence - 1.0) > 1e-9)
    throw std::invalid_argument("stability_check: window cadence must divide 1.0");

  Propagator prop(problem, opts);
  const int spr = static_cast<int>(std::ceil(cadence / prop.dt() - 1e-9));
  const double dt = cadence / spr;
  const int units = static_cast<int>(std::lround(horizon));
  const double lo_val = 0.1 * u_star.floor, hi_val = 3.0 * u_cap;

  StabilityReport rep;
  rep.horizon = horizon;
  rep.tol = tol;
  rep.rho_nonincreasing = true;
  for (int e = 0; e < ensemble; ++e) {
    Field u;
    if (e == 0) {
      u = constant_field(problem.domain, lo_val, u_star.t_lo);
    } else if (e == 1) {
      u = constant_field(problem.domain, hi_val, u_star.t_lo);
    } else {
      std::mt19937_64 rng(seed + e);
      std::uniform_real_distribution<double> dist(lo_val, hi_val);
      u.values.resize(problem.domain.total());
      for (auto& v : u.values) v = dist(rng);
      u.time = u_star.t_lo;
    }
    double rho_prev = part_metric(u.values, u_star.at(u_star.t_lo));
    for (int m = 1; m <= units; ++m) {
      const double t0 = u_star.t_lo + (m - 1);
      u.time = t0;
      for (long r = 0; r < per_unit; ++r) prop.advance(u, spr, dt);
      u.time = t0 + 1.0;
      const double rho = part_metric(u.values, u_star.at(u.time));
      rep.max_rho_increase = std::max(rep.max_rho_increase, rho - rho_prev);
      if (rho > rho_prev + 1e-9) rep.rho_nonincreasing = false;
      rho_prev = rho;
    }
    const auto& star = u_star.at(u_star.t_lo + units);
    double dist = 0.0;
    for (size_t i = 0; i < u.values.size(); ++i)
      dist = std::max(dist, std::abs(u.values[i] - star[i]));
    rep.final_dist.push_back(dist);
    rep.max_final_dist = std::max(rep.max_final_dist, dist);
  }
  rep.pass = rep.max_final_dist <= tol && rep.rho_nonincreasing;
  return rep;
}

ExtinctionReport extinction_check(const Problem& problem, const Field& u0, double horizon,
                                  double tol, const EvolutionOptions& opts) {
  if (!(horizon >= 20.0)) throw std::invalid_argument("extinction_check: horizon must be >= 20");
  ExtinctionReport rep;
  rep.tol = tol;
  {
    LyapunovOptions lo;
    lo.dt = opts.dt;
    lo.method = opts.method;
    lo.horizon = std::max(100.0, horizon);
    rep.lambda_estimate =
        lyapunov_exponent(problem.reaction.a, problem.kernel, problem.domain, lo).lambda;
  }

  Propagator prop(problem, opts);
  const int spr = static_cast<int>(std::ceil(1.0 / prop.dt() - 1e-9));
  const double dt = 1.0 / spr;
  const int units = static_cast<int>(std::lround(horizon));
  Field u = u0;
  u.time = 0.0;
  std::vector<double> sup(units + 1);
  sup[0] = u.sup_norm();
  for (int m = 1; m <= units; ++m) {
    u.time = m - 1.0;
    prop.advance(u, spr, dt);
    sup[m] = u.sup_norm();
  }
  rep.final_sup = sup[units];

  // least-squares slope of ln sup over the second half
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  int cnt = 0;
  for (int m = units / 2; m <= units; ++m) {
    if (!(sup[m] > 1e-300)) break;  // underflow: stop the fit
    const double x = m, y = std::log(sup[m]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++cnt;
  }
  if (cnt < 3) throw std::runtime_error("extinction_check: too few usable sup-norm samples");
  rep.rate = (cnt * sxy - sx * sy) / (cnt * sxx - sx * sx);
  rep.consistent = rep.rate <= rep.lambda_estimate + tol;
  return rep;
}

ScalarPullback ode_pullback(const std::function<double(double)>& g,
                            const std::function<double(double, double)>& f, double t_lo,
                            double t_hi, double start1, double start2, double tol, double dt,
                            double k_max) {
  if (!(t_hi > t_lo)) throw std::invalid_argument("ode_pullback: need t_hi > t_lo");
  if (!(start1 > 0.0) || !(start2 > 0.0))
    throw std::invalid_argument("ode_pullback: starts must be positive");

  const int rec = 10;  // record every 10 steps on the window
  auto run = [&](double K, double u0) {
    double u = u0;
    const long pre = std::lround(std::ceil(K / dt));
    const double t_start = t_lo - pre * dt;
    const long total = pre + std::lround(std::ceil((t_hi - t_lo) / dt));
    std::vector<double> vals;
    for (long s = 0; s < total; ++s) {
      const double t = t_start + s * dt;
      const double k1 = g(t) + u * f(t, u);
      const double u2 = u + 0.5 * dt * k1;
      const double k2 = g(t + 0.5 * dt) + u2 * f(t + 0.5 * dt, u2);
      const double u3 = u + 0.5 * dt * k2;
      const double k3 = g(t + 0.5 * dt) + u3 * f(t + 0.5 * dt, u3);
      const double u4 = u + dt * k3;
      const double k4 = g(t + dt) + u4 * f(t + dt, u4);
      u += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      if (!std::isfinite(u)) throw std::runtime_error("ode_pullback: non-finite state");
      if (s >= pre && (s - pre) % rec == rec - 1) vals.push_back(u);
    }
    return vals;
  };

  ScalarPullback out;
  std::vector<double> prev;
  double k_final = 0.0;
  for (double K = std::max(20.0, t_hi - t_lo); K <= k_max * (1.0 + 1e-12); K *= 2.0) {
    k_final = K;
    std::vector<double> cur = run(K, start1);
    if (!prev.empty()) {
      double gap = 0.0;
      for (size_t i = 0; i < cur.size(); ++i) gap = std::max(gap, std::abs(cur[i] - prev[i]));
      if (gap < tol) {
        out.converged = true;
        prev = std::move(cur);
        break;
      }
    }
    prev = std::move(cur);
  }
  out.values = prev;
  for (size_t i = 0; i < out.values.size(); ++i)
    out.times.push_back(t_lo + (i + 1) * rec * dt);
  const std::vector<double> other = run(k_final, start2);
  for (size_t i = 0; i < other.size(); ++i)
    out.gap_starts = std::max(out.gap_starts, std::abs(other[i] - out.values[i]));
  return out;
}

APDiagnostic almost_periodicity_diagnostic(const EntireSolution& u_star, const APCoefficient& a,
                                           const std::vector<double>& eps_list, double flag_eps) {
  if (u_star.probe_traces.empty() || u_star.probe_traces[0].size() < 2)
    throw std::invalid_argument("almost_periodicity_diagnostic: probe traces missing");
  if (eps_list.empty()) throw std::invalid_argument("almost_periodicity_diagnostic: empty eps list");

  const double pdt = u_star.probe_dt;
  const size_t N = u_star.probe_traces[0].size();
  const double span = (N - 1) * pdt;
  if (span <= 61.0)
    throw std::invalid_argument("almost_periodicity_diagnostic: probe span too short");
  const double tau_window = span - 60.0;  // keep at least 60 time units of overlap

  APDiagnostic diag;
  const int stride_t = std::max(1, static_cast<int>(std::lround(0.1 / pdt)));

  // Scan once per level, then pick one absolute stride on the tau grid for the
  // whole family: evaluated subsets stay nested across eps levels, which keeps
  // the monotonicity of E(eps) structural rather than accidental.
  std::vector<TranslationScan> scans;
  size_t max_count = 0;
  for (double eps : eps_list) {
    scans.push_back(epsilon_translation_numbers(a, eps, tau_window, pdt));
    size_t usable = 0;
    for (double tau : scans.back().tau)
      if (tau >= 1.0) ++usable;
    max_count = std::max(max_count, usable);
  }
  const long stride_tau = std::max<long>(1, static_cast<long>(max_count / 2000));

  for (size_t le = 0; le < eps_list.size(); ++le) {
    const TranslationScan& scan = scans[le];
    APDiagnostic::Level lv;
    lv.eps = eps_list[le];
    for (double tau : scan.tau) {
      if (tau < 1.0) continue;  // skip the trivial near-zero band
      ++lv.n_tau;
      const long s = std::lround(tau / pdt);
      if (s % stride_tau != 0) continue;
      for (const auto& tr : u_star.probe_traces)
        for (size_t i = 0; i + s < N; i += stride_t)
          lv.max_shift_err = std::max(lv.max_shift_err, std::abs(tr[i + s] - tr[i]));
    }
    if (lv.n_tau == 0) diag.vacuous = true;
    lv.c_ratio = lv.eps > 0.0 ? lv.max_shift_err / lv.eps : 0.0;
    diag.levels.push_back(lv);
  }
  diag.monotone = true;
  for (size_t i = 0; i + 1 < diag.levels.size(); ++i)
    if (diag.levels[i + 1].max_shift_err > diag.levels[i].max_shift_err + 1e-12)
      diag.monotone = false;

  // Bohr-frequency containment on a central subset of probes, downsampled to
  // a 0.05 cadence (plenty for the <= 6 rad/time scan band).
  const int ds = std::max(1, static_cast<int>(std::lround(0.05 / pdt)));
  const std::vector<double> base = a.frequencies();
  bool all_pass = true, any_inconclusive = false;
  ModuleContainment merged;
  for (size_t p = 0; p < u_star.probe_traces.size(); p += 4) {
    std::vector<double> t;
    t.reserve(N / ds + 1);
    for (size_t i = 0; i < N; i += ds) t.push_back(u_star.probe_traces[p][i]);
    ModuleContainment mc = module_containment_check(t, pdt * ds, base, flag_eps);
    all_pass = all_pass && mc.pass;
    any_inconclusive = any_inconclusive || mc.inconclusive;
    merged.resolution = mc.resolution;
    for (const auto& fl : mc.flags) {
      bool dup = false;
      for (const auto& have : merged.flags)
        if (std::abs(have.frequency - fl.frequency) < 1e-9) dup = true;
      if (!dup) merged.flags.push_back(fl);
    }
  }
  merged.pass = all_pass;
  merged.inconclusive = any_inconclusive;
  diag.containment = merged;
  diag.pass = diag.monotone && !diag.vacuous && merged.pass;
  return diag;
}

}  // namespace nlkpp
