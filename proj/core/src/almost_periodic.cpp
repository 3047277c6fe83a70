#include "nlkpp/almost_periodic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>
#include <stdexcept>
#include <string>

namespace nlkpp {

namespace {
constexpr double kPi = std::numbers::pi;
}

double SpatialProfile::evaluate(const double* x, int dim) const {
  double v = constant;
  for (const auto& m : modes) {
    double arg = m.wavevector[0] * x[0] + (dim == 2 ? m.wavevector[1] * x[1] : 0.0) + m.phase;
    v += m.amplitude * std::cos(arg);
  }
  return v;
}

double SpatialProfile::sup_bound() const {
  double v = std::abs(constant);
  for (const auto& m : modes) v += std::abs(m.amplitude);
  return v;
}

std::vector<double> SpatialProfile::gridded(const Domain& domain) const {
  std::vector<double> out(domain.total());
  for (int i = 0; i < domain.total(); ++i) {
    auto p = domain.point(i);
    out[i] = evaluate(p.data(), domain.dim);
  }
  return out;
}

SpatialProfile profile_constant(double c) {
  SpatialProfile p;
  p.constant = c;
  return p;
}

double APCoefficient::evaluate(double t, const double* x, int dim) const {
  double v = constant;
  for (const auto& m : modes)
    v += m.profile.evaluate(x, dim) * std::cos(m.frequency * t + m.phase);
  return v;
}

double APCoefficient::sup_bound() const {
  double v = std::abs(constant);
  for (const auto& m : modes) v += m.profile.sup_bound();
  return v;
}

bool APCoefficient::is_static() const {
  for (const auto& m : modes)
    if (m.frequency > 0.0) return false;
  return true;
}

std::vector<double> APCoefficient::frequencies() const {
  std::set<double> s;
  for (const auto& m : modes)
    if (m.frequency > 0.0) s.insert(m.frequency);
  return {s.begin(), s.end()};
}

APCoefficient ap_constant(double c) {
  APCoefficient a;
  a.constant = c;
  return a;
}

APCoefficient ap_static(const SpatialProfile& p) {
  APCoefficient a;
  a.constant = p.constant;
  if (!p.modes.empty()) {
    TemporalMode m;
    m.frequency = 0.0;
    m.phase = 0.0;
    SpatialProfile q = p;
    q.constant = 0.0;
    m.profile = q;
    a.modes.push_back(m);
  }
  return a;
}

SpatialProfile time_mean(const APCoefficient& a) {
  SpatialProfile out;
  out.constant = a.constant;
  for (const auto& m : a.modes) {
    if (m.frequency > 0.0) continue;  // oscillating modes average to zero
    double scale = std::cos(m.phase);
    out.constant += scale * m.profile.constant;
    for (const auto& sm : m.profile.modes) {
      SpatialMode copy = sm;
      copy.amplitude *= scale;
      out.modes.push_back(copy);
    }
  }
  return out;
}

double time_mean_numeric(const APCoefficient& a, const double* x, int dim, double horizon,
                         double dt) {
  if (!(horizon > 0.0) || !(dt > 0.0) || dt > horizon)
    throw std::invalid_argument("time_mean_numeric: need 0 < dt <= horizon");
  int n = static_cast<int>(std::ceil(horizon / dt - 1e-9));
  double h = horizon / n;
  double acc = 0.5 * (a.evaluate(0.0, x, dim) + a.evaluate(horizon, x, dim));
  for (int k = 1; k < n; ++k) acc += a.evaluate(k * h, x, dim);
  return acc * h / horizon;
}

double space_mean(const std::vector<double>& gridded, const Domain& domain) {
  if (static_cast<int>(gridded.size()) != domain.total())
    throw std::invalid_argument("space_mean: field size mismatch");
  double acc = 0.0;
  for (int i = 0; i < domain.total(); ++i) acc += domain.quad_weight(i) * gridded[i];
  return acc / domain.volume();
}

double space_mean(const SpatialProfile& profile, const Domain& domain) {
  return space_mean(profile.gridded(domain), domain);
}

std::complex<double> bohr_fourier_coeff(const std::vector<double>& trace, double dt,
                                        double lambda) {
  if (trace.size() < 2 || !(dt > 0.0))
    throw std::invalid_argument("bohr_fourier_coeff: need a sampled trace with dt > 0");
  const double horizon = (trace.size() - 1) * dt;
  if (horizon < 1e3 - 1e-9)
    throw std::invalid_argument("bohr_fourier_coeff: horizon " + std::to_string(horizon) +
                                " below the 1e3 floor; the mean has not settled");
  if (lambda < 0.0) throw std::invalid_argument("bohr_fourier_coeff: lambda must be >= 0");
  if (lambda > 0.0 && dt > (2.0 * kPi / lambda) / 16.0)
    throw std::invalid_argument("bohr_fourier_coeff: dt undersamples lambda (< 16 per period)");
  // trapezoid in t; the phase factor advances by an incremental rotation,
  // resynced every 4096 samples to keep the recurrence drift below 1e-12
  std::complex<double> acc = 0.5 * (trace.front() + std::polar(trace.back(), -lambda * horizon));
  const std::complex<double> step = std::polar(1.0, -lambda * dt);
  std::complex<double> rot = step;
  for (size_t k = 1; k + 1 < trace.size(); ++k) {
    acc += trace[k] * rot;
    if (k % 4096 == 0)
      rot = std::polar(1.0, -lambda * ((k + 1) * dt));
    else
      rot *= step;
  }
  return acc * dt / horizon;
}

TranslationScan epsilon_translation_numbers(const APCoefficient& a, double eps, double window,
                                            double scan_step) {
  if (!(eps > 0.0) || !(window > 0.0) || !(scan_step > 0.0))
    throw std::invalid_argument("epsilon_translation_numbers: eps, window, step must be > 0");
  TranslationScan out;
  out.eps = eps;
  out.window = window;
  out.scan_step = scan_step;

  // translation defect bound: sum_m sup|P_m| * |cos(w(t+tau)+p) - cos(wt+p)|
  //                         = sum_m sup|P_m| * 2|sin(w tau/2)|  (tight over the hull)
  std::vector<double> amp, omega;
  for (const auto& m : a.modes) {
    if (m.frequency <= 0.0) continue;  // static parts translate exactly
    amp.push_back(m.profile.sup_bound());
    omega.push_back(m.frequency);
  }
  const int n = static_cast<int>(std::floor(window / scan_step + 1e-9));
  double last_pass = 0.0;
  for (int k = 0; k <= n; ++k) {
    double tau = k * scan_step;
    double defect = 0.0;
    for (size_t m = 0; m < amp.size(); ++m)
      defect += amp[m] * 2.0 * std::abs(std::sin(0.5 * omega[m] * tau));
    if (defect < eps) {
      if (!out.tau.empty() || k > 0)
        out.max_gap = std::max(out.max_gap, tau - last_pass);
      out.tau.push_back(tau);
      last_pass = tau;
    }
  }
  if (!out.tau.empty()) out.max_gap = std::max(out.max_gap, window - last_pass);
  return out;
}

ModuleContainment module_containment_check(const std::vector<double>& trace, double dt,
                                           const std::vector<double>& base_frequencies,
                                           double eps, double freq_max, double freq_step,
                                           int max_order, int max_coeff) {
  if (!(eps > 0.0)) throw std::invalid_argument("module_containment_check: eps must be > 0");
  ModuleContainment out;
  const double horizon = (trace.size() - 1) * dt;
  out.resolution = std::max(2.0 * freq_step, 25.0 / horizon);

  // integer combinations |k . base| with sum|k_i| <= max_order, |k_i| <= max_coeff
  std::set<double> combos{0.0};
  const int nb = static_cast<int>(base_frequencies.size());
  std::vector<int> kvec(nb, -max_coeff);
  if (nb > 0) {
    while (true) {
      int order = 0;
      double val = 0.0;
      for (int i = 0; i < nb; ++i) {
        order += std::abs(kvec[i]);
        val += kvec[i] * base_frequencies[i];
      }
      if (order <= max_order) combos.insert(std::abs(val));
      int i = 0;
      for (; i < nb; ++i) {
        if (kvec[i] < max_coeff) {
          ++kvec[i];
          break;
        }
        kvec[i] = -max_coeff;
      }
      if (i == nb) break;
    }
  }
  auto nearest_combo = [&](double f) {
    double best = 0.0, bd = std::abs(f);
    for (double c : combos)
      if (std::abs(f - c) < bd) {
        bd = std::abs(f - c);
        best = c;
      }
    return best;
  };

  // The DC line dwarfs everything and its spectral leakage would smear flags
  // across the low frequencies; remove the mean and account for it as the
  // (always-contained) zero-frequency line.
  double mean = 0.0;
  for (double v : trace) mean += v;
  mean /= trace.size();
  std::vector<double> centered(trace.size());
  for (size_t i = 0; i < trace.size(); ++i) centered[i] = trace[i] - mean;
  if (std::abs(mean) > eps)
    out.flags.push_back({0.0, std::abs(mean), 0.0, true});

  // scan, then reduce runs of adjacent flagged grid frequencies to their peaks
  struct Hit {
    double f, mag;
  };
  std::vector<Hit> hits;
  const int ng = static_cast<int>(std::floor(freq_max / freq_step + 1e-9));
  for (int g = 1; g <= ng; ++g) {
    double f = g * freq_step;
    double mag = std::abs(bohr_fourier_coeff(centered, dt, f));
    if (mag > eps) hits.push_back({f, mag});
  }
  size_t i = 0;
  while (i < hits.size()) {
    size_t j = i;
    Hit peak = hits[i];
    while (j + 1 < hits.size() && hits[j + 1].f - hits[j].f < 1.5 * freq_step) {
      ++j;
      if (hits[j].mag > peak.mag) peak = hits[j];
    }
    double combo = nearest_combo(peak.f);
    bool matched = std::abs(peak.f - combo) <= out.resolution;
    out.flags.push_back({peak.f, peak.mag, combo, matched});
    i = j + 1;
  }

  out.pass = true;
  for (const auto& fl : out.flags) {
    if (!fl.matched) {
      if (fl.magnitude < 1.5 * eps)
        out.inconclusive = true;  // marginal line, resolution-limited
      else
        out.pass = false;
    }
  }
  return out;
}

double torus_seam_mismatch(const APCoefficient& a, const Domain& domain) {
  if (!domain.is_torus()) return 0.0;
  double worst = 0.0;
  for (int ax = 0; ax < domain.dim; ++ax) {
    double seam = 0.0;
    for (const auto& m : a.modes)
      for (const auto& sm : m.profile.modes)
        seam += std::abs(sm.amplitude) * 2.0 *
                std::abs(std::sin(0.5 * sm.wavevector[ax] * domain.extent(ax)));
    worst = std::max(worst, seam);
  }
  return worst;
}

}  // namespace nlkpp
