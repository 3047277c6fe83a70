#include "nlkpp/kernel.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstring>
#include <mutex>
#include <numbers>
#include <stdexcept>
#include <string>

namespace nlkpp {

namespace {

constexpr double kPi = std::numbers::pi;

// FFTW plan creation/destruction is not thread-safe; execution is.
std::mutex& fftw_mutex() {
  static std::mutex m;
  return m;
}

double sq(double v) { return v * v; }

void validate_spec(const KernelSpec& spec) {
  if (!(spec.param > 0.0))
    throw std::invalid_argument("kernel: family parameter must be positive");
  if (!(spec.truncation_threshold > 0.0))
    throw std::invalid_argument("kernel: truncation threshold must be positive");
}

}  // namespace

double kernel_density(const KernelSpec& spec, const double* z, int dim) {
  double r2 = sq(z[0]) + (dim == 2 ? sq(z[1]) : 0.0);
  if (spec.family == KernelFamily::Gaussian) {
    double s2 = sq(spec.param);
    double norm = std::pow(2.0 * kPi * s2, -0.5 * dim);
    return norm * std::exp(-r2 / (2.0 * s2));
  }
  double r = spec.param;
  if (r2 >= sq(r)) return 0.0;
  double c = dim == 1 ? 15.0 / (16.0 * r) : 3.0 / (kPi * sq(r));
  return c * sq(1.0 - r2 / sq(r));
}

double kernel_threshold_radius(const KernelSpec& spec, int dim) {
  validate_spec(spec);
  if (spec.family == KernelFamily::Bump) return spec.param;
  double s2 = sq(spec.param);
  double peak = std::pow(2.0 * kPi * s2, -0.5 * dim);
  if (spec.truncation_threshold >= peak)
    throw std::invalid_argument("kernel: truncation threshold exceeds the density peak");
  return spec.param * std::sqrt(-2.0 * std::log(spec.truncation_threshold / peak));
}

double kernel_tail_mass(const KernelSpec& spec, double radius, int dim) {
  if (radius <= 0.0) return 1.0;
  if (spec.family == KernelFamily::Gaussian) {
    double u = radius / spec.param;
    if (dim == 1) return std::erfc(u / std::sqrt(2.0));
    return std::exp(-0.5 * sq(u));
  }
  double u = std::min(radius / spec.param, 1.0);
  double inside = dim == 1 ? (15.0 / 8.0) * (u - 2.0 * u * u * u / 3.0 + std::pow(u, 5) / 5.0)
                           : 3.0 * (sq(u) - std::pow(u, 4) + std::pow(u, 6) / 3.0);
  return std::max(0.0, 1.0 - inside);
}

Kernel sample_kernel(const KernelSpec& spec, const Domain& domain) {
  validate_spec(spec);
  Kernel k;
  k.spec = spec;

  double half_period = 0.0;
  if (domain.is_torus()) {
    half_period = domain.extent(0) / 2.0;
    if (domain.dim == 2) half_period = std::min(half_period, domain.extent(1) / 2.0);
  }

  double radius;
  if (spec.truncation_radius) {
    radius = *spec.truncation_radius;
    if (!(radius > 0.0))
      throw std::invalid_argument("kernel: explicit truncation radius must be positive");
    if (domain.is_torus() && radius > half_period + 1e-12)
      throw std::invalid_argument(
          "kernel: truncation radius " + std::to_string(radius) +
          " exceeds half the torus period (aliasing); wrap distances are ambiguous");
  } else {
    radius = kernel_threshold_radius(spec, domain.dim);
    // A threshold-derived radius is clamped to the minimal image; the dropped
    // continuum tail is recorded, never hidden.
    if (domain.is_torus() && radius > half_period) radius = half_period;
  }
  k.truncation_radius = radius;
  k.dropped_tail_mass = kernel_tail_mass(spec, radius, domain.dim);

  const double vol = domain.cell_volume();
  if (domain.is_torus()) {
    const int n = domain.total();
    k.values.assign(n, 0.0);
    double sum = 0.0;
    for (int idx = 0; idx < n; ++idx) {
      auto iv = domain.unravel(idx);
      double z[2] = {wrap_minimal(iv[0] * domain.spacing[0], domain.extent(0)), 0.0};
      if (domain.dim == 2) z[1] = wrap_minimal(iv[1] * domain.spacing[1], domain.extent(1));
      double dist2 = sq(z[0]) + sq(z[1]);
      if (dist2 > sq(radius) * (1.0 + 1e-14)) continue;
      double v = kernel_density(spec, z, domain.dim);
      if (v < spec.truncation_threshold && !spec.truncation_radius) v = 0.0;
      k.values[idx] = v;
      sum += v;
    }
    if (!(sum > 0.0)) throw std::invalid_argument("kernel: empty stencil after truncation");
    // renormalize the discrete mass to 1 (constants become exact eigenfunctions)
    const double scale = 1.0 / (sum * vol);
    for (double& v : k.values) v *= scale;
    k.renormalized = true;
    double mass = 0.0;
    for (double v : k.values) mass += v;
    k.discrete_mass = mass * vol;
  } else {
    for (int ax = 0; ax < domain.dim; ++ax) {
      int m = static_cast<int>(std::floor(radius / domain.spacing[ax] + 1e-12));
      k.half_width[ax] = std::min(m, domain.counts[ax] - 1);
    }
    const int wx = 2 * k.half_width[0] + 1;
    const int wy = domain.dim == 2 ? 2 * k.half_width[1] + 1 : 1;
    k.values.assign(static_cast<size_t>(wx) * wy, 0.0);
    double sum = 0.0;
    for (int oy = -(wy / 2); oy <= wy / 2; ++oy) {
      for (int ox = -k.half_width[0]; ox <= k.half_width[0]; ++ox) {
        double z[2] = {ox * domain.spacing[0],
                       domain.dim == 2 ? oy * domain.spacing[1] : 0.0};
        if (sq(z[0]) + sq(z[1]) > sq(radius) * (1.0 + 1e-14)) continue;
        double v = kernel_density(spec, z, domain.dim);
        if (v < spec.truncation_threshold && !spec.truncation_radius) v = 0.0;
        k.values[(oy + wy / 2) * wx + (ox + k.half_width[0])] = v;
        sum += v;
      }
    }
    if (!(sum > 0.0)) throw std::invalid_argument("kernel: empty stencil after truncation");
    k.discrete_mass = sum * vol;  // kept as sampled: Dirichlet loss stays physical
    k.renormalized = false;
  }
  return k;
}

std::vector<double> apply_dispersal(const Kernel& kernel, const Domain& domain,
                                    const std::vector<double>& u) {
  const int n = domain.total();
  if (static_cast<int>(u.size()) != n)
    throw std::invalid_argument("apply_dispersal: field size mismatch");
  std::vector<double> out(n, 0.0);

  if (domain.is_torus()) {
    const double w = domain.cell_volume();
    const int nx = domain.counts[0];
    const int ny = domain.dim == 2 ? domain.counts[1] : 1;
    // fixed offset order gives bitwise translation equivariance
    for (int iy = 0; iy < ny; ++iy) {
      for (int ix = 0; ix < nx; ++ix) {
        double acc = 0.0;
        for (int my = 0; my < ny; ++my) {
          int jy = iy + my;
          if (jy >= ny) jy -= ny;
          const double* urow = u.data() + static_cast<size_t>(jy) * nx;
          const double* srow = kernel.values.data() + static_cast<size_t>(my) * nx;
          for (int mx = 0; mx < nx; ++mx) {
            int jx = ix + mx;
            if (jx >= nx) jx -= nx;
            acc += srow[mx] * urow[jx];
          }
        }
        out[static_cast<size_t>(iy) * nx + ix] = w * acc;
      }
    }
    return out;
  }

  const int nx = domain.counts[0];
  const int ny = domain.dim == 2 ? domain.counts[1] : 1;
  const int mx = kernel.half_width[0];
  const int my = domain.dim == 2 ? kernel.half_width[1] : 0;
  const int wx = 2 * mx + 1;
  std::vector<double> wu(n);
  for (int j = 0; j < n; ++j) wu[j] = domain.quad_weight(j) * u[j];
  for (int iy = 0; iy < ny; ++iy) {
    for (int ix = 0; ix < nx; ++ix) {
      double acc = 0.0;
      for (int oy = -my; oy <= my; ++oy) {
        int jy = iy + oy;
        if (jy < 0 || jy >= ny) continue;
        const double* srow = kernel.values.data() + static_cast<size_t>(oy + my) * wx + mx;
        const double* wurow = wu.data() + static_cast<size_t>(jy) * nx;
        int lo = std::max(-mx, -ix), hi = std::min(mx, nx - 1 - ix);
        for (int ox = lo; ox <= hi; ++ox) acc += srow[ox] * wurow[ix + ox];
      }
      out[static_cast<size_t>(iy) * nx + ix] = acc;
    }
  }
  return out;
}

std::vector<double> neumann_shift(const Kernel& kernel, const Domain& domain) {
  return apply_dispersal(kernel, domain, std::vector<double>(domain.total(), 1.0));
}

IteratedKernelBound iterated_kernel_lower_bound(const Kernel& kernel, const Domain& domain,
                                                const std::vector<double>& u0, double r0,
                                                int k, double delta0) {
  const int n = domain.total();
  if (static_cast<int>(u0.size()) != n)
    throw std::invalid_argument("iterated_kernel_lower_bound: field size mismatch");
  if (!(r0 > 0.0) || k < 1 || !(delta0 > 0.0))
    throw std::invalid_argument("iterated_kernel_lower_bound: need r0 > 0, k >= 1, delta0 > 0");
  for (double v : u0)
    if (v < 0.0)
      throw std::invalid_argument("iterated_kernel_lower_bound: u0 must be nonnegative");

  const double big_r = k * r0;
  if (domain.is_torus()) {
    double half = domain.extent(0) / 2.0;
    if (domain.dim == 2) half = std::min(half, domain.extent(1) / 2.0);
    if (big_r > half + 1e-12)
      throw std::invalid_argument("iterated_kernel_lower_bound: B_{k r0} exceeds the torus");
  } else {
    for (int ax = 0; ax < domain.dim; ++ax)
      if (domain.lower[ax] > -big_r - 1e-12 || domain.upper[ax] < big_r - 1e-12)
        throw std::invalid_argument(
            "iterated_kernel_lower_bound: B_{k r0}(0) not contained in the domain");
  }

  std::vector<int> ball0, ballK;
  for (int i = 0; i < n; ++i) {
    double d = domain.distance_to_origin(i);
    if (d <= r0 + 1e-12) ball0.push_back(i);
    if (d <= big_r + 1e-12) ballK.push_back(i);
  }
  if (ball0.empty() || ballK.empty())
    throw std::invalid_argument("iterated_kernel_lower_bound: empty quadrature ball");

  IteratedKernelBound out;
  for (int i : ball0) out.ball_mass += domain.quad_weight(i) * u0[i];
  if (out.ball_mass < delta0)
    throw std::invalid_argument("iterated_kernel_lower_bound: initial mass " +
                                std::to_string(out.ball_mass) + " below delta0 " +
                                std::to_string(delta0));

  std::vector<double> series = u0;   // running partial sums
  std::vector<double> term = u0;     // K^j u0 / j!
  auto ball_inf = [&](const std::vector<double>& f) {
    double m = f[ballK[0]];
    for (int i : ballK) m = std::min(m, f[i]);
    return m;
  };
  double inf_prev = ball_inf(series);
  const int max_terms = 200;
  for (int j = 1; j <= max_terms; ++j) {
    term = apply_dispersal(kernel, domain, term);
    for (double& v : term) v /= j;
    for (int i = 0; i < n; ++i) series[i] += term[i];
    double inf_now = ball_inf(series);
    out.terms = j + 1;
    if (std::abs(inf_now - inf_prev) < 1e-12) {
      inf_prev = inf_now;
      break;
    }
    inf_prev = inf_now;
    if (j == max_terms)
      throw std::runtime_error("iterated_kernel_lower_bound: series not settled");
  }
  out.mu = inf_prev;
  if (!(out.mu > 0.0))
    throw std::runtime_error("iterated_kernel_lower_bound: bound collapsed to " +
                             std::to_string(out.mu));
  return out;
}

struct DispersalOperator::Impl {
  ConvolutionMethod method = ConvolutionMethod::Direct;
  Domain domain;
  double weight = 0.0;  // torus cell volume

  // direct path: nonzero stencil entries
  struct Entry {
    int ox, oy;
    double v;
  };
  std::vector<Entry> entries;        // box offsets
  std::vector<int> torus_offsets;    // flat offsets with nonzero stencil
  std::vector<double> torus_values;
  std::vector<double> box_weights;   // quadrature weights per grid point
  mutable std::vector<double> wu;

  // fft path (torus)
  fftw_plan fwd = nullptr, inv = nullptr;
  double* rbuf = nullptr;
  fftw_complex* cbuf = nullptr;
  std::vector<std::complex<double>> spectrum;  // conj(S) * w / n
  int nc = 0;

  ~Impl() {
    if (fwd || inv || rbuf || cbuf) {
      std::lock_guard<std::mutex> lock(fftw_mutex());
      if (fwd) fftw_destroy_plan(fwd);
      if (inv) fftw_destroy_plan(inv);
      if (rbuf) fftw_free(rbuf);
      if (cbuf) fftw_free(cbuf);
    }
  }
};

DispersalOperator::DispersalOperator(const Kernel& kernel, const Domain& domain,
                                     ConvolutionMethod method)
    : impl_(std::make_unique<Impl>()) {
  impl_->domain = domain;
  const int n = domain.total();
  if (method == ConvolutionMethod::Fft && !domain.is_torus())
    throw std::invalid_argument("DispersalOperator: the FFT route needs a torus");
  if (method == ConvolutionMethod::Auto)
    method = (domain.is_torus() && n >= 64) ? ConvolutionMethod::Fft
                                            : ConvolutionMethod::Direct;
  impl_->method = method;

  if (domain.is_torus()) {
    impl_->weight = domain.cell_volume();
    if (method == ConvolutionMethod::Direct) {
      for (int m = 0; m < n; ++m)
        if (kernel.values[m] != 0.0) {
          impl_->torus_offsets.push_back(m);
          impl_->torus_values.push_back(kernel.values[m]);
        }
    } else {
      const int nx = domain.counts[0];
      const int ny = domain.dim == 2 ? domain.counts[1] : 1;
      impl_->nc = domain.dim == 2 ? ny * (nx / 2 + 1) : nx / 2 + 1;
      {
        std::lock_guard<std::mutex> lock(fftw_mutex());
        impl_->rbuf = fftw_alloc_real(n);
        impl_->cbuf = fftw_alloc_complex(impl_->nc);
        if (domain.dim == 2) {
          impl_->fwd = fftw_plan_dft_r2c_2d(ny, nx, impl_->rbuf, impl_->cbuf, FFTW_ESTIMATE);
          impl_->inv = fftw_plan_dft_c2r_2d(ny, nx, impl_->cbuf, impl_->rbuf, FFTW_ESTIMATE);
        } else {
          impl_->fwd = fftw_plan_dft_r2c_1d(n, impl_->rbuf, impl_->cbuf, FFTW_ESTIMATE);
          impl_->inv = fftw_plan_dft_c2r_1d(n, impl_->cbuf, impl_->rbuf, FFTW_ESTIMATE);
        }
      }
      std::memcpy(impl_->rbuf, kernel.values.data(), sizeof(double) * n);
      fftw_execute(impl_->fwd);
      impl_->spectrum.resize(impl_->nc);
      const double scale = impl_->weight / n;  // includes the unnormalized inverse
      for (int i = 0; i < impl_->nc; ++i)
        impl_->spectrum[i] =
            std::conj(std::complex<double>(impl_->cbuf[i][0], impl_->cbuf[i][1])) * scale;
    }
  } else {
    const int wx = 2 * kernel.half_width[0] + 1;
    const int my = domain.dim == 2 ? kernel.half_width[1] : 0;
    for (int oy = -my; oy <= my; ++oy)
      for (int ox = -kernel.half_width[0]; ox <= kernel.half_width[0]; ++ox) {
        double v = kernel.values[(oy + my) * wx + (ox + kernel.half_width[0])];
        if (v != 0.0) impl_->entries.push_back({ox, oy, v});
      }
    impl_->box_weights.resize(n);
    for (int j = 0; j < n; ++j) impl_->box_weights[j] = domain.quad_weight(j);
    impl_->wu.resize(n);
  }
}

DispersalOperator::~DispersalOperator() = default;
DispersalOperator::DispersalOperator(DispersalOperator&&) noexcept = default;
DispersalOperator& DispersalOperator::operator=(DispersalOperator&&) noexcept = default;

ConvolutionMethod DispersalOperator::method() const { return impl_->method; }

void DispersalOperator::apply(const double* in, double* out) const {
  const Domain& d = impl_->domain;
  const int n = d.total();
  if (d.is_torus() && impl_->method == ConvolutionMethod::Fft) {
    std::memcpy(impl_->rbuf, in, sizeof(double) * n);
    fftw_execute(impl_->fwd);
    for (int i = 0; i < impl_->nc; ++i) {
      std::complex<double> u(impl_->cbuf[i][0], impl_->cbuf[i][1]);
      std::complex<double> r = u * impl_->spectrum[i];
      impl_->cbuf[i][0] = r.real();
      impl_->cbuf[i][1] = r.imag();
    }
    fftw_execute(impl_->inv);
    std::memcpy(out, impl_->rbuf, sizeof(double) * n);
    return;
  }
  if (d.is_torus()) {
    const int nx = d.counts[0];
    const int ny = d.dim == 2 ? d.counts[1] : 1;
    const size_t m = impl_->torus_offsets.size();
    for (int iy = 0; iy < ny; ++iy)
      for (int ix = 0; ix < nx; ++ix) {
        double acc = 0.0;
        for (size_t e = 0; e < m; ++e) {
          int off = impl_->torus_offsets[e];
          int jx = ix + off % nx;
          int jy = iy + off / nx;
          if (jx >= nx) jx -= nx;
          if (jy >= ny) jy -= ny;
          acc += impl_->torus_values[e] * in[static_cast<size_t>(jy) * nx + jx];
        }
        out[static_cast<size_t>(iy) * nx + ix] = impl_->weight * acc;
      }
    return;
  }
  const int nx = d.counts[0];
  const int ny = d.dim == 2 ? d.counts[1] : 1;
  for (int j = 0; j < n; ++j) impl_->wu[j] = impl_->box_weights[j] * in[j];
  for (int iy = 0; iy < ny; ++iy)
    for (int ix = 0; ix < nx; ++ix) {
      double acc = 0.0;
      for (const auto& e : impl_->entries) {
        int jx = ix + e.ox, jy = iy + e.oy;
        if (jx < 0 || jx >= nx || jy < 0 || jy >= ny) continue;
        acc += e.v * impl_->wu[static_cast<size_t>(jy) * nx + jx];
      }
      out[static_cast<size_t>(iy) * nx + ix] = acc;
    }
}

void DispersalOperator::apply(const std::vector<double>& in, std::vector<double>& out) const {
  out.resize(in.size());
  apply(in.data(), out.data());
}

}  // namespace nlkpp
