#pragma once

#include <memory>
#include <optional>
#include <vector>

#include "nlkpp/domain.hpp"

namespace nlkpp {

enum class KernelFamily { Gaussian, Bump };

// Gaussian(sigma): N(0, sigma^2 I) density, total mass 1, exponential tail.
// Bump(r): C^1 quartic bump C_r (1-(|z|/r)^2)^2 supported on |z|<r, mass 1.
struct KernelSpec {
  KernelFamily family = KernelFamily::Gaussian;
  double param = 1.0;  // sigma (Gaussian) or support radius (Bump)
  double truncation_threshold = 1e-12;
  // explicit radius overrides the threshold-derived one; on a torus it must
  // not exceed half the smallest period (aliasing)
  std::optional<double> truncation_radius;
};

double kernel_density(const KernelSpec& spec, const double* z, int dim);
// radius beyond which the density falls below the truncation threshold
double kernel_threshold_radius(const KernelSpec& spec, int dim);
// continuum mass of the density outside the centered ball of given radius
double kernel_tail_mass(const KernelSpec& spec, double radius, int dim);

// Dispersal stencil sampled on the offsets of a specific grid.
//
// Torus: one value per grid point, values[k] = kappa at the minimal image of
// offset k (k = wrapped j-i), renormalized so the discrete mass is 1; a
// threshold-derived radius beyond the half-period is clamped to it and the
// continuum tail mass that was dropped is recorded (aliasing is reported, not
// hidden).
//
// BoundedBox: dense block of offsets with per-axis half-width half_width[ax],
// indexed (oy+half_width[1])*(2*half_width[0]+1) + (ox+half_width[0]); kept as
// sampled (no renormalization) so Dirichlet boundary loss stays physical.
struct Kernel {
  KernelSpec spec;
  double truncation_radius = 0.0;
  std::vector<double> values;
  std::array<int, 2> half_width{{0, 0}};
  double discrete_mass = 0.0;      // sum(values) * cell volume
  double dropped_tail_mass = 0.0;  // torus clamp report
  bool renormalized = false;
};

Kernel sample_kernel(const KernelSpec& spec, const Domain& domain);

// (Ku)(x_i) = sum_j w_j kappa(x_j - x_i) u_j with trapezoid quadrature weights
// w_j (plain h^N on the torus) and exterior values treated as 0 on a box.
// Direct summation; pure and safe to call concurrently.  This is the oracle
// path for the FFT route below.
std::vector<double> apply_dispersal(const Kernel& kernel, const Domain& domain,
                                    const std::vector<double>& u);

// x_i -> sum_j w_j kappa(x_j - x_i): identically 1 on the torus, dips below 1
// near a box boundary; the Neumann-type rewrite adds (this - 1) to the growth
// coefficient.
std::vector<double> neumann_shift(const Kernel& kernel, const Domain& domain);

struct IteratedKernelBound {
  double mu = 0.0;        // inf over B_{k r0}(0) of the truncated series
  int terms = 0;          // series terms actually summed
  double ball_mass = 0.0; // quadrature mass of u0 over B_{r0}(0)
};

// Lower bound sum_{j<=i} (K^j u0)/j! >= mu > 0 on B_{k r0}(0), for u0 >= 0
// carrying mass >= delta0 on B_{r0}(0).  The series is truncated once the
// running infimum moves by less than 1e-12.
IteratedKernelBound iterated_kernel_lower_bound(const Kernel& kernel, const Domain& domain,
                                                const std::vector<double>& u0, double r0,
                                                int k, double delta0);

enum class ConvolutionMethod { Auto, Direct, Fft };

// Stateful dispersal operator: owns FFT plans/buffers when the FFT route is in
// play (torus only), otherwise wraps the direct sum.  One owner per concurrent
// caller; both routes agree to 1e-10 relative (tested), direct is the oracle.
class DispersalOperator {
 public:
  DispersalOperator(const Kernel& kernel, const Domain& domain,
                    ConvolutionMethod method = ConvolutionMethod::Auto);
  ~DispersalOperator();
  DispersalOperator(DispersalOperator&&) noexcept;
  DispersalOperator& operator=(DispersalOperator&&) noexcept;
  DispersalOperator(const DispersalOperator&) = delete;
  DispersalOperator& operator=(const DispersalOperator&) = delete;

  void apply(const double* in, double* out) const;
  void apply(const std::vector<double>& in, std::vector<double>& out) const;
  ConvolutionMethod method() const;  // resolved method (never Auto)

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace nlkpp
