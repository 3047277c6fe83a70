// Internal oracle: dense assembly of the static operator and a cyclic-Jacobi
// symmetric eigensolver.  Deliberately a different algorithm family from the
// production power iteration so the two routes stay independent.
#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "nlkpp/almost_periodic.hpp"
#include "nlkpp/kernel.hpp"

namespace nlkpp::detail {

// stencil value kappa_grid(x_j - x_i) as the sampled Kernel sees it
inline double stencil_value(const Kernel& kernel, const Domain& domain, int i, int j) {
  const auto iv = domain.unravel(i);
  const auto jv = domain.unravel(j);
  if (domain.is_torus()) {
    int ox = jv[0] - iv[0];
    ox = ((ox % domain.counts[0]) + domain.counts[0]) % domain.counts[0];
    if (domain.dim == 1) return kernel.values[ox];
    int oy = jv[1] - iv[1];
    oy = ((oy % domain.counts[1]) + domain.counts[1]) % domain.counts[1];
    return kernel.values[oy * domain.counts[0] + ox];
  }
  const int ox = jv[0] - iv[0];
  if (std::abs(ox) > kernel.half_width[0]) return 0.0;
  if (domain.dim == 1) return kernel.values[ox + kernel.half_width[0]];
  const int oy = jv[1] - iv[1];
  if (std::abs(oy) > kernel.half_width[1]) return 0.0;
  const int wx = 2 * kernel.half_width[0] + 1;
  return kernel.values[(oy + kernel.half_width[1]) * wx + (ox + kernel.half_width[0])];
}

// S = W^{1/2} K W^{1/2} + diag(a): similar to M[i,j] = w_j kappa(x_j-x_i) + a_i d_ij,
// hence the same spectrum, but symmetric (the stencil is even).
inline std::vector<double> dense_operator_symmetrized(const SpatialProfile& a,
                                                      const Kernel& kernel,
                                                      const Domain& domain) {
  const int n = domain.total();
  std::vector<double> sw(n), ag = a.gridded(domain);
  for (int i = 0; i < n; ++i) sw[i] = std::sqrt(domain.quad_weight(i));
  std::vector<double> S(static_cast<size_t>(n) * n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j)
      S[static_cast<size_t>(i) * n + j] = sw[i] * stencil_value(kernel, domain, i, j) * sw[j];
    S[static_cast<size_t>(i) * n + i] += ag[i];
  }
  return S;
}

// Largest eigenvalue of a symmetric matrix by cyclic Jacobi rotations.
inline double dense_top_eigenvalue(std::vector<double> A, int n) {
  auto at = [&](int i, int j) -> double& { return A[static_cast<size_t>(i) * n + j]; };
  double norm = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) norm = std::max(norm, std::abs(at(i, j)));
  if (norm == 0.0) return 0.0;

  for (int sweep = 0; sweep < 60; ++sweep) {
    double off = 0.0;
    for (int p = 0; p < n; ++p)
      for (int q = p + 1; q < n; ++q) off = std::max(off, std::abs(at(p, q)));
    if (off < 1e-15 * norm) break;
    for (int p = 0; p < n; ++p) {
      for (int q = p + 1; q < n; ++q) {
        const double apq = at(p, q);
        if (std::abs(apq) < 1e-300) continue;
        const double theta = (at(q, q) - at(p, p)) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (int k = 0; k < n; ++k) {
          const double akp = at(k, p), akq = at(k, q);
          at(k, p) = c * akp - s * akq;
          at(k, q) = s * akp + c * akq;
        }
        for (int k = 0; k < n; ++k) {
          const double apk = at(p, k), aqk = at(q, k);
          at(p, k) = c * apk - s * aqk;
          at(q, k) = s * apk + c * aqk;
        }
      }
    }
  }
  double top = at(0, 0);
  for (int i = 1; i < n; ++i) top = std::max(top, at(i, i));
  return top;
}

}  // namespace nlkpp::detail
