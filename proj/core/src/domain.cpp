#include "nlkpp/domain.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace nlkpp {

double wrap_minimal(double z, double period) {
  double w = std::fmod(z, period);
  if (w > period / 2) w -= period;
  if (w <= -period / 2) w += period;
  return w;
}

double Domain::quad_weight(int idx) const {
  if (is_torus()) return cell_volume();
  auto iv = unravel(idx);
  double w = 1.0;
  for (int ax = 0; ax < dim; ++ax) {
    double wa = spacing[ax];
    if (iv[ax] == 0 || iv[ax] == counts[ax] - 1) wa *= 0.5;
    w *= wa;
  }
  return w;
}

double Domain::distance_to_origin(int idx) const {
  auto p = point(idx);
  double s = 0.0;
  for (int ax = 0; ax < dim; ++ax) {
    double d = is_torus() ? wrap_minimal(p[ax], extent(ax)) : p[ax];
    s += d * d;
  }
  return std::sqrt(s);
}

Domain build_domain(DomainKind kind, int dim, std::array<double, 2> lower,
                    std::array<double, 2> upper, std::array<int, 2> counts) {
  if (dim != 1 && dim != 2)
    throw std::invalid_argument("build_domain: dimension must be 1 or 2, got " +
                                std::to_string(dim));
  const int per_axis_cap = dim == 1 ? 512 : 128;
  for (int ax = 0; ax < dim; ++ax) {
    if (!(upper[ax] > lower[ax]))
      throw std::invalid_argument("build_domain: axis " + std::to_string(ax) +
                                  " upper bound must exceed lower bound");
    if (counts[ax] < 8)
      throw std::invalid_argument("build_domain: axis " + std::to_string(ax) +
                                  " needs at least 8 grid points, got " +
                                  std::to_string(counts[ax]));
    if (counts[ax] > per_axis_cap)
      throw std::invalid_argument("build_domain: axis " + std::to_string(ax) + " count " +
                                  std::to_string(counts[ax]) + " exceeds the desk-scale cap " +
                                  std::to_string(per_axis_cap));
  }
  Domain d;
  d.kind = kind;
  d.dim = dim;
  d.lower = lower;
  d.upper = upper;
  d.counts = counts;
  if (dim == 1) d.counts[1] = 1;
  for (int ax = 0; ax < dim; ++ax) {
    double extent = upper[ax] - lower[ax];
    d.spacing[ax] =
        kind == DomainKind::Torus ? extent / counts[ax] : extent / (counts[ax] - 1);
    if (!(d.spacing[ax] > 0.0))
      throw std::invalid_argument("build_domain: degenerate spacing on axis " +
                                  std::to_string(ax));
  }
  return d;
}

}  // namespace nlkpp
