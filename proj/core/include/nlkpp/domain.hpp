#pragma once

#include <array>
#include <vector>

namespace nlkpp {

enum class DomainKind { BoundedBox, Torus };

// Uniform grid over a closed box (both endpoints are grid points, spacing
// (upper-lower)/(count-1)) or a flat torus (spacing period/count; the point at
// lower+period is identified with the one at lower).  Dimension 1 or 2; in 2-D
// the flat index is iy*counts[0]+ix.
struct Domain {
  DomainKind kind = DomainKind::Torus;
  int dim = 1;
  std::array<double, 2> lower{{0.0, 0.0}};
  std::array<double, 2> upper{{0.0, 0.0}};
  std::array<int, 2> counts{{0, 1}};
  std::array<double, 2> spacing{{0.0, 0.0}};

  bool is_torus() const { return kind == DomainKind::Torus; }
  int total() const { return dim == 1 ? counts[0] : counts[0] * counts[1]; }
  double extent(int axis) const { return upper[axis] - lower[axis]; }
  double coord(int axis, int i) const { return lower[axis] + i * spacing[axis]; }
  int index(int ix, int iy = 0) const { return iy * counts[0] + ix; }
  std::array<int, 2> unravel(int idx) const {
    if (dim == 1) return {idx, 0};
    return {idx % counts[0], idx / counts[0]};
  }
  std::array<double, 2> point(int idx) const {
    auto iv = unravel(idx);
    return {coord(0, iv[0]), dim == 2 ? coord(1, iv[1]) : 0.0};
  }
  // product of per-axis step volumes (h or h^2)
  double cell_volume() const { return dim == 1 ? spacing[0] : spacing[0] * spacing[1]; }
  // |D|: box extents product; torus periods product
  double volume() const { return dim == 1 ? extent(0) : extent(0) * extent(1); }
  // Quadrature weight of a grid point: h per axis with the two box endpoints
  // halved (trapezoid); on the torus every weight is h.
  double quad_weight(int idx) const;
  // Smallest Euclidean distance from grid point idx to the origin point
  // (coordinate 0, which must be representable on the grid); torus distances wrap.
  double distance_to_origin(int idx) const;
};

Domain build_domain(DomainKind kind, int dim, std::array<double, 2> lower,
                    std::array<double, 2> upper, std::array<int, 2> counts);

// wrap a displacement into the minimal image (-period/2, period/2]
double wrap_minimal(double z, double period);

}  // namespace nlkpp
