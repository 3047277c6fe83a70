// Internal: a time-separable almost periodic coefficient pre-sampled on a grid,
// so evaluation per time step costs one cos() per temporal mode plus an axpy.
#pragma once

#include <cmath>
#include <vector>

#include "nlkpp/almost_periodic.hpp"
#include "nlkpp/domain.hpp"

namespace nlkpp::detail {

class CoefficientGrid {
 public:
  CoefficientGrid(const APCoefficient& a, const Domain& domain)
      : n_(domain.total()), constant_(a.constant) {
    for (const auto& m : a.modes) {
      omega_.push_back(m.frequency);
      phase_.push_back(m.phase);
      profiles_.push_back(m.profile.gridded(domain));
    }
  }

  int size() const { return n_; }

  void eval_into(double t, double* out) const {
    for (int i = 0; i < n_; ++i) out[i] = constant_;
    for (size_t m = 0; m < omega_.size(); ++m) {
      const double c = std::cos(omega_[m] * t + phase_[m]);
      const double* p = profiles_[m].data();
      for (int i = 0; i < n_; ++i) out[i] += c * p[i];
    }
  }

 private:
  int n_;
  double constant_;
  std::vector<double> omega_, phase_;
  std::vector<std::vector<double>> profiles_;
};

}  // namespace nlkpp::detail
