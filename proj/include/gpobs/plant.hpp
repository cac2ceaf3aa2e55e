#pragma once

#include <cmath>
#include <cstddef>
#include <map>
#include <vector>

#include "gpobs/matops.hpp"

namespace gpobs {

/// Box [lo, hi] in R^n.
struct IntervalVector {
  Vector lo;
  Vector hi;

  IntervalVector() = default;
  IntervalVector(Vector lo_, Vector hi_);

  std::size_t size() const noexcept { return lo.size(); }
  Vector center() const;
  Vector width() const;
  double diam() const;
  bool contains(std::span<const double> x, double slack = 0.0) const;
};

/// (epsilon, delta)-guaranteed privacy with respect to adjacency radius rho.
struct PrivacyBudget {
  double epsilon = 0.0;
  double delta = 0.0;
  double rho = 1.0;

  PrivacyBudget() = default;
  PrivacyBudget(double epsilon_, double delta_, double rho_);

  /// e^{-epsilon} * delta, the right-hand side of the privacy constraint.
  double bound() const { return std::exp(-epsilon) * delta; }
};

struct AgentBlock {
  Matrix a;                                // n_i x n_i
  std::map<std::size_t, Matrix> couplings;  // j -> A_ij (n_i x n_j), 0-based j
  Matrix w;                                // n_i x nw_i
  Matrix c;                                // m_i x n_i
  Matrix v;                                // m_i x nv_i
  Vector x0_lo, x0_hi;
  Vector w_lo, w_hi;
  Vector v_lo, v_hi;
};

/// Global bounded-error LTI plant x+ = A x + W w, y = C x + V v, z = Gamma x.
struct PlantModel {
  Matrix a, c, w, v, gamma;
  IntervalVector x0;
  IntervalVector w_bounds;
  IntervalVector v_bounds;

  // Offsets of each agent's states and outputs in the global vectors; the last
  // entry is the total.
  std::vector<std::size_t> state_offsets;
  std::vector<std::size_t> output_offsets;

  std::size_t n() const noexcept { return a.rows(); }
  std::size_t m() const noexcept { return c.rows(); }
  std::size_t n_w() const noexcept { return w.cols(); }
  std::size_t n_v() const noexcept { return v.cols(); }
  std::size_t n_z() const noexcept { return gamma.rows(); }
  std::size_t agent_count() const noexcept { return state_offsets.empty() ? 0 : state_offsets.size() - 1; }

  Vector delta_w() const { return w_bounds.width(); }
  Vector delta_v() const { return v_bounds.width(); }

  /// Throws Error(dimension_mismatch / invalid_argument) on inconsistency.
  void validate() const;
};

PlantModel assemble_global(const std::vector<AgentBlock>& agents, const Matrix& gamma);

}  // namespace gpobs
