#include "gpobs/plant.hpp"

#include <algorithm>
#include <string>

#include "gpobs/error.hpp"

namespace gpobs {

namespace {

std::string dims(const Matrix& m) { return std::to_string(m.rows()) + "x" + std::to_string(m.cols()); }

void require_ordered(const Vector& lo, const Vector& hi, const std::string& what) {
  if (lo.size() != hi.size()) {
    throw Error(ErrorCode::dimension_mismatch, what + ": lower and upper bounds differ in length");
  }
  for (std::size_t i = 0; i < lo.size(); ++i) {
    if (!std::isfinite(lo[i]) || !std::isfinite(hi[i])) {
      throw Error(ErrorCode::invalid_argument, what + ": non-finite bound at index " + std::to_string(i));
    }
    if (lo[i] > hi[i]) {
      throw Error(ErrorCode::invalid_argument, what + ": lower bound exceeds upper bound at index " + std::to_string(i));
    }
  }
}

}  // namespace

IntervalVector::IntervalVector(Vector lo_, Vector hi_) : lo(std::move(lo_)), hi(std::move(hi_)) {
  require_ordered(lo, hi, "interval");
}

Vector IntervalVector::center() const {
  Vector c(lo.size());
  for (std::size_t i = 0; i < lo.size(); ++i) c[i] = 0.5 * (lo[i] + hi[i]);
  return c;
}

Vector IntervalVector::width() const { return sub(hi, lo); }

double IntervalVector::diam() const { return norm_inf(width()); }

bool IntervalVector::contains(std::span<const double> x, double slack) const {
  if (x.size() != lo.size()) return false;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] < lo[i] - slack || x[i] > hi[i] + slack) return false;
  }
  return true;
}

PrivacyBudget::PrivacyBudget(double epsilon_, double delta_, double rho_)
    : epsilon(epsilon_), delta(delta_), rho(rho_) {
  if (!(epsilon >= 0.0) || !(delta >= 0.0) || !(rho > 0.0) || !std::isfinite(epsilon) ||
      !std::isfinite(delta) || !std::isfinite(rho)) {
    throw Error(ErrorCode::invalid_argument, "privacy budget requires epsilon >= 0, delta >= 0, rho > 0");
  }
}

void PlantModel::validate() const {
  const std::size_t nx = a.rows();
  if (nx == 0 || !a.square()) throw Error(ErrorCode::dimension_mismatch, "A must be square and non-empty, got " + dims(a));
  if (c.cols() != nx || c.rows() == 0) throw Error(ErrorCode::dimension_mismatch, "C must have " + std::to_string(nx) + " columns, got " + dims(c));
  if (w.rows() != nx || w.cols() == 0) throw Error(ErrorCode::dimension_mismatch, "W must have " + std::to_string(nx) + " rows, got " + dims(w));
  if (v.rows() != c.rows() || v.cols() == 0) throw Error(ErrorCode::dimension_mismatch, "V must have " + std::to_string(c.rows()) + " rows, got " + dims(v));
  if (gamma.cols() != nx || gamma.rows() == 0) throw Error(ErrorCode::dimension_mismatch, "Gamma must have " + std::to_string(nx) + " columns, got " + dims(gamma));
  for (const Matrix* mat : {&a, &c, &w, &v, &gamma}) {
    if (!mat->all_finite()) throw Error(ErrorCode::invalid_argument, "plant matrices must be finite");
  }
  if (x0.size() != nx) throw Error(ErrorCode::dimension_mismatch, "x0 bounds must have length " + std::to_string(nx));
  if (w_bounds.size() != w.cols()) throw Error(ErrorCode::dimension_mismatch, "w bounds must have length " + std::to_string(w.cols()));
  if (v_bounds.size() != v.cols()) throw Error(ErrorCode::dimension_mismatch, "v bounds must have length " + std::to_string(v.cols()));
  require_ordered(x0.lo, x0.hi, "x0");
  require_ordered(w_bounds.lo, w_bounds.hi, "w");
  require_ordered(v_bounds.lo, v_bounds.hi, "v");
}

PlantModel assemble_global(const std::vector<AgentBlock>& agents, const Matrix& gamma) {
  if (agents.empty()) throw Error(ErrorCode::invalid_argument, "at least one agent is required");
  const std::size_t count = agents.size();

  PlantModel p;
  std::vector<std::size_t> w_off{0}, v_off{0};
  p.state_offsets = {0};
  p.output_offsets = {0};
  for (std::size_t i = 0; i < count; ++i) {
    const AgentBlock& ag = agents[i];
    const std::string who = "agent " + std::to_string(i + 1);
    const std::size_t ni = ag.a.rows();
    if (ni == 0 || !ag.a.square()) throw Error(ErrorCode::dimension_mismatch, who + ": A must be square, got " + dims(ag.a));
    if (ag.w.rows() != ni) throw Error(ErrorCode::dimension_mismatch, who + ": W has " + std::to_string(ag.w.rows()) + " rows, expected " + std::to_string(ni));
    if (ag.c.cols() != ni) throw Error(ErrorCode::dimension_mismatch, who + ": C has " + std::to_string(ag.c.cols()) + " columns, expected " + std::to_string(ni));
    if (ag.v.rows() != ag.c.rows()) throw Error(ErrorCode::dimension_mismatch, who + ": V has " + std::to_string(ag.v.rows()) + " rows, expected " + std::to_string(ag.c.rows()));
    if (ag.x0_lo.size() != ni || ag.x0_hi.size() != ni) throw Error(ErrorCode::dimension_mismatch, who + ": x0 bounds must have length " + std::to_string(ni));
    if (ag.w_lo.size() != ag.w.cols() || ag.w_hi.size() != ag.w.cols()) throw Error(ErrorCode::dimension_mismatch, who + ": w bounds must have length " + std::to_string(ag.w.cols()));
    if (ag.v_lo.size() != ag.v.cols() || ag.v_hi.size() != ag.v.cols()) throw Error(ErrorCode::dimension_mismatch, who + ": v bounds must have length " + std::to_string(ag.v.cols()));
    require_ordered(ag.x0_lo, ag.x0_hi, who + " x0");
    require_ordered(ag.w_lo, ag.w_hi, who + " w");
    require_ordered(ag.v_lo, ag.v_hi, who + " v");
    p.state_offsets.push_back(p.state_offsets.back() + ni);
    p.output_offsets.push_back(p.output_offsets.back() + ag.c.rows());
    w_off.push_back(w_off.back() + ag.w.cols());
    v_off.push_back(v_off.back() + ag.v.cols());
  }

  const std::size_t n = p.state_offsets.back();
  const std::size_t m = p.output_offsets.back();
  p.a = Matrix(n, n);
  p.c = Matrix(m, n);
  p.w = Matrix(n, w_off.back());
  p.v = Matrix(m, v_off.back());

  for (std::size_t i = 0; i < count; ++i) {
    const AgentBlock& ag = agents[i];
    const std::size_t r0 = p.state_offsets[i];
    const std::size_t o0 = p.output_offsets[i];
    for (std::size_t r = 0; r < ag.a.rows(); ++r) {
      for (std::size_t c = 0; c < ag.a.cols(); ++c) p.a(r0 + r, r0 + c) = ag.a(r, c);
      for (std::size_t c = 0; c < ag.w.cols(); ++c) p.w(r0 + r, w_off[i] + c) = ag.w(r, c);
    }
    for (std::size_t r = 0; r < ag.c.rows(); ++r) {
      for (std::size_t c = 0; c < ag.c.cols(); ++c) p.c(o0 + r, r0 + c) = ag.c(r, c);
      for (std::size_t c = 0; c < ag.v.cols(); ++c) p.v(o0 + r, v_off[i] + c) = ag.v(r, c);
    }
    for (const auto& [j, block] : ag.couplings) {
      if (j >= count) {
        throw Error(ErrorCode::invalid_argument, "agent " + std::to_string(i + 1) + " couples to unknown agent " + std::to_string(j + 1));
      }
      if (j == i) throw Error(ErrorCode::invalid_argument, "agent " + std::to_string(i + 1) + " couples to itself");
      const std::size_t nj = p.state_offsets[j + 1] - p.state_offsets[j];
      if (block.rows() != ag.a.rows() || block.cols() != nj) {
        throw Error(ErrorCode::dimension_mismatch,
                    "coupling between agent " + std::to_string(i + 1) + " and agent " + std::to_string(j + 1) +
                        " is " + dims(block) + ", expected " + std::to_string(ag.a.rows()) + "x" + std::to_string(nj));
      }
      for (std::size_t r = 0; r < block.rows(); ++r)
        for (std::size_t c = 0; c < block.cols(); ++c) p.a(r0 + r, p.state_offsets[j] + c) = block(r, c);
    }
    p.x0.lo.insert(p.x0.lo.end(), ag.x0_lo.begin(), ag.x0_lo.end());
    p.x0.hi.insert(p.x0.hi.end(), ag.x0_hi.begin(), ag.x0_hi.end());
    p.w_bounds.lo.insert(p.w_bounds.lo.end(), ag.w_lo.begin(), ag.w_lo.end());
    p.w_bounds.hi.insert(p.w_bounds.hi.end(), ag.w_hi.begin(), ag.w_hi.end());
    p.v_bounds.lo.insert(p.v_bounds.lo.end(), ag.v_lo.begin(), ag.v_lo.end());
    p.v_bounds.hi.insert(p.v_bounds.hi.end(), ag.v_hi.begin(), ag.v_hi.end());
  }
  p.gamma = gamma;
  p.validate();
  return p;
}

}  // namespace gpobs
