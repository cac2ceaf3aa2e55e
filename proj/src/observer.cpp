#include "gpobs/observer.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "gpobs/error.hpp"
#include "gpobs/format.hpp"

namespace gpobs {

namespace {

void check_horizon(std::size_t horizon) {
  if (horizon == 0) throw Error(ErrorCode::invalid_argument, "horizon must be at least 1");
  if (horizon > kMaxHorizon) {
    throw Error(ErrorCode::invalid_argument, "horizon exceeds the limit of " + std::to_string(kMaxHorizon) + " steps");
  }
}

bool within(std::span<const double> x, std::span<const double> lo, std::span<const double> hi) {
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double slack = 1e-12 * std::max({1.0, std::abs(lo[i]), std::abs(hi[i])});
    if (!(x[i] >= lo[i] - slack && x[i] <= hi[i] + slack)) return false;
  }
  return true;
}

}  // namespace

std::string to_string(Provenance p) {
  switch (p) {
    case Provenance::synthesized: return "synthesized";
    case Provenance::loaded_fixture: return "loaded-fixture";
    case Provenance::non_private: return "non-private";
  }
  return "unknown";
}

Matrix ObserverDesign::scaled_gain() const {
  if (certificate.size() != gain.rows()) {
    throw Error(ErrorCode::dimension_mismatch, "certificate length does not match the gain rows");
  }
  Matrix out = gain;
  for (std::size_t i = 0; i < out.rows(); ++i)
    for (std::size_t j = 0; j < out.cols(); ++j) out(i, j) *= certificate[i];
  return out;
}

void ObserverDesign::validate(const PlantModel& plant) const {
  if (gain.rows() != plant.n() || gain.cols() != plant.m()) {
    throw Error(ErrorCode::dimension_mismatch, "gain must be " + std::to_string(plant.n()) + "x" +
                                                   std::to_string(plant.m()) + ", got " + std::to_string(gain.rows()) +
                                                   "x" + std::to_string(gain.cols()));
  }
  if (!gain.all_finite()) throw Error(ErrorCode::invalid_argument, "gain has non-finite entries");
  if (!(alpha > 0.0) || !std::isfinite(alpha)) throw Error(ErrorCode::invalid_argument, "alpha must be positive and finite");
  if (!(gamma > 0.0) || !(eta > 0.0)) throw Error(ErrorCode::invalid_argument, "certified levels must be positive");
  for (double q : certificate) {
    if (!(q > 0.0)) throw Error(ErrorCode::invalid_argument, "certificate entries must be positive");
  }
}

ObserverDesign make_design(Matrix gain, double alpha, Provenance provenance) {
  ObserverDesign d;
  d.certificate = Vector(gain.rows(), 1.0);
  d.gain = std::move(gain);
  d.alpha = alpha;
  d.provenance = provenance;
  return d;
}

Framer::Framer(const PlantModel& plant, const Matrix& gain, double alpha)
    : closed_loop_(plant.a - gain * plant.c),
      closed_split_(split(closed_loop_)),
      gain_(gain),
      gamma_split_(split(plant.gamma)) {
  if (gain.rows() != plant.n() || gain.cols() != plant.m()) {
    throw Error(ErrorCode::dimension_mismatch, "framer gain must be " + std::to_string(plant.n()) + "x" + std::to_string(plant.m()));
  }
  const MatrixSplit ws = split(plant.w);
  const MatrixSplit lv = split(gain * plant.v);
  const Vector v_lo = scaled(plant.v_bounds.lo, alpha);
  const Vector v_hi = scaled(plant.v_bounds.hi, alpha);
  const Vector& w_lo = plant.w_bounds.lo;
  const Vector& w_hi = plant.w_bounds.hi;
  // W+ w_lo - W- w_hi + (LV)- v'_lo - (LV)+ v'_hi, and the mirrored upper term.
  offset_lo_ = sub(add(sub(ws.plus * w_lo, ws.minus * w_hi), lv.minus * v_lo), lv.plus * v_hi);
  offset_hi_ = sub(add(sub(ws.plus * w_hi, ws.minus * w_lo), lv.minus * v_hi), lv.plus * v_lo);
}

std::pair<Vector, Vector> Framer::step(std::span<const double> lo, std::span<const double> hi,
                                       std::span<const double> y) const {
  const std::size_t n = closed_loop_.rows();
  if (lo.size() != n || hi.size() != n) throw Error(ErrorCode::dimension_mismatch, "framer state has wrong length");
  if (y.size() != gain_.cols()) {
    throw Error(ErrorCode::dimension_mismatch, "measurement has length " + std::to_string(y.size()) + ", expected " + std::to_string(gain_.cols()));
  }
  const Vector ly = gain_ * y;
  const Vector p_lo = closed_split_.plus * lo, p_hi = closed_split_.plus * hi;
  const Vector m_lo = closed_split_.minus * lo, m_hi = closed_split_.minus * hi;
  Vector next_lo(n), next_hi(n);
  for (std::size_t i = 0; i < n; ++i) {
    next_lo[i] = p_lo[i] - m_hi[i] + ly[i] + offset_lo_[i];
    next_hi[i] = p_hi[i] - m_lo[i] + ly[i] + offset_hi_[i];
  }
  return {std::move(next_lo), std::move(next_hi)};
}

std::pair<Vector, Vector> Framer::output(std::span<const double> lo, std::span<const double> hi) const {
  const Vector p_lo = gamma_split_.plus * lo, p_hi = gamma_split_.plus * hi;
  const Vector m_lo = gamma_split_.minus * lo, m_hi = gamma_split_.minus * hi;
  return {sub(p_lo, m_hi), sub(p_hi, m_lo)};
}

std::pair<Vector, Vector> framer_step(const PlantModel& plant, const ObserverDesign& design,
                                      std::span<const double> x_lo, std::span<const double> x_hi,
                                      std::span<const double> y) {
  for (std::size_t i = 0; i < std::min(x_lo.size(), x_hi.size()); ++i) {
    if (x_lo[i] > x_hi[i]) throw Error(ErrorCode::invalid_argument, "framer_step: x_lo > x_hi at index " + std::to_string(i));
  }
  return Framer(plant, design.gain, design.alpha).step(x_lo, x_hi, y);
}

UniformNoise::UniformNoise(const PlantModel& plant, double alpha, std::uint64_t seed)
    : x0_(plant.x0),
      w_(plant.w_bounds),
      v_(scaled(plant.v_bounds.lo, alpha), scaled(plant.v_bounds.hi, alpha)),
      x0_rng_(seed, streams::initial_state),
      w_rng_(seed, streams::process),
      v_rng_(seed, streams::measurement) {}

Vector UniformNoise::initial_state() {
  Vector x(x0_.size());
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = x0_rng_.uniform(0, i, x0_.lo[i], x0_.hi[i]);
  return x;
}

NoiseDraw UniformNoise::draw(std::size_t step) {
  NoiseDraw d{Vector(w_.size()), Vector(v_.size())};
  for (std::size_t i = 0; i < d.w.size(); ++i) d.w[i] = w_rng_.uniform(step, i, w_.lo[i], w_.hi[i]);
  for (std::size_t i = 0; i < d.v.size(); ++i) d.v[i] = v_rng_.uniform(step, i, v_.lo[i], v_.hi[i]);
  return d;
}

RecordedNoise::RecordedNoise(Vector x0, std::vector<Vector> w, std::vector<Vector> v)
    : x0_(std::move(x0)), w_(std::move(w)), v_(std::move(v)) {}

NoiseDraw RecordedNoise::draw(std::size_t step) {
  if (step >= w_.size() || step >= v_.size()) {
    throw Error(ErrorCode::invalid_argument, "recorded noise exhausted at step " + std::to_string(step));
  }
  return {w_[step], v_[step]};
}

FramerTrajectory simulate(const PlantModel& plant, const ObserverDesign& design, std::size_t horizon,
                          NoiseSource& noise) {
  check_horizon(horizon);
  const Framer framer(plant, design.gain, design.alpha);
  const Vector v_lo = scaled(plant.v_bounds.lo, design.alpha);
  const Vector v_hi = scaled(plant.v_bounds.hi, design.alpha);

  FramerTrajectory t;
  Vector x = noise.initial_state();
  if (x.size() != plant.n() || !within(x, plant.x0.lo, plant.x0.hi)) {
    throw Error(ErrorCode::invalid_argument, "initial state outside [x0_lo, x0_hi]");
  }
  Vector lo = plant.x0.lo, hi = plant.x0.hi;
  for (std::size_t k = 0; k < horizon; ++k) {
    auto [zl, zh] = framer.output(lo, hi);
    t.z_lo.push_back(std::move(zl));
    t.z_hi.push_back(std::move(zh));
    t.z_true.push_back(plant.gamma * x);
    t.x_true.push_back(x);

    NoiseDraw d = noise.draw(k);
    if (d.w.size() != plant.n_w() || !within(d.w, plant.w_bounds.lo, plant.w_bounds.hi)) {
      throw Error(ErrorCode::invalid_argument, "process noise out of bounds at step " + std::to_string(k));
    }
    if (d.v.size() != plant.n_v() || !within(d.v, v_lo, v_hi)) {
      throw Error(ErrorCode::invalid_argument, "measurement noise out of bounds at step " + std::to_string(k));
    }
    Vector y = add(plant.c * x, plant.v * d.v);
    auto [nlo, nhi] = framer.step(lo, hi, y);
    t.x_lo.push_back(std::move(lo));
    t.x_hi.push_back(std::move(hi));
    t.y.push_back(std::move(y));
    x = add(plant.a * x, plant.w * d.w);
    lo = std::move(nlo);
    hi = std::move(nhi);
  }
  return t;
}

FramerTrajectory simulate(const PlantModel& plant, const ObserverDesign& design, std::size_t horizon,
                          std::uint64_t seed) {
  UniformNoise noise(plant, design.alpha, seed);
  return simulate(plant, design, horizon, noise);
}

FramerTrajectory run_framer(const PlantModel& plant, const ObserverDesign& design, const std::vector<Vector>& ys) {
  check_horizon(ys.size());
  const Framer framer(plant, design.gain, design.alpha);
  FramerTrajectory t;
  Vector lo = plant.x0.lo, hi = plant.x0.hi;
  for (const Vector& y : ys) {
    auto [zl, zh] = framer.output(lo, hi);
    t.z_lo.push_back(std::move(zl));
    t.z_hi.push_back(std::move(zh));
    auto [nlo, nhi] = framer.step(lo, hi, y);
    t.x_lo.push_back(std::move(lo));
    t.x_hi.push_back(std::move(hi));
    t.y.push_back(y);
    lo = std::move(nlo);
    hi = std::move(nhi);
  }
  return t;
}

std::vector<IntervalVector> mechanism(const PlantModel& plant, const ObserverDesign& design,
                                      const std::vector<Vector>& ys) {
  const FramerTrajectory t = run_framer(plant, design, ys);
  std::vector<IntervalVector> out;
  out.reserve(t.horizon());
  for (std::size_t k = 0; k < t.horizon(); ++k) out.emplace_back(t.z_lo[k], t.z_hi[k]);
  return out;
}

std::vector<Vector> width_recursion(const PlantModel& plant, const Matrix& gain, double alpha, std::size_t horizon) {
  check_horizon(horizon);
  const Matrix a_tilde = abs(plant.a - gain * plant.c);
  const Matrix lambda = hstack(abs(plant.w), abs(gain * plant.v));
  const Vector drive = lambda * concat(plant.delta_w(), scaled(plant.delta_v(), alpha));
  std::vector<Vector> e{plant.x0.width()};
  while (e.size() < horizon) e.push_back(add(a_tilde * e.back(), drive));
  return e;
}

ContainmentCheck check_containment(const FramerTrajectory& traj) {
  ContainmentCheck c;
  if (!traj.has_truth()) return c;
  for (std::size_t k = 0; k < traj.horizon(); ++k) {
    double slack = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < traj.x_true[k].size(); ++i) {
      slack = std::min({slack, traj.x_true[k][i] - traj.x_lo[k][i], traj.x_hi[k][i] - traj.x_true[k][i]});
    }
    for (std::size_t i = 0; i < traj.z_true[k].size(); ++i) {
      slack = std::min({slack, traj.z_true[k][i] - traj.z_lo[k][i], traj.z_hi[k][i] - traj.z_true[k][i]});
    }
    if (slack < c.worst_slack) {
      c.worst_slack = slack;
      c.worst_step = k;
    }
  }
  c.ok = c.worst_slack >= -1e-9;
  return c;
}

void write_trajectory_csv(std::ostream& out, const FramerTrajectory& traj) {
  const std::size_t nz = traj.horizon() == 0 ? 0 : traj.z_lo.front().size();
  out << 'k';
  for (std::size_t j = 1; j <= nz; ++j) {
    out << ",z_true_" << j << ",z_lo_" << j << ",z_hi_" << j << ",width_" << j;
  }
  out << '\n';
  for (std::size_t k = 0; k < traj.horizon(); ++k) {
    out << k;
    for (std::size_t j = 0; j < nz; ++j) {
      out << ',' << (traj.has_truth() ? format_double(traj.z_true[k][j]) : std::string("nan")) << ','
          << format_double(traj.z_lo[k][j]) << ',' << format_double(traj.z_hi[k][j]) << ','
          << format_double(traj.z_hi[k][j] - traj.z_lo[k][j]);
    }
    out << '\n';
  }
}

}  // namespace gpobs
