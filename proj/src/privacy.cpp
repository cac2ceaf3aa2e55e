#include "gpobs/privacy.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <sstream>

#include "gpobs/error.hpp"
#include "gpobs/format.hpp"
#include "gpobs/random.hpp"

namespace gpobs {

std::string to_string(AdjacencyMode mode) {
  switch (mode) {
    case AdjacencyMode::boundary: return "boundary";
    case AdjacencyMode::interior: return "interior";
    case AdjacencyMode::single_agent: return "single-agent";
  }
  return "unknown";
}

AdjacencyMode parse_adjacency_mode(const std::string& text) {
  if (text == "boundary") return AdjacencyMode::boundary;
  if (text == "interior") return AdjacencyMode::interior;
  if (text == "single-agent") return AdjacencyMode::single_agent;
  throw Error(ErrorCode::invalid_argument, "unknown adjacency mode '" + text + "'");
}

AdjacentPair gen_adjacent(const PlantModel& plant, const ObserverDesign& design, std::size_t horizon,
                          std::uint64_t seed, double rho, AdjacencyMode mode, std::size_t agent) {
  if (!(rho >= 0.0) || !std::isfinite(rho)) throw Error(ErrorCode::invalid_argument, "rho must be nonnegative");
  std::size_t first = 0;
  std::size_t last = plant.m();
  if (mode == AdjacencyMode::single_agent) {
    if (agent >= plant.agent_count()) {
      throw Error(ErrorCode::invalid_argument, "agent " + std::to_string(agent + 1) + " does not exist");
    }
    first = plant.output_offsets[agent];
    last = plant.output_offsets[agent + 1];
    if (first == last) throw Error(ErrorCode::invalid_argument, "agent has no outputs");
  }

  AdjacentPair pair;
  pair.y = simulate(plant, design, horizon, seed).y;
  CounterRng rng(seed, streams::adjacency);
  const std::size_t dim = last - first;
  for (std::size_t k = 0; k < pair.y.size(); ++k) {
    Vector d(dim, 0.0);
    double radius = rho;
    if (rho > 0.0) {
      double norm = 0.0;
      do {
        for (std::size_t i = 0; i < dim; ++i) d[i] = rng.normal(k, i);
        norm = norm2(d);
      } while (norm == 0.0);
      if (mode == AdjacencyMode::interior) {
        radius = rho * std::pow(rng.uniform(k, 2 * dim + 1), 1.0 / static_cast<double>(dim));
      }
      for (double& x : d) x *= radius / norm;
    }
    Vector yp = pair.y[k];
    for (std::size_t i = 0; i < dim; ++i) yp[first + i] += d[i];
    pair.deviation.push_back(norm2(sub(yp, pair.y[k])));
    pair.y_prime.push_back(std::move(yp));
  }
  return pair;
}

double max_corner_distance(const IntervalVector& a, const IntervalVector& b) {
  const std::size_t d = a.lo.size();
  if (b.lo.size() != d) throw Error(ErrorCode::dimension_mismatch, "boxes differ in dimension");
  if (d > kMaxCornerDim) {
    throw Error(ErrorCode::invalid_argument, "corner enumeration refused above dimension " +
                                                 std::to_string(kMaxCornerDim));
  }
  double best = norm2(sub(a.center(), b.center()));
  const std::size_t corners = std::size_t{1} << d;
  Vector p(d), q(d);
  for (std::size_t i = 0; i < corners; ++i) {
    for (std::size_t t = 0; t < d; ++t) p[t] = (i >> t) & 1 ? a.hi[t] : a.lo[t];
    for (std::size_t j = 0; j < corners; ++j) {
      double s = 0.0;
      for (std::size_t t = 0; t < d; ++t) {
        double diff = p[t] - ((j >> t) & 1 ? b.hi[t] : b.lo[t]);
        s += diff * diff;
      }
      best = std::max(best, std::sqrt(s));
    }
  }
  return best;
}

double center_width_bound(const IntervalVector& a, const IntervalVector& b) {
  return norm2(sub(a.center(), b.center())) + 0.5 * (norm2(a.width()) + norm2(b.width()));
}

AuditReport audit_guaranteed(const PlantModel& plant, const ObserverDesign& design, const PrivacyBudget& budget,
                             const AuditOptions& options) {
  if (options.pairs == 0) throw Error(ErrorCode::invalid_argument, "audit needs at least one pair");
  if (options.horizon == 0) throw Error(ErrorCode::invalid_argument, "audit horizon must be positive");
  design.validate(plant);

  AuditReport r;
  r.pairs = options.pairs;
  r.horizon = options.horizon;
  r.epsilon = budget.epsilon;
  r.delta = budget.delta;
  r.rho = budget.rho;
  r.corner_exact = plant.n_z() <= kMaxCornerDim;
  r.step_worst.assign(options.horizon, 0.0);
  r.step_violations.assign(options.horizon, 0);
  const double scale = std::exp(budget.epsilon);

  double width_sum = 0.0;
  for (std::size_t p = 0; p < options.pairs; ++p) {
    AdjacentPair pair = gen_adjacent(plant, design, options.horizon, options.seed + p, budget.rho, options.mode,
                                     options.agent);
    std::vector<IntervalVector> z = mechanism(plant, design, pair.y);
    std::vector<IntervalVector> zp = mechanism(plant, design, pair.y_prime);
    bool violated = false;
    for (std::size_t k = 0; k < options.horizon; ++k) {
      double dist = r.corner_exact ? max_corner_distance(z[k], zp[k]) : center_width_bound(z[k], zp[k]);
      double v = scale * dist;
      if (v > r.step_worst[k]) r.step_worst[k] = v;
      if (v > r.worst) {
        r.worst = v;
        r.worst_pair = p;
        r.worst_step = k;
      }
      if (v > budget.delta) {
        ++r.violations;
        ++r.step_violations[k];
        violated = true;
      }
    }
    if (violated) ++r.violating_pairs;
    width_sum += norm2(z.back().width()) / std::sqrt(static_cast<double>(std::max<std::size_t>(plant.n_z(), 1)));
  }
  r.mean_final_width = width_sum / static_cast<double>(options.pairs);
  return r;
}

std::string format_audit_report(const AuditReport& r) {
  std::ostringstream os;
  os << "pairs: " << r.pairs << '\n';
  os << "horizon: " << r.horizon << '\n';
  os << "epsilon: " << format_double(r.epsilon) << '\n';
  os << "delta: " << format_double(r.delta) << '\n';
  os << "rho: " << format_double(r.rho) << '\n';
  os << "method: " << (r.corner_exact ? "corners" : "center-width-bound") << '\n';
  os << "worst: " << format_double(r.worst) << '\n';
  os << "worst_pair: " << r.worst_pair << '\n';
  os << "worst_step: " << r.worst_step << '\n';
  os << "residual: " << format_double(r.worst - r.delta) << '\n';
  os << "violations: " << r.violations << '\n';
  os << "violating_pairs: " << r.violating_pairs << '\n';
  os << "mean_final_width: " << format_double(r.mean_final_width) << '\n';
  return os.str();
}

void write_audit_csv(std::ostream& out, const AuditReport& r) {
  out << "k,worst_distance,delta,violations\n";
  for (std::size_t k = 0; k < r.step_worst.size(); ++k) {
    out << k << ',' << format_double(r.step_worst[k]) << ',' << format_double(r.delta) << ','
        << r.step_violations[k] << '\n';
  }
}

PlantModel dp_augmented_plant(const PlantModel& plant, double scale) {
  if (!(scale >= 0.0) || !std::isfinite(scale)) throw Error(ErrorCode::invalid_argument, "DP noise scale must be nonnegative");
  PlantModel aug = plant;
  const std::size_t m = plant.m();
  aug.v = hstack(plant.v, Matrix::identity(m));
  aug.v_bounds = IntervalVector(concat(plant.v_bounds.lo, Vector(m, -scale)), concat(plant.v_bounds.hi, Vector(m, scale)));
  return aug;
}

DpNoise::DpNoise(const PlantModel& plant, double scale, std::uint64_t seed)
    : base_(plant, 1.0, seed), scale_(scale), outputs_(plant.m()), rng_(seed, streams::dp_noise) {}

NoiseDraw DpNoise::draw(std::size_t step) {
  NoiseDraw d = base_.draw(step);
  Vector extra(outputs_, 0.0);
  if (scale_ > 0.0) {
    const double b = 0.5 * scale_;
    const double mass = -std::expm1(-scale_ / b);
    for (std::size_t i = 0; i < outputs_; ++i) {
      double u = rng_.uniform(step, 2 * i);
      double magnitude = std::min(-b * std::log1p(-u * mass), scale_);
      extra[i] = rng_.uniform(step, 2 * i + 1) < 0.5 ? -magnitude : magnitude;
    }
  }
  d.v = concat(d.v, extra);
  return d;
}

FramerTrajectory dp_baseline(const PlantModel& plant, const Matrix& gain, double scale, std::size_t horizon,
                             std::uint64_t seed) {
  PlantModel aug = dp_augmented_plant(plant, scale);
  ObserverDesign design = make_design(gain, 1.0, Provenance::synthesized);
  DpNoise noise(plant, scale, seed);
  return simulate(aug, design, horizon, noise);
}

}  // namespace gpobs
