#include "gpobs/hinf.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "gpobs/error.hpp"
#include "gpobs/format.hpp"

namespace gpobs {

namespace {

void require_stable_nonneg(const Matrix& a_tilde, const char* what) {
  double r = spectral_radius_nonneg(a_tilde);
  if (!(r < 1.0)) {
    throw Error(ErrorCode::unstable, std::string(what) + ": spectral radius " + format_double(r) + " >= 1");
  }
}

Matrix closed_loop_of(const PlantModel& plant, const Matrix& gain) {
  if (gain.rows() != plant.n() || gain.cols() != plant.m()) {
    throw Error(ErrorCode::dimension_mismatch, "gain must be " + std::to_string(plant.n()) + "x" +
                                                   std::to_string(plant.m()));
  }
  return plant.a - gain * plant.c;
}

// Dynamic and input blocks of the inequality before scaling by Q.
struct LmiParts {
  Matrix dyn;
  Matrix input;
};

LmiParts lmi_parts(const PlantModel& plant, const Matrix& gain, LmiKind which) {
  Matrix f = closed_loop_of(plant, gain);
  if (which == LmiKind::stability) {
    return {abs(f), hstack(abs(plant.w), abs(gain * plant.v))};
  }
  return {f, gain};
}

// Symmetric block matrix [[Q, Q D, Q B, 0], [*, Q, 0, I], [*, *, l I, 0], [*, *, *, l I]].
Matrix assemble(std::span<const double> q, const Matrix& qd, const Matrix& qb, double level) {
  const std::size_t n = q.size();
  const std::size_t p = qb.cols();
  const std::size_t size = 3 * n + p;
  Matrix m(size, size);
  for (std::size_t i = 0; i < n; ++i) {
    m(i, i) = q[i];
    m(n + i, n + i) = q[i];
    m(n + i, 2 * n + p + i) = 1.0;
    m(2 * n + p + i, n + i) = 1.0;
    m(2 * n + p + i, 2 * n + p + i) = level;
    for (std::size_t j = 0; j < n; ++j) {
      m(i, n + j) = qd(i, j);
      m(n + j, i) = qd(i, j);
    }
    for (std::size_t j = 0; j < p; ++j) {
      m(i, 2 * n + j) = qb(i, j);
      m(2 * n + j, i) = qb(i, j);
    }
  }
  for (std::size_t j = 0; j < p; ++j) m(2 * n + j, 2 * n + j) = level;
  return m;
}

Vector diagonal_of(const Matrix& q, std::size_t n) {
  if (q.rows() != n || q.cols() != n) {
    throw Error(ErrorCode::dimension_mismatch, "Q must be " + std::to_string(n) + "x" + std::to_string(n));
  }
  if (!q.is_diagonal()) throw Error(ErrorCode::invalid_argument, "Q must be diagonal");
  Vector d(n);
  for (std::size_t i = 0; i < n; ++i) {
    d[i] = q(i, i);
    if (!(d[i] > 0.0)) throw Error(ErrorCode::invalid_argument, "Q must have a positive diagonal");
  }
  return d;
}

void check_scaled_gain(const PlantModel& plant, const Matrix& scaled_gain) {
  if (scaled_gain.rows() != plant.n() || scaled_gain.cols() != plant.m()) {
    throw Error(ErrorCode::dimension_mismatch, "scaled gain must be " + std::to_string(plant.n()) + "x" +
                                                   std::to_string(plant.m()));
  }
}

Matrix scale_rows(std::span<const double> q, const Matrix& m) {
  Matrix out = m;
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (double& x : out.row(i)) x *= q[i];
  return out;
}

LmiReport make_report(LmiKind which, double level, const Matrix& lmi, Vector q, Matrix scaled_gain,
                      double margin) {
  LmiReport r;
  r.which = which;
  r.level = level;
  r.min_eig = sym_eig_min(lmi);
  r.feasible = r.min_eig > margin;
  r.q = std::move(q);
  r.scaled_gain = std::move(scaled_gain);
  return r;
}

struct Evaluation {
  double value;
  Vector vec;
};

Evaluation evaluate(const LmiParts& parts, std::span<const double> q, double level) {
  Matrix lmi = assemble(q, scale_rows(q, parts.dyn), scale_rows(q, parts.input), level);
  SymmetricEigen eig = sym_eig(lmi);
  Vector u(lmi.rows());
  for (std::size_t i = 0; i < u.size(); ++i) u[i] = eig.vectors(i, 0);
  return {eig.values[0], std::move(u)};
}

Vector subgradient(const LmiParts& parts, const Vector& u) {
  const std::size_t n = parts.dyn.rows();
  const std::size_t p = parts.input.cols();
  Vector g(n);
  for (std::size_t i = 0; i < n; ++i) {
    double u1 = u[i];
    double u2 = u[n + i];
    double d = 0.0;
    for (std::size_t j = 0; j < n; ++j) d += parts.dyn(i, j) * u[n + j];
    double b = 0.0;
    for (std::size_t j = 0; j < p; ++j) b += parts.input(i, j) * u[2 * n + j];
    g[i] = u1 * u1 + u2 * u2 + 2.0 * u1 * d + 2.0 * u1 * b;
  }
  return g;
}

// Maximizes the minimum eigenvalue over t q with log t in [-12, 12].
double best_scale(const LmiParts& parts, const Vector& q, double level) {
  auto f = [&](double s) { return evaluate(parts, scaled(q, std::exp(s)), level).value; };
  const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = -12.0;
  double b = 12.0;
  double c = b - invphi * (b - a);
  double d = a + invphi * (b - a);
  double fc = f(c);
  double fd = f(d);
  for (int it = 0; it < 40; ++it) {
    if (fc > fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - invphi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + invphi * (b - a);
      fd = f(d);
    }
  }
  double s = fc > fd ? c : d;
  return f(0.0) >= std::max(fc, fd) ? 1.0 : std::exp(s);
}

}  // namespace

ErrorSystem build_error_system(const PlantModel& plant, const Matrix& gain, double alpha) {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) throw Error(ErrorCode::invalid_argument, "alpha must be positive");
  ErrorSystem e;
  e.a_tilde = abs(closed_loop_of(plant, gain));
  e.lambda = hstack(abs(plant.w), abs(gain * plant.v));
  e.delta_w = plant.delta_w();
  e.delta_v = plant.delta_v();
  e.delta_lambda = concat(e.delta_w, scaled(e.delta_v, alpha));
  return e;
}

ErrorSystem build_error_system(const PlantModel& plant, const ObserverDesign& design) {
  return build_error_system(plant, design.gain, design.alpha);
}

double gamma_direct(const ErrorSystem& err) {
  require_stable_nonneg(err.a_tilde, "width dynamics");
  const std::size_t n = err.a_tilde.rows();
  try {
    return sigma_max(solve(Matrix::identity(n) - err.a_tilde, err.lambda));
  } catch (const Error& e) {
    if (e.code() != ErrorCode::singular) throw;
    throw Error(ErrorCode::unstable, "width dynamics have spectral radius 1 (I - A_tilde is singular)");
  }
}

double resolvent_gain(const Matrix& closed_loop, const Matrix& input, double theta) {
  const std::size_t n = closed_loop.rows();
  const std::size_t p = input.cols();
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  Matrix aug(2 * n, 2 * n);
  Matrix rhs(2 * n, p);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double v = (i == j ? c : 0.0) - closed_loop(i, j);
      aug(i, j) = v;
      aug(n + i, n + j) = v;
    }
    aug(i, n + i) = -s;
    aug(n + i, i) = s;
    for (std::size_t j = 0; j < p; ++j) rhs(i, j) = input(i, j);
  }
  Matrix x = solve(aug, rhs);
  // G = Xr + i Xi; sigma_max(G) = sigma_max([[Xr, -Xi], [Xi, Xr]]).
  Matrix real(2 * n, 2 * p);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < p; ++j) {
      real(i, j) = x(i, j);
      real(n + i, p + j) = x(i, j);
      real(i, p + j) = -x(n + i, j);
      real(n + i, j) = x(n + i, j);
    }
  }
  return sigma_max(real);
}

double eta_hinf(const Matrix& closed_loop, const Matrix& input, const FrequencySweep& sweep) {
  if (!closed_loop.square() || input.rows() != closed_loop.rows()) {
    throw Error(ErrorCode::dimension_mismatch, "eta: input rows must match the closed loop");
  }
  if (sweep.grid_points < 2) throw Error(ErrorCode::invalid_argument, "eta: grid needs at least 2 points");
  double r = spectral_radius_estimate(closed_loop);
  if (!(r < 1.0)) {
    throw Error(ErrorCode::unstable, "closed loop spectral radius " + format_double(r) + " >= 1");
  }
  if (input.max_abs() == 0.0) return 0.0;

  auto f = [&](double theta) {
    try {
      return resolvent_gain(closed_loop, input, theta);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::singular) {
        throw Error(ErrorCode::unstable, "resolvent singular at theta " + format_double(theta));
      }
      throw;
    }
  };
  const std::size_t g = sweep.grid_points;
  const double step = std::numbers::pi / static_cast<double>(g - 1);
  std::size_t best_i = 0;
  double best = -1.0;
  for (std::size_t i = 0; i < g; ++i) {
    double v = f(step * static_cast<double>(i));
    if (v > best) {
      best = v;
      best_i = i;
    }
  }
  double a = step * static_cast<double>(best_i == 0 ? 0 : best_i - 1);
  double b = step * static_cast<double>(std::min(best_i + 1, g - 1));
  const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - invphi * (b - a);
  double d = a + invphi * (b - a);
  double fc = f(c);
  double fd = f(d);
  double prev = best;
  for (int it = 0; it < 200 && (b - a) > 1e-12; ++it) {
    if (fc > fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - invphi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + invphi * (b - a);
      fd = f(d);
    }
    double cur = std::max(fc, fd);
    if (it > 8 && std::abs(cur - prev) <= sweep.refine_tolerance * 1e-3 * cur && (b - a) < 1e-7) break;
    prev = cur;
  }
  return std::max({best, fc, fd});
}

double eta_hinf(const PlantModel& plant, const Matrix& gain, const FrequencySweep& sweep) {
  return eta_hinf(closed_loop_of(plant, gain), gain, sweep);
}

std::string to_string(LmiKind kind) { return kind == LmiKind::stability ? "stability" : "privacy"; }

Matrix stability_lmi_matrix(const PlantModel& plant, std::span<const double> q, const Matrix& scaled_gain,
                            double gamma) {
  check_scaled_gain(plant, scaled_gain);
  if (q.size() != plant.n()) throw Error(ErrorCode::dimension_mismatch, "Q size must equal the state dimension");
  Matrix qd = abs(scale_rows(q, plant.a) - scaled_gain * plant.c);
  Matrix qb = hstack(scale_rows(q, abs(plant.w)), abs(scaled_gain * plant.v));
  return assemble(q, qd, qb, gamma);
}

Matrix privacy_lmi_matrix(const PlantModel& plant, std::span<const double> q, const Matrix& scaled_gain,
                          double eta) {
  check_scaled_gain(plant, scaled_gain);
  if (q.size() != plant.n()) throw Error(ErrorCode::dimension_mismatch, "Q size must equal the state dimension");
  Matrix qd = scale_rows(q, plant.a) - scaled_gain * plant.c;
  return assemble(q, qd, scaled_gain, eta);
}

LmiReport check_stability_lmi(const PlantModel& plant, const Matrix& q, const Matrix& scaled_gain, double gamma,
                              double margin) {
  Vector d = diagonal_of(q, plant.n());
  Matrix lmi = stability_lmi_matrix(plant, d, scaled_gain, gamma);
  return make_report(LmiKind::stability, gamma, lmi, std::move(d), scaled_gain, margin);
}

LmiReport check_privacy_lmi(const PlantModel& plant, const Matrix& q, const Matrix& scaled_gain, double eta,
                            double margin) {
  Vector d = diagonal_of(q, plant.n());
  Matrix lmi = privacy_lmi_matrix(plant, d, scaled_gain, eta);
  return make_report(LmiKind::privacy, eta, lmi, std::move(d), scaled_gain, margin);
}

LmiReport find_certificate(const PlantModel& plant, const Matrix& gain, LmiKind which, double level,
                           const CertificateOptions& options) {
  if (!std::isfinite(level)) throw Error(ErrorCode::invalid_argument, "certificate level must be finite");
  const LmiParts parts = lmi_parts(plant, gain, which);
  const std::size_t n = plant.n();

  Vector q(n, 1.0);
  q = scaled(q, best_scale(parts, q, level));
  Evaluation cur = evaluate(parts, q, level);
  Vector best_q = q;
  double best = cur.value;
  const double c = std::abs(best) + 1e-3;
  std::size_t used = 0;
  for (std::size_t t = 1; t <= options.iterations && best <= options.margin; ++t) {
    used = t;
    Vector g = subgradient(parts, cur.vec);
    double gn = norm2(g);
    if (gn == 0.0) break;
    double step = c / std::sqrt(static_cast<double>(t));
    for (std::size_t i = 0; i < n; ++i) q[i] = std::max(q[i] + step * g[i] / gn, 1e-6);
    if (t % 10 == 0) q = scaled(q, best_scale(parts, q, level));
    cur = evaluate(parts, q, level);
    if (cur.value > best) {
      best = cur.value;
      best_q = q;
    }
  }

  Matrix qm = Matrix::diagonal(best_q);
  Matrix lt = qm * gain;
  LmiReport r = which == LmiKind::stability ? check_stability_lmi(plant, qm, lt, level, options.margin)
                                            : check_privacy_lmi(plant, qm, lt, level, options.margin);
  r.iterations = used;
  return r;
}

double privacy_constraint_lhs(const PlantModel& plant, double gamma, double eta, double alpha, double rho,
                              const PrivacyLhsOptions& options) {
  if (!(alpha > 0.0)) throw Error(ErrorCode::invalid_argument, "alpha must be positive");
  auto sv = [&](const Matrix& m) { return options.sigma_min ? sigma_min(m) : sigma_max(m); };
  Vector dl = concat(plant.delta_w(), scaled(plant.delta_v(), alpha));
  double width_term = sv(abs(plant.gamma)) * gamma * norm2(dl);
  if (options.literal_alpha) width_term *= alpha;
  return width_term + sv(plant.gamma) * eta * rho;
}

double privacy_constraint_lhs(const PlantModel& plant, const ObserverDesign& design, const PrivacyBudget& budget,
                              const PrivacyLhsOptions& options) {
  return privacy_constraint_lhs(plant, design.gamma, design.eta, design.alpha, budget.rho, options);
}

namespace {

struct AccuracyTerms {
  Matrix a_tilde;
  Vector steady;  // (I - A_tilde)^-1 W_tilde delta
};

AccuracyTerms accuracy_terms(const PlantModel& plant, const ObserverDesign& d, const char* label) {
  Matrix at = abs(closed_loop_of(plant, d.gain));
  require_stable_nonneg(at, label);
  Matrix wt = hstack(abs(plant.w), abs(d.gain * plant.v) * d.alpha);
  Vector delta = concat(plant.delta_w(), plant.delta_v());
  Vector drive = wt * delta;
  Matrix col(drive.size(), 1);
  for (std::size_t i = 0; i < drive.size(); ++i) col(i, 0) = drive[i];
  Matrix sol = solve(Matrix::identity(at.rows()) - at, col);
  Vector steady(sol.rows());
  for (std::size_t i = 0; i < steady.size(); ++i) steady[i] = sol(i, 0);
  return {std::move(at), std::move(steady)};
}

double released_gap(const Matrix& abs_gamma, const Vector& a_np, const Vector& a_gp) {
  return norm_inf(abs_gamma * sub(a_np, a_gp));
}

}  // namespace

double accuracy_error(const PlantModel& plant, const ObserverDesign& np, const ObserverDesign& gp, std::size_t k) {
  AccuracyTerms tn = accuracy_terms(plant, np, "non-private design");
  AccuracyTerms tg = accuracy_terms(plant, gp, "private design");
  Matrix pn = power(tn.a_tilde, k);
  Matrix pg = power(tg.a_tilde, k);
  Vector e0 = plant.x0.width();
  Vector xn = add(pn * e0, sub(tn.steady, pn * tn.steady));
  Vector xg = add(pg * e0, sub(tg.steady, pg * tg.steady));
  return released_gap(abs(plant.gamma), xn, xg);
}

double accuracy_steady(const PlantModel& plant, const ObserverDesign& np, const ObserverDesign& gp) {
  AccuracyTerms tn = accuracy_terms(plant, np, "non-private design");
  AccuracyTerms tg = accuracy_terms(plant, gp, "private design");
  return released_gap(abs(plant.gamma), tn.steady, tg.steady);
}

std::vector<double> accuracy_series(const PlantModel& plant, const ObserverDesign& np, const ObserverDesign& gp,
                                    std::size_t horizon) {
  AccuracyTerms tn = accuracy_terms(plant, np, "non-private design");
  AccuracyTerms tg = accuracy_terms(plant, gp, "private design");
  Matrix ag = abs(plant.gamma);
  Vector e0 = plant.x0.width();
  // Tracks A^k e0 and A^k s for each design.
  Vector ne = e0, ns = tn.steady, ge = e0, gs = tg.steady;
  std::vector<double> out;
  out.reserve(horizon);
  for (std::size_t k = 0; k < horizon; ++k) {
    Vector xn = add(ne, sub(tn.steady, ns));
    Vector xg = add(ge, sub(tg.steady, gs));
    out.push_back(released_gap(ag, xn, xg));
    ne = tn.a_tilde * ne;
    ns = tn.a_tilde * ns;
    ge = tg.a_tilde * ge;
    gs = tg.a_tilde * gs;
  }
  return out;
}

std::string format_lmi_report(const LmiReport& report) {
  std::ostringstream os;
  os << "inequality: " << to_string(report.which) << '\n';
  os << "level: " << format_double(report.level) << '\n';
  os << "min_eig: " << format_double(report.min_eig) << '\n';
  os << "feasible: " << (report.feasible ? "yes" : "no") << '\n';
  os << "iterations: " << report.iterations << '\n';
  os << "q:";
  for (double v : report.q) os << ' ' << format_double(v);
  os << '\n';
  return os.str();
}

}  // namespace gpobs
