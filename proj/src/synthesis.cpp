#include "gpobs/synthesis.hpp"

#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <sstream>

#include "gpobs/error.hpp"
#include "gpobs/format.hpp"
#include "gpobs/random.hpp"

namespace gpobs {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Lexicographic objective: tier 0 feasible (value gamma), 1 budget-infeasible
// (value residual), 2 unstable (value spectral radius), 3 pruned.
struct Score {
  int tier = 3;
  double value = kInf;
};

bool better(const Score& a, const Score& b) {
  return a.tier < b.tier || (a.tier == b.tier && a.value < b.value);
}

class Parameterization {
 public:
  Parameterization(const Matrix& mask, std::size_t n, std::size_t m) : n_(n), m_(m) {
    if (mask.rows() != n || mask.cols() != m) {
      throw Error(ErrorCode::dimension_mismatch,
                  "mask must be " + std::to_string(n) + "x" + std::to_string(m));
    }
    std::map<double, std::size_t> index;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < m; ++j) {
        double label = mask(i, j);
        if (!(label >= 0.0) || label != std::floor(label)) {
          throw Error(ErrorCode::invalid_argument, "mask entries must be nonnegative integers");
        }
        if (label == 0.0) continue;
        auto [it, inserted] = index.emplace(label, slots_.size());
        if (inserted) slots_.emplace_back();
        slots_[it->second].emplace_back(i, j);
      }
    }
  }

  std::size_t size() const { return slots_.size(); }

  Matrix gain(const Vector& p) const {
    Matrix l(n_, m_);
    for (std::size_t k = 0; k < slots_.size(); ++k)
      for (auto [i, j] : slots_[k]) l(i, j) = p[k];
    return l;
  }

  Vector project(const Matrix& l) const {
    Vector p(slots_.size(), 0.0);
    for (std::size_t k = 0; k < slots_.size(); ++k) {
      for (auto [i, j] : slots_[k]) p[k] += l(i, j);
      p[k] /= static_cast<double>(slots_[k].size());
    }
    return p;
  }

 private:
  std::size_t n_, m_;
  std::vector<std::vector<std::pair<std::size_t, std::size_t>>> slots_;
};

struct SearchRun {
  Vector p;
  Score score;
  std::size_t evaluations = 0;
};

using Objective = std::function<Score(const Vector&, const Score&)>;

SearchRun pattern_search(Vector p, const Objective& f, const SearchOptions& opt, std::size_t& sweep_counter,
                         std::vector<std::pair<std::size_t, double>>& history, double& best_recorded) {
  SearchRun run;
  run.score = f(p, Score{});
  run.evaluations = 1;
  auto record = [&](const Score& s) {
    if (s.tier == 0 && s.value < best_recorded) {
      best_recorded = s.value;
      history.emplace_back(sweep_counter, s.value);
    }
  };
  record(run.score);
  double step = opt.step_initial;
  std::size_t sweeps = 0;
  while (step >= opt.step_final && sweeps < opt.max_sweeps) {
    ++sweeps;
    ++sweep_counter;
    Score best_cand;
    Vector best_p;
    for (std::size_t k = 0; k < p.size(); ++k) {
      for (double sign : {1.0, -1.0}) {
        Vector cand = p;
        cand[k] += sign * step;
        Score s = f(cand, run.score);
        ++run.evaluations;
        if (best_p.empty() || better(s, best_cand)) {
          best_cand = s;
          best_p = std::move(cand);
        }
      }
    }
    if (!best_p.empty() && better(best_cand, run.score)) {
      p = std::move(best_p);
      run.score = best_cand;
      record(run.score);
    } else {
      step *= 0.5;
    }
  }
  run.p = std::move(p);
  return run;
}

std::vector<Matrix> start_gains(const PlantModel& plant, const SearchOptions& opt, const Parameterization& par) {
  const std::size_t n = plant.n();
  const std::size_t m = plant.m();
  std::vector<Matrix> starts;
  starts.emplace_back(n, m);
  Matrix diag(n, m);
  for (std::size_t i = 0; i < std::min(n, m); ++i) {
    double num = 0.0;
    double den = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      num += plant.a(i, j) * plant.c(i, j);
      den += plant.c(i, j) * plant.c(i, j);
    }
    diag(i, i) = den > 0.0 ? num / den : 0.0;
  }
  starts.push_back(diag);
  try {
    Matrix ct = plant.c.transposed();
    Matrix fit = (solve(plant.c * ct, plant.c * plant.a.transposed())).transposed();
    starts.push_back(fit);
  } catch (const Error&) {
  }
  for (const Matrix& g : opt.extra_starts) {
    if (g.rows() != n || g.cols() != m) throw Error(ErrorCode::dimension_mismatch, "extra start has wrong shape");
    starts.push_back(g);
  }
  CounterRng rng(opt.seed, streams::search);
  for (std::size_t s = 0; s < opt.random_starts; ++s) {
    Vector p(par.size());
    for (std::size_t k = 0; k < p.size(); ++k) p[k] = rng.uniform(s, k, -1.0, 1.0);
    starts.push_back(par.gain(p));
  }
  return starts;
}

struct GainLevels {
  double rho = 0.0;
  double gamma = 0.0;
};

// Stability tier and gamma_direct of a gain; rho >= 1 leaves gamma infinite.
GainLevels gain_levels(const PlantModel& plant, const Matrix& gain) {
  ErrorSystem es = build_error_system(plant, gain, 1.0);
  GainLevels g;
  g.rho = spectral_radius_nonneg(es.a_tilde);
  g.gamma = kInf;
  if (g.rho < 1.0) {
    try {
      g.gamma = sigma_max(solve(Matrix::identity(plant.n()) - es.a_tilde, es.lambda));
    } catch (const Error&) {
      g.gamma = kInf;
    }
  }
  return g;
}

double largest_feasible_alpha(const PlantModel& plant, double gamma, double eta, const PrivacyBudget& budget,
                              const SearchOptions& opt, bool& feasible) {
  const double bound = budget.bound();
  auto lhs = [&](double a) { return privacy_constraint_lhs(plant, gamma, eta, a, budget.rho, opt.lhs); };
  if (!(lhs(opt.alpha_min) <= bound)) {
    feasible = false;
    return opt.alpha_min;
  }
  feasible = true;
  if (lhs(opt.alpha_max) <= bound) return opt.alpha_max;
  double lo = std::log(opt.alpha_min);
  double hi = std::log(opt.alpha_max);
  for (int it = 0; it < 100 && hi - lo > 1e-14; ++it) {
    double mid = 0.5 * (lo + hi);
    if (lhs(std::exp(mid)) <= bound) lo = mid;
    else hi = mid;
  }
  return std::exp(lo);
}

struct Certified {
  ObserverDesign design;
  double gamma_direct = 0.0;
  double eta_direct = 0.0;
  double rho = 0.0;
  LmiReport stability;
  LmiReport privacy;
};

Certified certify_levels(const PlantModel& plant, const Matrix& gain, Provenance provenance,
                         const SearchOptions& opt) {
  Certified c;
  ErrorSystem es = build_error_system(plant, gain, 1.0);
  c.rho = spectral_radius_nonneg(es.a_tilde);
  if (!(c.rho < 1.0)) {
    throw Error(ErrorCode::unstable, "gain is not stabilizing: spectral radius of |A - LC| is " +
                                         format_double(c.rho));
  }
  c.gamma_direct = gamma_direct(es);
  c.eta_direct = eta_hinf(plant, gain);
  const double factor = 1.0 + opt.certificate_margin;
  c.stability = find_certificate(plant, gain, LmiKind::stability, c.gamma_direct * factor);
  double level = std::max(c.eta_direct * factor, 1e-6);
  for (int attempt = 0; attempt < 60; ++attempt) {
    c.privacy = find_certificate(plant, gain, LmiKind::privacy, level);
    if (c.privacy.feasible) break;
    level *= 1.25;
  }
  c.design.gain = gain;
  c.design.gamma = c.gamma_direct * factor;
  c.design.eta = c.privacy.level;
  c.design.certificate = c.stability.q;
  c.design.provenance = provenance;
  return c;
}

SynthesisResult assemble_result(const PlantModel& plant, Certified c, double alpha,
                                const std::optional<PrivacyBudget>& budget, const SearchOptions& opt) {
  SynthesisResult r;
  c.design.alpha = alpha;
  r.design = std::move(c.design);
  r.gamma_direct = c.gamma_direct;
  r.eta_direct = c.eta_direct;
  r.spectral_radius = c.rho;
  r.stability = std::move(c.stability);
  r.privacy = std::move(c.privacy);
  bool certs = r.stability.feasible && r.privacy.feasible;
  r.status = certs ? SynthesisStatus::certified : SynthesisStatus::uncertified;
  if (budget) {
    r.has_budget = true;
    r.budget_bound = budget->bound();
    r.budget_lhs = privacy_constraint_lhs(plant, r.design, *budget, opt.lhs);
    r.budget_residual = r.budget_lhs - r.budget_bound;
    if (r.budget_residual > 0.0) r.status = SynthesisStatus::infeasible_budget;
  }
  return r;
}

Parameterization make_parameterization(const PlantModel& plant, const SearchOptions& opt) {
  return Parameterization(opt.mask ? *opt.mask : unstructured_mask(plant.n(), plant.m()), plant.n(), plant.m());
}

[[noreturn]] void fail_unstable(double best_rho) {
  throw Error(ErrorCode::unstable, "no stabilizing gain found; best spectral radius of |A - LC| was " +
                                       format_double(best_rho));
}

}  // namespace

Matrix unstructured_mask(std::size_t n, std::size_t m) {
  Matrix mask(n, m);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) mask(i, j) = static_cast<double>(i * m + j + 1);
  return mask;
}

Matrix pattern_mask(const PlantModel& plant) {
  if (plant.n() != plant.m()) throw Error(ErrorCode::invalid_argument, "pattern mask needs as many outputs as states");
  const std::size_t n = plant.n();
  Matrix mask(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) mask(i, j) = i == j ? 1.0 : (plant.a(i, j) != 0.0 ? 2.0 : 3.0);
  return mask;
}

void SearchOptions::validate() const {
  if (max_sweeps < 1) throw Error(ErrorCode::invalid_argument, "iteration budget must be at least 1");
  if (!(alpha_min > 0.0) || !(alpha_min <= alpha_max) || !std::isfinite(alpha_max)) {
    throw Error(ErrorCode::invalid_argument, "alpha range must be positive and ordered");
  }
  if (!(step_initial > 0.0) || !(step_final > 0.0)) throw Error(ErrorCode::invalid_argument, "steps must be positive");
  if (!(certificate_margin > 0.0)) throw Error(ErrorCode::invalid_argument, "certificate margin must be positive");
}

std::string to_string(SynthesisStatus s) {
  switch (s) {
    case SynthesisStatus::certified: return "certified";
    case SynthesisStatus::uncertified: return "uncertified";
    case SynthesisStatus::infeasible_budget: return "infeasible-budget";
  }
  return "unknown";
}

SynthesisResult synth_nonprivate(const SynthesisProblem& problem) {
  const PlantModel& plant = problem.plant;
  const SearchOptions& opt = problem.options;
  if (problem.budget) throw Error(ErrorCode::invalid_argument, "non-private synthesis takes no privacy budget");
  plant.validate();
  opt.validate();
  Parameterization par = make_parameterization(plant, opt);

  Objective f = [&](const Vector& p, const Score&) {
    GainLevels g = gain_levels(plant, par.gain(p));
    return g.rho < 1.0 && std::isfinite(g.gamma) ? Score{0, g.gamma} : Score{2, g.rho};
  };

  std::vector<std::pair<std::size_t, double>> history;
  double recorded = kInf;
  std::size_t sweeps = 0;
  std::size_t evaluations = 0;
  SearchRun best;
  bool have = false;
  for (const Matrix& start : start_gains(plant, opt, par)) {
    SearchRun run = pattern_search(par.project(start), f, opt, sweeps, history, recorded);
    evaluations += run.evaluations;
    if (!have || better(run.score, best.score)) {
      best = std::move(run);
      have = true;
    }
  }
  if (best.score.tier != 0) fail_unstable(best.score.value);

  Certified c = certify_levels(plant, par.gain(best.p), Provenance::non_private, opt);
  SynthesisResult r = assemble_result(plant, std::move(c), 1.0, std::nullopt, opt);
  r.history = std::move(history);
  r.evaluations = evaluations;
  return r;
}

SynthesisResult synth_private(const SynthesisProblem& problem) {
  const PlantModel& plant = problem.plant;
  const SearchOptions& opt = problem.options;
  if (!problem.budget) throw Error(ErrorCode::invalid_argument, "private synthesis needs a privacy budget");
  const PrivacyBudget& budget = *problem.budget;
  plant.validate();
  opt.validate();
  if (!(budget.bound() > 0.0)) throw Error(ErrorCode::invalid_argument, "budget bound exp(-epsilon) delta must be positive");
  Parameterization par = make_parameterization(plant, opt);
  const double factor = 1.0 + opt.certificate_margin;
  const double bound = budget.bound();

  Objective f = [&](const Vector& p, const Score& current) {
    Matrix gain = par.gain(p);
    GainLevels g = gain_levels(plant, gain);
    if (!(g.rho < 1.0) || !std::isfinite(g.gamma)) return Score{2, g.rho};
    if (current.tier == 0 && g.gamma >= current.value) return Score{3, kInf};
    double eta = eta_hinf(plant, gain) * factor;
    double lhs = privacy_constraint_lhs(plant, g.gamma * factor, eta, opt.alpha_min, budget.rho, opt.lhs);
    return lhs <= bound ? Score{0, g.gamma} : Score{1, lhs - bound};
  };

  std::vector<std::pair<std::size_t, double>> history;
  double recorded = kInf;
  std::size_t sweeps = 0;
  std::size_t evaluations = 0;
  SearchRun best;
  bool have = false;
  for (const Matrix& start : start_gains(plant, opt, par)) {
    SearchRun run = pattern_search(par.project(start), f, opt, sweeps, history, recorded);
    evaluations += run.evaluations;
    if (!have || better(run.score, best.score)) {
      best = std::move(run);
      have = true;
    }
  }
  if (best.score.tier >= 2) fail_unstable(best.score.value);

  Certified c = certify_levels(plant, par.gain(best.p), Provenance::synthesized, opt);
  bool feasible = false;
  double alpha = largest_feasible_alpha(plant, c.design.gamma, c.design.eta, budget, opt, feasible);
  SynthesisResult r = assemble_result(plant, std::move(c), alpha, budget, opt);
  r.history = std::move(history);
  r.evaluations = evaluations;
  return r;
}

SynthesisResult certify_design(const PlantModel& plant, const Matrix& gain, double alpha, Provenance provenance,
                               const std::optional<PrivacyBudget>& budget, const SearchOptions& options) {
  plant.validate();
  if (gain.rows() != plant.n() || gain.cols() != plant.m()) {
    throw Error(ErrorCode::dimension_mismatch,
                "gain must be " + std::to_string(plant.n()) + "x" + std::to_string(plant.m()));
  }
  if (!(alpha > 0.0) || !std::isfinite(alpha)) throw Error(ErrorCode::invalid_argument, "alpha must be positive");
  Certified c = certify_levels(plant, gain, provenance, options);
  SynthesisResult r = assemble_result(plant, std::move(c), alpha, budget, options);
  r.evaluations = 1;
  return r;
}

ObserverDesign load_fixture_design(const PlantModel& plant, const Matrix& gain, double alpha) {
  return certify_design(plant, gain, alpha, Provenance::loaded_fixture).design;
}

DeltaSearch minimal_feasible_delta(const SynthesisProblem& problem, double rel_tol) {
  if (!problem.budget) throw Error(ErrorCode::invalid_argument, "delta search needs a privacy budget");
  if (!(rel_tol > 0.0)) throw Error(ErrorCode::invalid_argument, "relative tolerance must be positive");
  SynthesisProblem p = problem;
  const double eps = problem.budget->epsilon;
  const double rho = problem.budget->rho;
  DeltaSearch out;
  auto attempt = [&](double delta) {
    p.budget = PrivacyBudget(eps, delta, rho);
    ++out.solves;
    return synth_private(p);
  };

  double hi = problem.budget->delta > 0.0 ? problem.budget->delta : 1.0;
  double lo = 0.0;
  SynthesisResult at_hi = attempt(hi);
  for (int grow = 0; at_hi.status != SynthesisStatus::certified; ++grow) {
    if (grow >= 80) throw Error(ErrorCode::unstable, "no certified design found for any delta tried");
    lo = hi;
    // exp(eps) times the smallest lhs reached is where that design becomes admissible.
    if (grow == 0 && at_hi.status == SynthesisStatus::infeasible_budget) {
      hi = std::max(std::exp(eps) * at_hi.budget_lhs * (1.0 + 0.5 * rel_tol), hi * (1.0 + rel_tol));
    } else {
      hi *= 2.0;
    }
    at_hi = attempt(hi);
  }
  if (lo > 0.0 && hi - lo > rel_tol * hi) {
    double probe = hi / (1.0 + rel_tol);
    if (probe > lo) {
      SynthesisResult r = attempt(probe);
      if (r.status == SynthesisStatus::certified) {
        hi = probe;
        at_hi = std::move(r);
      } else {
        lo = probe;
      }
    }
  }
  while (hi - lo > rel_tol * hi) {
    double mid = 0.5 * (lo + hi);
    SynthesisResult r = attempt(mid);
    if (r.status == SynthesisStatus::certified) {
      hi = mid;
      at_hi = std::move(r);
    } else {
      lo = mid;
    }
  }
  out.delta = hi;
  out.result = std::move(at_hi);
  return out;
}

std::string format_synthesis_report(const SynthesisResult& r) {
  std::ostringstream os;
  const ObserverDesign& d = r.design;
  os << "status: " << to_string(r.status) << '\n';
  os << "provenance: " << to_string(d.provenance) << '\n';
  os << "gamma: " << format_double(d.gamma) << '\n';
  os << "gamma_direct: " << format_double(r.gamma_direct) << '\n';
  os << "eta: " << format_double(d.eta) << '\n';
  os << "eta_direct: " << format_double(r.eta_direct) << '\n';
  os << "alpha: " << format_double(d.alpha) << '\n';
  os << "beta: " << format_double(d.beta()) << '\n';
  os << "spectral_radius: " << format_double(r.spectral_radius) << '\n';
  if (r.has_budget) {
    os << "budget_bound: " << format_double(r.budget_bound) << '\n';
    os << "budget_lhs: " << format_double(r.budget_lhs) << '\n';
    os << "budget_residual: " << format_double(r.budget_residual) << '\n';
  }
  os << "stability_min_eig: " << format_double(r.stability.min_eig) << '\n';
  os << "stability_feasible: " << (r.stability.feasible ? "yes" : "no") << '\n';
  os << "privacy_level: " << format_double(r.privacy.level) << '\n';
  os << "privacy_min_eig: " << format_double(r.privacy.min_eig) << '\n';
  os << "privacy_feasible: " << (r.privacy.feasible ? "yes" : "no") << '\n';
  os << "evaluations: " << r.evaluations << '\n';
  os << "certificate:";
  for (double q : d.certificate) os << ' ' << format_double(q);
  os << '\n';
  for (std::size_t i = 0; i < d.gain.rows(); ++i) {
    os << "gain_row_" << (i + 1) << ':';
    for (double v : d.gain.row(i)) os << ' ' << format_double(v);
    os << '\n';
  }
  for (const auto& [sweep, g] : r.history) os << "history: " << sweep << ' ' << format_double(g) << '\n';
  return os.str();
}

}  // namespace gpobs
