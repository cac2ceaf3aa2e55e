#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "gpobs/error.hpp"
#include "gpobs/hinf.hpp"
#include "gpobs/observer.hpp"
#include "gpobs/privacy.hpp"
#include "gpobs/synthesis.hpp"
#include "oracles.hpp"
#include "support.hpp"

namespace fs = std::filesystem;
using gpobs::LmiKind;
using gpobs::Matrix;

namespace tol {
constexpr double slack = -1e-9;
constexpr double soundness_seconds = 10.0;
constexpr double width_match = 1e-12;
constexpr double lmi_fixture = 0.02;
constexpr double lmi_random = 0.05;
constexpr double lmi_bisection = 1e-3;
constexpr double eta_match = 1e-5;
constexpr std::size_t eta_grid_points = 100000;
constexpr double synth_gamma_target = 0.883;
constexpr double synth_seconds = 300.0;
constexpr double scalar_optimality = 0.01;
constexpr double scalar_grid_step = 1e-4;
constexpr double accuracy_match = 1e-8;
constexpr double monotone_slack = 1e-12;
constexpr std::size_t transient_limit = 60;
}  // namespace tol

namespace {

struct Outcome {
  bool pass;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string num(double x) {
  std::ostringstream s;
  s.precision(6);
  s << x;
  return s.str();
}

double worst_slack(const gpobs::FramerTrajectory& t) {
  double worst = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < t.horizon(); ++k) {
    for (std::size_t i = 0; i < t.x_true[k].size(); ++i)
      worst = std::min({worst, t.x_true[k][i] - t.x_lo[k][i], t.x_hi[k][i] - t.x_true[k][i]});
    for (std::size_t i = 0; i < t.z_true[k].size(); ++i)
      worst = std::min({worst, t.z_true[k][i] - t.z_lo[k][i], t.z_hi[k][i] - t.z_true[k][i]});
  }
  return worst;
}

gpobs::SynthesisProblem market_np_problem(const gpobs::Scenario& sc) {
  gpobs::SynthesisProblem prob;
  prob.plant = sc.plant;
  prob.options.mask = sc.mask;
  return prob;
}

Outcome framer_soundness() {
  const auto sc = support::market();
  const auto design = gpobs::make_design(sc.fixture->gain, 1.364);
  const auto t0 = Clock::now();
  double worst = std::numeric_limits<double>::infinity();
  for (std::uint64_t seed = 0; seed < 500; ++seed)
    worst = std::min(worst, worst_slack(gpobs::simulate(sc.plant, design, 100, seed)));
  const double elapsed = seconds_since(t0);
  return {worst >= tol::slack && elapsed < tol::soundness_seconds,
          "500 runs, worst slack " + num(worst) + ", " + num(elapsed) + " s"};
}

Outcome width_recursion() {
  std::mt19937_64 gen(2024);
  double worst = 0.0;
  for (int t = 0; t < 100; ++t) {
    const std::size_t n = 1 + t % 4;
    const auto inst = support::random_stable_instance(gen, n, 1 + (t / 4) % n);
    const double alpha = 0.5 + 0.1 * (t % 11);
    const auto traj = gpobs::simulate(inst.plant, gpobs::make_design(inst.gain, alpha), 50, 7000 + t);
    const auto ref = oracle::width_sequence(inst.plant, inst.gain, alpha, 50);
    for (std::size_t k = 0; k < 50; ++k) {
      const auto w = traj.x_width(k);
      for (std::size_t i = 0; i < n; ++i) worst = std::max(worst, std::abs(w[i] - ref[k][i]));
    }
  }
  return {worst <= tol::width_match, "100 instances, max |width - recursion| " + num(worst)};
}

struct Bisection {
  double level;
  bool below_direct_feasible;
  bool oracle_confirms;
};

Bisection bisect_lmi_gamma(const gpobs::PlantModel& plant, const Matrix& gain, double gd) {
  Bisection b{0.0, false, false};
  auto feasible = [&](double level) {
    const auto rep = gpobs::find_certificate(plant, gain, LmiKind::stability, level);
    if (rep.feasible && level < gd) b.below_direct_feasible = true;
    return rep;
  };
  double lo = 0.5 * gd, hi = 1.01 * gd;
  while (!feasible(hi).feasible) {
    lo = hi;
    hi *= 1.5;
    if (hi > 100 * gd) return b;
  }
  if (feasible(lo).feasible) return b;
  while ((hi - lo) > tol::lmi_bisection * hi) {
    const double mid = 0.5 * (lo + hi);
    (feasible(mid).feasible ? hi : lo) = mid;
  }
  const auto rep = feasible(hi);
  const auto lmi = gpobs::stability_lmi_matrix(plant, rep.q, rep.scaled_gain, hi);
  b.oracle_confirms = oracle::sym_min_eig_bisect(oracle::to_dense(lmi)) > 0.0;
  b.level = hi;
  return b;
}

Outcome lmi_cross_validation() {
  bool ok = true;
  const auto sc = support::market();
  const double gd_fixture = gpobs::gamma_direct(gpobs::build_error_system(sc.plant, sc.fixture->gain, 1.0));
  const auto fb = bisect_lmi_gamma(sc.plant, sc.fixture->gain, gd_fixture);
  const double fixture_rel = fb.level / gd_fixture - 1.0;
  ok = ok && fb.oracle_confirms && !fb.below_direct_feasible && fixture_rel >= 0.0 && fixture_rel <= tol::lmi_fixture;

  std::mt19937_64 gen(77);
  double worst_rel = 0.0;
  std::size_t misses = 0;
  for (int t = 0; t < 50; ++t) {
    const std::size_t n = 1 + t % 4;
    const auto inst = support::random_stable_instance(gen, n, 1 + (t / 4) % n);
    const double gd = gpobs::gamma_direct(gpobs::build_error_system(inst.plant, inst.gain, 1.0));
    const auto b = bisect_lmi_gamma(inst.plant, inst.gain, gd);
    const double rel = b.level / gd - 1.0;
    worst_rel = std::max(worst_rel, rel);
    if (!b.oracle_confirms || b.below_direct_feasible || rel < 0.0 || rel > tol::lmi_random) ++misses;
  }
  ok = ok && misses == 0;
  return {ok, "fixture LMI/direct - 1 = " + num(fixture_rel) + ", random worst " + num(worst_rel) + ", misses " +
                  std::to_string(misses)};
}

Outcome eta_cross_validation() {
  std::mt19937_64 gen(99);
  double worst = 0.0;
  for (int t = 0; t < 50; ++t) {
    const auto inst = support::random_stable_instance(gen, 3, 1 + t % 3);
    const Matrix f = inst.plant.a - inst.gain * inst.plant.c;
    const double eta = gpobs::eta_hinf(f, inst.gain);
    const double grid = oracle::eta_dense_grid(oracle::to_dense(f), oracle::to_dense(inst.gain), tol::eta_grid_points);
    worst = std::max(worst, std::abs(eta - grid) / std::max(1.0, grid));
  }
  return {worst <= tol::eta_match, "50 loops, max relative gap " + num(worst)};
}

Outcome nonprivate_synthesis() {
  const auto sc = support::market();
  const auto t0 = Clock::now();
  const auto r = gpobs::synth_nonprivate(market_np_problem(sc));
  const double elapsed = seconds_since(t0);
  std::string gains;
  const std::pair<const char*, std::size_t> entries[] = {{"l1", 0}, {"l2", 1}, {"l0", 2}};
  for (const auto& [label, j] : entries)
    gains += std::string(" ") + label + " " + num(r.design.gain(0, j)) + " (fixture " + num(sc.fixture->gain(0, j)) + ")";
  return {r.design.gamma <= tol::synth_gamma_target && elapsed < tol::synth_seconds,
          "gamma " + num(r.design.gamma) + " (direct " + num(r.gamma_direct) + ", target " +
              num(tol::synth_gamma_target) + "), " + num(elapsed) + " s," + gains};
}

Outcome scalar_optimality() {
  std::mt19937_64 gen(606);
  std::uniform_real_distribution<double> ua(-1.5, 1.5), uc(0.5, 2.0), uw(0.1, 2.0);
  std::bernoulli_distribution sign(0.5);
  double worst = 0.0;
  for (int t = 0; t < 50; ++t) {
    const oracle::Scalar s{ua(gen), (sign(gen) ? -1.0 : 1.0) * uc(gen), uw(gen), uw(gen)};
    gpobs::SynthesisProblem prob;
    prob.plant = support::scalar_plant(s.a, s.c, s.w, s.v, 1.0, 1.0);
    const auto r = gpobs::synth_nonprivate(prob);
    const auto [grid, arg] = oracle::scalar_gamma_grid(s, -5.0, 5.0, tol::scalar_grid_step);
    worst = std::max(worst, std::abs(r.gamma_direct - grid) / grid);
  }
  return {worst <= tol::scalar_optimality, "50 plants, max relative gap to grid " + num(worst)};
}

Outcome guaranteed_privacy() {
  const auto sc = gpobs::load_scenario(support::data_path("scalar.cfg"));
  std::vector<gpobs::PlantModel> family{sc.plant};
  for (double a : {-0.4, 0.8}) {
    auto p = sc.plant;
    p.a = Matrix{{a}};
    family.push_back(p);
  }
  std::size_t violations = 0, pairs = 0;
  double worst_ratio = 0.0;
  bool all_certified = true;
  for (std::size_t i = 0; i < family.size(); ++i) {
    gpobs::SynthesisProblem prob;
    prob.plant = family[i];
    prob.budget = sc.budget;
    const auto found = gpobs::minimal_feasible_delta(prob, 1e-3);
    if (found.result.status != gpobs::SynthesisStatus::certified) {
      all_certified = false;
      continue;
    }
    const gpobs::PrivacyBudget tight(sc.budget->epsilon, found.delta, sc.budget->rho);
    gpobs::AuditOptions o;
    o.pairs = 1000;
    o.horizon = 100;
    o.seed = 11 + i;
    o.mode = gpobs::AdjacencyMode::boundary;
    const auto rep = gpobs::audit_guaranteed(family[i], found.result.design, tight, o);
    violations += rep.violations;
    pairs += o.pairs;
    worst_ratio = std::max(worst_ratio, rep.worst / tight.delta);
  }
  const auto market = support::market();
  const auto fixture = gpobs::load_fixture_design(market.plant, market.fixture->gain, market.fixture->alpha);
  const double residual = gpobs::privacy_constraint_lhs(market.plant, fixture, *market.budget) - market.budget->bound();
  return {all_certified && violations == 0,
          std::to_string(pairs) + " boundary pairs, " + std::to_string(violations) +
              " violations, worst e^eps*dist/delta " + num(worst_ratio) + "; market fixture budget residual " +
              num(residual)};
}

Outcome accuracy_analysis() {
  const auto sc = support::market();
  const auto np = gpobs::synth_nonprivate(market_np_problem(sc)).design;
  const auto gp = gpobs::load_fixture_design(sc.plant, sc.fixture->gain, sc.fixture->alpha);
  const auto series = gpobs::accuracy_series(sc.plant, np, gp, 101);
  const auto znp = oracle::output_widths(sc.plant, oracle::width_sequence(sc.plant, np.gain, np.alpha, 101));
  const auto zgp = oracle::output_widths(sc.plant, oracle::width_sequence(sc.plant, gp.gain, gp.alpha, 101));
  double mismatch = 0.0;
  for (std::size_t k = 0; k <= 100; ++k) {
    double ref = 0.0;
    for (std::size_t i = 0; i < znp[k].size(); ++i) ref = std::max(ref, std::abs(znp[k][i] - zgp[k][i]));
    mismatch = std::max(mismatch, std::abs(series[k] - ref));
  }
  const double steady = gpobs::accuracy_steady(sc.plant, np, gp);
  std::size_t settle = 0;
  for (std::size_t k = 1; k <= 100; ++k)
    if (std::abs(series[k] - steady) > std::abs(series[k - 1] - steady) + tol::monotone_slack) settle = k;
  const bool ok = mismatch <= tol::accuracy_match && std::isfinite(steady) && steady > 0.0 &&
                  settle <= tol::transient_limit;
  return {ok, "max mismatch " + num(mismatch) + ", steady " + num(steady) + ", monotone from k = " +
                  std::to_string(settle) + ", |eps_100 - steady| " + num(std::abs(series[100] - steady))};
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string("\"") + GPOBS_CLI_PATH + "\" " + args + " > /dev/null 2>&1";
  const int raw = std::system(cmd.c_str());
  return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("gpobs_accept_" + name + "_" + std::to_string(::getpid()));
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Outcome figure_ordering() {
  const auto dir = scratch("fig");
  const int code = run_cli("reproduce --out \"" + dir.string() + "\"");
  if (code != 0) return {false, "reproduce exited with " + std::to_string(code)};
  std::ifstream in(dir / "fig1_widths.csv");
  std::string line;
  std::getline(in, line);
  if (line != "k,np,gp,dp") return {false, "unexpected header " + line};
  double np = 0, gp = 0, dp = 0;
  bool found = false;
  while (std::getline(in, line)) {
    std::istringstream row(line);
    std::string k, a, b, c;
    std::getline(row, k, ',');
    std::getline(row, a, ',');
    std::getline(row, b, ',');
    std::getline(row, c, ',');
    if (k == "100") {
      np = std::stod(a);
      gp = std::stod(b);
      dp = std::stod(c);
      found = true;
    }
  }
  fs::remove_all(dir);
  return {found && np <= gp && gp < dp, "k = 100 widths np " + num(np) + " gp " + num(gp) + " dp " + num(dp)};
}

Outcome determinism() {
  const auto a = scratch("det_a"), b = scratch("det_b");
  const int ca = run_cli("reproduce --seed 1 --out \"" + a.string() + "\"");
  const int cb = run_cli("reproduce --seed 1 --out \"" + b.string() + "\"");
  if (ca != 0 || cb != 0) return {false, "reproduce exited with " + std::to_string(ca) + "/" + std::to_string(cb)};
  std::size_t files = 0, differing = 0;
  for (const auto& entry : fs::directory_iterator(a)) {
    if (entry.path().extension() != ".csv") continue;
    ++files;
    const fs::path other = b / entry.path().filename();
    if (!fs::exists(other) || slurp(entry.path()) != slurp(other)) ++differing;
  }
  fs::remove_all(a);
  fs::remove_all(b);
  return {files > 0 && differing == 0, std::to_string(files) + " CSV files, " + std::to_string(differing) + " differ"};
}

struct Criterion {
  const char* name;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> criteria{
      {"framer soundness", framer_soundness},
      {"width recursion equivalence", width_recursion},
      {"LMI gamma cross-validation", lmi_cross_validation},
      {"eta cross-validation", eta_cross_validation},
      {"non-private market synthesis", nonprivate_synthesis},
      {"scalar optimality", scalar_optimality},
      {"guaranteed privacy audit", guaranteed_privacy},
      {"accuracy closed form", accuracy_analysis},
      {"figure width ordering", figure_ordering},
      {"reproduce determinism", determinism},
  };
  std::size_t first = 1, last = criteria.size();
  if (argc > 1) {
    first = last = std::strtoul(argv[1], nullptr, 10);
    if (first < 1 || first > criteria.size()) {
      std::cerr << "usage: acceptance [1-" << criteria.size() << "]\n";
      return 2;
    }
  }
  int failures = 0;
  for (std::size_t i = first; i <= last; ++i) {
    Outcome o;
    try {
      o = criteria[i - 1].run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << i << " (" << criteria[i - 1].name << "): " << o.detail
              << std::endl;
    if (!o.pass) ++failures;
  }
  return failures == 0 ? 0 : 1;
}
