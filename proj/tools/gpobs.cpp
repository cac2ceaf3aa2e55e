#include <openssl/evp.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "gpobs/gpobs.h"

#ifndef GPOBS_DATA_DIR
#define GPOBS_DATA_DIR "data"
#endif

namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitViolation = 3;
constexpr int kExitNumeric = 4;

constexpr double kReferenceGamma = 0.865;
constexpr double kReferenceAlpha = 1.364;
constexpr double kAccuracyTolerance = 1e-8;

struct Failure : std::runtime_error {
  Failure(int code_, const std::string& msg) : std::runtime_error(msg), code(code_) {}
  int code;
};

int exit_for(gpobs_status s) {
  switch (s) {
    case GPOBS_ERR_INVALID_ARGUMENT:
    case GPOBS_ERR_DIMENSION:
    case GPOBS_ERR_PARSE:
    case GPOBS_ERR_IO: return kExitUsage;
    default: return kExitNumeric;
  }
}

void check(gpobs_status s, const std::string& context) {
  if (s != GPOBS_OK) throw Failure(exit_for(s), context + ": " + gpobs_last_error());
}

template <class T, void (*Free)(T*)>
struct Deleter {
  void operator()(T* p) const { Free(p); }
};

using Scenario = std::unique_ptr<gpobs_scenario, Deleter<gpobs_scenario, gpobs_scenario_free>>;
using Design = std::unique_ptr<gpobs_design, Deleter<gpobs_design, gpobs_design_free>>;
using SynthResult = std::unique_ptr<gpobs_synth_result, Deleter<gpobs_synth_result, gpobs_synth_result_free>>;
using Trajectory = std::unique_ptr<gpobs_trajectory, Deleter<gpobs_trajectory, gpobs_trajectory_free>>;
using AuditReport = std::unique_ptr<gpobs_audit_report, Deleter<gpobs_audit_report, gpobs_audit_report_free>>;
using Accuracy = std::unique_ptr<gpobs_accuracy, Deleter<gpobs_accuracy, gpobs_accuracy_free>>;

std::string take(char* text) {
  std::string s(text ? text : "");
  gpobs_string_free(text);
  return s;
}

std::string fmt(double v) {
  if (v == 0.0) return "0";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string sha256_hex(const std::string& data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw Failure(kExitNumeric, "sha256 failed");
  }
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[digest[i] >> 4];
    out += hex[digest[i] & 15];
  }
  return out;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Failure(kExitUsage, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path default_out(const std::string& command) {
  const char* root = std::getenv("GPOBS_OUT_DIR");
  return fs::path(root && *root ? root : "gpobs-out") / command;
}

/// Output directory that records every file with its checksum for the manifest.
class Outputs {
 public:
  explicit Outputs(fs::path dir) : dir_(fs::absolute(std::move(dir)).lexically_normal()) {
    std::error_code ec;
    fs::create_directories(dir_, ec);
    if (ec) throw Failure(kExitUsage, "cannot create output directory " + dir_.string() + ": " + ec.message());
  }

  const fs::path& dir() const { return dir_; }

  void write(const std::string& name, const std::string& content) {
    std::ofstream out(dir_ / name, std::ios::binary | std::ios::trunc);
    if (!out) throw Failure(kExitUsage, "cannot write " + (dir_ / name).string());
    out << content;
    files_.emplace_back(name, sha256_hex(content));
  }

  void manifest(const std::string& command, const std::vector<std::string>& args,
                const std::vector<std::pair<std::string, std::string>>& fields) {
    std::ostringstream m;
    m << "tool: gpobs\n";
    m << "version: " << gpobs_version() << '\n';
    m << "command: " << command << '\n';
    for (const auto& [k, v] : fields) m << k << ": " << v << '\n';
    m << "output_dir: " << dir_.string() << '\n';
    for (const std::string& a : args) m << "arg: " << a << '\n';
    for (const auto& [name, sum] : files_) m << "file: " << name << ' ' << sum << '\n';
    std::ofstream out(dir_ / "manifest.txt", std::ios::binary | std::ios::trunc);
    if (!out) throw Failure(kExitUsage, "cannot write manifest");
    out << m.str();
  }

 private:
  fs::path dir_;
  std::vector<std::pair<std::string, std::string>> files_;
};

Scenario load(const std::string& path) {
  if (!fs::exists(path)) throw Failure(kExitUsage, "scenario file not found: " + path);
  gpobs_scenario* s = nullptr;
  check(gpobs_scenario_load(path.c_str(), &s), "loading " + path);
  return Scenario(s);
}

gpobs_mask_mode parse_mask(const std::string& text) {
  if (text == "none") return GPOBS_MASK_NONE;
  if (text == "pattern") return GPOBS_MASK_PATTERN;
  if (text == "scenario") return GPOBS_MASK_SCENARIO;
  throw Failure(kExitUsage, "unknown mask '" + text + "' (expected none, pattern or scenario)");
}

struct SynthFlags {
  bool private_mode = false;
  std::string mask = "scenario";
  std::size_t iters = 20000;
  std::optional<std::uint64_t> seed;
  std::size_t starts = 0;
  bool sigma_min = false;
  bool literal_alpha = false;

  gpobs_synth_options options(const gpobs_scenario* sc, bool want_private) const {
    gpobs_synth_options o;
    gpobs_synth_options_init(&o);
    o.private_mode = want_private ? 1 : 0;
    o.mask = parse_mask(mask);
    o.max_sweeps = iters;
    std::uint64_t scenario_seed = 0;
    check(gpobs_scenario_run(sc, nullptr, &scenario_seed), "scenario");
    o.seed = seed.value_or(scenario_seed);
    o.random_starts = starts;
    o.sigma_min = sigma_min ? 1 : 0;
    o.literal_alpha = literal_alpha ? 1 : 0;
    return o;
  }
};

SynthResult synthesize(const gpobs_scenario* sc, const gpobs_synth_options& o) {
  gpobs_synth_result* r = nullptr;
  check(gpobs_synthesize(sc, &o, &r), o.private_mode ? "private synthesis" : "non-private synthesis");
  return SynthResult(r);
}

gpobs_synth_summary summary_of(const gpobs_synth_result* r) {
  gpobs_synth_summary s;
  check(gpobs_synth_result_summary(r, &s), "synthesis summary");
  return s;
}

Design design_of(const gpobs_synth_result* r) {
  gpobs_design* d = nullptr;
  check(gpobs_synth_result_design(r, &d), "design");
  return Design(d);
}

/// paper-gain | np | gp | FILE
Design resolve_design(const gpobs_scenario* sc, const std::string& ref, const SynthFlags& flags) {
  gpobs_design* d = nullptr;
  if (ref == "paper-gain") {
    if (!gpobs_scenario_has_fixture(sc)) throw Failure(kExitUsage, "scenario has no gain block for 'paper-gain'");
    check(gpobs_design_from_fixture(sc, &d), "fixture design");
    return Design(d);
  }
  if (ref == "np" || ref == "gp") {
    SynthResult r = synthesize(sc, flags.options(sc, ref == "gp"));
    return design_of(r.get());
  }
  if (!fs::is_regular_file(ref)) {
    throw Failure(kExitUsage, "design '" + ref + "' is neither paper-gain, np, gp nor a readable file");
  }
  check(gpobs_design_load(sc, ref.c_str(), &d), "loading design " + ref);
  return Design(d);
}

std::string design_arg(const std::string& ref) {
  if (ref == "paper-gain" || ref == "np" || ref == "gp") return ref;
  return fs::absolute(ref).lexically_normal().string();
}

std::size_t scenario_horizon(const gpobs_scenario* sc, std::optional<std::size_t> h) {
  std::size_t horizon = 0;
  check(gpobs_scenario_run(sc, &horizon, nullptr), "scenario");
  return h.value_or(horizon);
}

std::uint64_t scenario_seed(const gpobs_scenario* sc, std::optional<std::uint64_t> s) {
  std::uint64_t seed = 0;
  check(gpobs_scenario_run(sc, nullptr, &seed), "scenario");
  return s.value_or(seed);
}

std::string abs_path(const std::string& p) { return fs::absolute(p).lexically_normal().string(); }

void add_synth_args(std::vector<std::string>& args, const SynthFlags& f) {
  args.insert(args.end(), {"--mask", f.mask, "--iters", std::to_string(f.iters), "--starts", std::to_string(f.starts)});
  if (f.seed) args.insert(args.end(), {"--seed", std::to_string(*f.seed)});
  if (f.sigma_min) args.push_back("--sigma-min");
  if (f.literal_alpha) args.push_back("--literal-alpha");
}

Trajectory simulate(const gpobs_scenario* sc, const gpobs_design* d, std::size_t horizon, std::uint64_t seed) {
  gpobs_trajectory* t = nullptr;
  check(gpobs_simulate(sc, d, horizon, seed, &t), "simulation");
  return Trajectory(t);
}

std::vector<double> released_widths(const gpobs_trajectory* t, std::size_t n_z) {
  std::vector<double> out;
  std::vector<double> lo(n_z), hi(n_z);
  for (std::size_t k = 0; k < gpobs_trajectory_length(t); ++k) {
    check(gpobs_trajectory_output(t, k, lo.data(), hi.data(), nullptr, n_z), "trajectory output");
    double w = 0.0;
    for (std::size_t i = 0; i < n_z; ++i) w = std::max(w, hi[i] - lo[i]);
    out.push_back(w);
  }
  return out;
}

// ---------------------------------------------------------------- commands

struct SynthCmd {
  std::string scenario;
  bool nonprivate = false;
  SynthFlags flags;
  std::string out;
};

int run_synth(const SynthCmd& c) {
  Scenario sc = load(c.scenario);
  Outputs out(c.out.empty() ? default_out("synth") : fs::path(c.out));
  gpobs_synth_options o = c.flags.options(sc.get(), c.flags.private_mode);
  SynthResult r = synthesize(sc.get(), o);
  gpobs_synth_summary s = summary_of(r.get());
  Design d = design_of(r.get());
  std::string report = take([&] {
    char* t = nullptr;
    check(gpobs_synth_result_report(r.get(), &t), "report");
    return t;
  }());
  int has_budget = 0;
  check(gpobs_scenario_budget(sc.get(), &has_budget, nullptr, nullptr, nullptr), "budget");
  if (!c.flags.private_mode && has_budget) {
    double lhs = 0.0, bound = 0.0;
    check(gpobs_privacy_lhs(sc.get(), d.get(), o.sigma_min, o.literal_alpha, &lhs, &bound), "budget check");
    report += "scenario_budget_lhs: " + fmt(lhs) + "\nscenario_budget_bound: " + fmt(bound) +
              "\nscenario_budget_residual: " + fmt(lhs - bound) + '\n';
  }
  char* text = nullptr;
  check(gpobs_design_serialize(d.get(), &text), "design");
  out.write("design.cfg", take(text));
  out.write("synth_report.txt", report);

  std::vector<std::string> args = {"synth", abs_path(c.scenario), c.flags.private_mode ? "--private" : "--nonprivate"};
  add_synth_args(args, c.flags);
  args.insert(args.end(), {"--out", out.dir().string()});
  out.manifest("synth", args,
               {{"scenario", abs_path(c.scenario)}, {"seed", std::to_string(o.seed)}, {"status", gpobs_synth_status_name(s.status)}});
  std::cout << "status: " << gpobs_synth_status_name(s.status) << "\ngamma: " << fmt(s.gamma)
            << "\nalpha: " << fmt(s.alpha) << "\noutput: " << out.dir().string() << '\n';
  return kExitOk;
}

struct SimulateCmd {
  std::string scenario;
  std::string design;
  std::optional<std::size_t> horizon;
  std::size_t seeds = 1;
  std::optional<std::uint64_t> seed;
  SynthFlags flags;
  std::string out;
};

int run_simulate(const SimulateCmd& c) {
  Scenario sc = load(c.scenario);
  if (c.seeds == 0) throw Failure(kExitUsage, "--seeds must be at least 1");
  Design d = resolve_design(sc.get(), c.design, c.flags);
  Outputs out(c.out.empty() ? default_out("simulate") : fs::path(c.out));
  const std::size_t horizon = scenario_horizon(sc.get(), c.horizon);
  const std::uint64_t first = scenario_seed(sc.get(), c.seed);
  std::vector<std::pair<std::string, std::string>> fields = {
      {"scenario", abs_path(c.scenario)}, {"design", c.design}, {"seed", std::to_string(first)},
      {"horizon", std::to_string(horizon)}};
  bool all_ok = true;
  for (std::size_t i = 0; i < c.seeds; ++i) {
    const std::uint64_t seed = first + i;
    Trajectory t = simulate(sc.get(), d.get(), horizon, seed);
    char* csv = nullptr;
    check(gpobs_trajectory_csv(t.get(), &csv), "csv");
    out.write("trajectory_seed" + std::to_string(seed) + ".csv", take(csv));
    int ok = 0;
    double slack = 0.0;
    std::size_t step = 0;
    check(gpobs_trajectory_containment(t.get(), &ok, &slack, &step), "containment");
    fields.emplace_back("containment_seed" + std::to_string(seed),
                        std::string(ok ? "ok" : "violated") + " worst_slack " + fmt(slack) + " step " + std::to_string(step));
    all_ok = all_ok && ok;
  }
  std::vector<std::string> args = {"simulate", abs_path(c.scenario), "--design", design_arg(c.design),
                                   "--horizon", std::to_string(horizon), "--seeds", std::to_string(c.seeds),
                                   "--seed", std::to_string(first)};
  args.insert(args.end(), {"--mask", c.flags.mask});
  args.insert(args.end(), {"--out", out.dir().string()});
  out.manifest("simulate", args, fields);
  std::cout << "containment: " << (all_ok ? "ok" : "violated") << "\noutput: " << out.dir().string() << '\n';
  if (!all_ok) {
    std::cerr << "error: framer containment violated\n";
    return kExitNumeric;
  }
  return kExitOk;
}

struct AuditCmd {
  std::string scenario;
  std::string design;
  std::size_t pairs = 100;
  std::string mode = "boundary";
  std::size_t agent = 1;
  std::optional<std::size_t> horizon;
  std::optional<std::uint64_t> seed;
  SynthFlags flags;
  std::string out;
};

int run_audit(const AuditCmd& c) {
  if (c.pairs == 0) throw Failure(kExitUsage, "--pairs must be at least 1");
  if (c.agent == 0) throw Failure(kExitUsage, "--agent is 1-based");
  gpobs_adjacency mode;
  if (c.mode == "boundary") mode = GPOBS_ADJ_BOUNDARY;
  else if (c.mode == "interior") mode = GPOBS_ADJ_INTERIOR;
  else if (c.mode == "single-agent") mode = GPOBS_ADJ_SINGLE_AGENT;
  else throw Failure(kExitUsage, "unknown --mode '" + c.mode + "'");
  Scenario sc = load(c.scenario);
  int has_budget = 0;
  check(gpobs_scenario_budget(sc.get(), &has_budget, nullptr, nullptr, nullptr), "budget");
  if (!has_budget) throw Failure(kExitUsage, "scenario needs epsilon, delta and rho for an audit");
  Design d = resolve_design(sc.get(), c.design, c.flags);
  Outputs out(c.out.empty() ? default_out("audit") : fs::path(c.out));

  gpobs_audit_options o;
  gpobs_audit_options_init(&o);
  o.pairs = c.pairs;
  o.horizon = scenario_horizon(sc.get(), c.horizon);
  o.seed = scenario_seed(sc.get(), c.seed);
  o.mode = mode;
  o.agent = c.agent - 1;
  gpobs_audit_report* raw = nullptr;
  check(gpobs_audit(sc.get(), d.get(), &o, &raw), "audit");
  AuditReport rep(raw);
  std::size_t violations = 0;
  double worst = 0.0;
  int exact = 1;
  check(gpobs_audit_report_summary(rep.get(), &violations, &worst, &exact), "audit summary");

  char* text = nullptr;
  check(gpobs_audit_report_text(rep.get(), &text), "audit report");
  std::string report = take(text);
  double lhs = 0.0, bound = 0.0;
  check(gpobs_privacy_lhs(sc.get(), d.get(), 0, 0, &lhs, &bound), "budget check");
  gpobs_design_info info;
  check(gpobs_design_info_get(d.get(), &info), "design info");
  report += "design_gamma: " + fmt(info.gamma) + "\ndesign_eta: " + fmt(info.eta) + "\ndesign_alpha: " +
            fmt(info.alpha) + "\nbudget_lhs: " + fmt(lhs) + "\nbudget_bound: " + fmt(bound) +
            "\nbudget_residual: " + fmt(lhs - bound) + '\n';
  out.write("audit_report.txt", report);
  char* csv = nullptr;
  check(gpobs_audit_report_csv(rep.get(), &csv), "audit csv");
  out.write("audit_steps.csv", take(csv));

  std::vector<std::string> args = {"audit", abs_path(c.scenario), "--design", design_arg(c.design),
                                   "--pairs", std::to_string(c.pairs), "--mode", c.mode,
                                   "--agent", std::to_string(c.agent), "--horizon", std::to_string(o.horizon),
                                   "--seed", std::to_string(o.seed), "--mask", c.flags.mask,
                                   "--out", out.dir().string()};
  out.manifest("audit", args,
               {{"scenario", abs_path(c.scenario)}, {"seed", std::to_string(o.seed)},
                {"horizon", std::to_string(o.horizon)}, {"violations", std::to_string(violations)}});
  std::cout << "violations: " << violations << "\nworst: " << fmt(worst) << "\nbudget_residual: " << fmt(lhs - bound)
            << "\noutput: " << out.dir().string() << '\n';
  return violations > 0 ? kExitViolation : kExitOk;
}

struct AccuracyCmd {
  std::string scenario;
  std::string np_design = "np";
  std::string gp_design;
  std::optional<std::size_t> horizon;
  std::optional<std::uint64_t> seed;
  SynthFlags flags;
  std::string out;
};

int run_accuracy(const AccuracyCmd& c) {
  Scenario sc = load(c.scenario);
  Design np = resolve_design(sc.get(), c.np_design, c.flags);
  Design gp = resolve_design(sc.get(), c.gp_design, c.flags);
  Outputs out(c.out.empty() ? default_out("accuracy") : fs::path(c.out));
  const std::size_t horizon = scenario_horizon(sc.get(), c.horizon);
  const std::uint64_t seed = scenario_seed(sc.get(), c.seed);
  gpobs_accuracy* raw = nullptr;
  check(gpobs_accuracy_compute(sc.get(), np.get(), gp.get(), horizon, seed, &raw), "accuracy");
  Accuracy acc(raw);
  double steady = 0.0, mismatch = 0.0;
  check(gpobs_accuracy_summary(acc.get(), &steady, &mismatch), "accuracy summary");
  char* csv = nullptr;
  check(gpobs_accuracy_csv(acc.get(), &csv), "accuracy csv");
  out.write("accuracy.csv", take(csv));
  out.write("accuracy_report.txt", "steady: " + fmt(steady) + "\nmax_mismatch: " + fmt(mismatch) +
                                       "\ntolerance: " + fmt(kAccuracyTolerance) + '\n');
  std::vector<std::string> args = {"accuracy", abs_path(c.scenario), "--np-design", design_arg(c.np_design),
                                   "--gp-design", design_arg(c.gp_design), "--horizon", std::to_string(horizon),
                                   "--seed", std::to_string(seed), "--mask", c.flags.mask,
                                   "--out", out.dir().string()};
  out.manifest("accuracy", args,
               {{"scenario", abs_path(c.scenario)}, {"seed", std::to_string(seed)}, {"horizon", std::to_string(horizon)},
                {"max_mismatch", fmt(mismatch)}});
  std::cout << "steady: " << fmt(steady) << "\nmax_mismatch: " << fmt(mismatch) << "\noutput: " << out.dir().string()
            << '\n';
  if (!(mismatch <= kAccuracyTolerance)) {
    std::cerr << "error: closed form and simulation differ by " << fmt(mismatch) << '\n';
    return kExitNumeric;
  }
  return kExitOk;
}

struct ReproduceCmd {
  std::string scenario = std::string(GPOBS_DATA_DIR) + "/market5.cfg";
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> horizon;
  std::string gp_mask = "pattern";
  double delta_tol = 1e-2;
  std::string out;
};

std::string report_of(const gpobs_synth_result* r) {
  char* t = nullptr;
  check(gpobs_synth_result_report(r, &t), "report");
  return take(t);
}

std::string design_text(const gpobs_design* d) {
  char* t = nullptr;
  check(gpobs_design_serialize(d, &t), "design");
  return take(t);
}

int run_reproduce(const ReproduceCmd& c) {
  Scenario sc = load(c.scenario);
  int has_budget = 0;
  double eps = 0.0, delta = 0.0, rho = 0.0;
  check(gpobs_scenario_budget(sc.get(), &has_budget, &eps, &delta, &rho), "budget");
  if (!has_budget) throw Failure(kExitUsage, "scenario needs epsilon, delta and rho");
  if (!gpobs_scenario_has_fixture(sc.get())) throw Failure(kExitUsage, "scenario needs a gain block");
  std::size_t n = 0, m = 0, n_z = 0;
  check(gpobs_scenario_dims(sc.get(), &n, &m, &n_z, nullptr), "dims");
  Outputs out(c.out.empty() ? default_out("reproduce") : fs::path(c.out));
  const std::size_t horizon = scenario_horizon(sc.get(), c.horizon);
  const std::uint64_t seed = scenario_seed(sc.get(), c.seed);

  SynthFlags np_flags;
  np_flags.seed = seed;
  SynthResult np = synthesize(sc.get(), np_flags.options(sc.get(), false));
  Design np_design = design_of(np.get());
  out.write("np_report.txt", report_of(np.get()));
  out.write("np_design.cfg", design_text(np_design.get()));

  gpobs_design* raw = nullptr;
  check(gpobs_design_from_fixture(sc.get(), &raw), "fixture design");
  Design fixture(raw);
  gpobs_synth_result* cert_raw = nullptr;
  check(gpobs_certify(sc.get(), fixture.get(), nullptr, &cert_raw), "fixture certification");
  SynthResult fixture_cert(cert_raw);
  out.write("paper_gain_report.txt", report_of(fixture_cert.get()));

  SynthFlags gp_flags;
  gp_flags.seed = seed;
  gp_flags.mask = c.gp_mask;
  gpobs_synth_options gp_opts = gp_flags.options(sc.get(), true);
  SynthResult gp = synthesize(sc.get(), gp_opts);
  out.write("gp_report.txt", report_of(gp.get()));
  out.write("gp_design.cfg", design_text(design_of(gp.get()).get()));

  double relaxed_delta = 0.0;
  gpobs_synth_result* relaxed_raw = nullptr;
  check(gpobs_min_feasible_delta(sc.get(), &gp_opts, c.delta_tol, &relaxed_delta, &relaxed_raw), "delta search");
  SynthResult relaxed(relaxed_raw);
  out.write("gp_relaxed_report.txt", "delta: " + fmt(relaxed_delta) + '\n' + report_of(relaxed.get()));
  out.write("gp_relaxed_design.cfg", design_text(design_of(relaxed.get()).get()));

  // Figure data: rows k = 0 .. horizon.
  const std::size_t steps = horizon + 1;
  double dp_scale = 0.0;
  check(gpobs_scenario_dp_scale(sc.get(), &dp_scale), "dp scale");
  Trajectory t_np = simulate(sc.get(), np_design.get(), steps, seed);
  Trajectory t_gp = simulate(sc.get(), fixture.get(), steps, seed);
  gpobs_trajectory* dp_raw = nullptr;
  check(gpobs_dp_baseline(sc.get(), fixture.get(), dp_scale, steps, seed, &dp_raw), "dp baseline");
  Trajectory t_dp(dp_raw);
  bool contained = true;
  for (auto* t : {t_np.get(), t_gp.get(), t_dp.get()}) {
    int ok = 0;
    check(gpobs_trajectory_containment(t, &ok, nullptr, nullptr), "containment");
    contained = contained && ok;
  }
  auto csv_of = [](const gpobs_trajectory* t) {
    char* text = nullptr;
    check(gpobs_trajectory_csv(t, &text), "csv");
    return take(text);
  };
  out.write("fig1_np.csv", csv_of(t_np.get()));
  out.write("fig1_gp.csv", csv_of(t_gp.get()));
  out.write("fig1_dp.csv", csv_of(t_dp.get()));
  std::vector<double> w_np = released_widths(t_np.get(), n_z);
  std::vector<double> w_gp = released_widths(t_gp.get(), n_z);
  std::vector<double> w_dp = released_widths(t_dp.get(), n_z);
  std::ostringstream widths;
  widths << "k,np,gp,dp\n";
  for (std::size_t k = 0; k < steps; ++k) widths << k << ',' << fmt(w_np[k]) << ',' << fmt(w_gp[k]) << ',' << fmt(w_dp[k]) << '\n';
  out.write("fig1_widths.csv", widths.str());

  gpobs_accuracy* acc_raw = nullptr;
  check(gpobs_accuracy_compute(sc.get(), np_design.get(), fixture.get(), horizon, seed, &acc_raw), "accuracy");
  Accuracy acc(acc_raw);
  char* acc_csv = nullptr;
  check(gpobs_accuracy_csv(acc.get(), &acc_csv), "accuracy csv");
  out.write("accuracy.csv", take(acc_csv));

  // Summary table.
  std::ostringstream summary;
  summary << "label,gamma,alpha,eta,delta,status,budget_residual,gamma_minus_reference\n";
  summary << "reference," << fmt(kReferenceGamma) << ',' << fmt(kReferenceAlpha) << ",," << fmt(delta)
          << ",reported,,0\n";
  auto row = [&](const std::string& label, const gpobs_synth_result* r, std::optional<double> row_delta,
                 std::optional<double> residual) {
    gpobs_synth_summary s = summary_of(r);
    summary << label << ',' << fmt(s.gamma) << ',' << fmt(s.alpha) << ',' << fmt(s.eta) << ','
            << (row_delta ? fmt(*row_delta) : "") << ',' << gpobs_synth_status_name(s.status) << ','
            << (residual ? fmt(*residual) : "") << ',' << fmt(s.gamma - kReferenceGamma) << '\n';
  };
  gpobs_synth_summary fs_sum = summary_of(fixture_cert.get());
  row("paper-gain", fixture_cert.get(), delta, fs_sum.budget_residual);
  double np_lhs = 0.0, np_bound = 0.0;
  check(gpobs_privacy_lhs(sc.get(), np_design.get(), 0, 0, &np_lhs, &np_bound), "budget check");
  row("np-synth", np.get(), delta, np_lhs - np_bound);
  gpobs_synth_summary gp_sum = summary_of(gp.get());
  row("gp-synth", gp.get(), delta, gp_sum.budget_residual);
  gpobs_synth_summary rx_sum = summary_of(relaxed.get());
  row("gp-synth-relaxed", relaxed.get(), relaxed_delta, rx_sum.budget_residual);
  out.write("summary.csv", summary.str());

  std::vector<double> paper_gain(n * m), np_gain(n * m), gp_gain(n * m);
  check(gpobs_design_gain(fixture.get(), paper_gain.data(), paper_gain.size()), "gain");
  check(gpobs_design_gain(np_design.get(), np_gain.data(), np_gain.size()), "gain");
  check(gpobs_design_gain(design_of(relaxed.get()).get(), gp_gain.data(), gp_gain.size()), "gain");
  std::ostringstream gains;
  gains << "i,j,paper_gain,np_synth,gp_synth_relaxed\n";
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j)
      gains << i + 1 << ',' << j + 1 << ',' << fmt(paper_gain[i * m + j]) << ',' << fmt(np_gain[i * m + j]) << ','
            << fmt(gp_gain[i * m + j]) << '\n';
  out.write("gain_comparison.csv", gains.str());

  std::vector<std::string> args = {"reproduce", "--scenario", abs_path(c.scenario), "--seed", std::to_string(seed),
                                   "--horizon", std::to_string(horizon), "--gp-mask", c.gp_mask,
                                   "--delta-tol", fmt(c.delta_tol), "--out", out.dir().string()};
  out.manifest("reproduce", args,
               {{"scenario", abs_path(c.scenario)}, {"seed", std::to_string(seed)}, {"horizon", std::to_string(horizon)},
                {"containment", contained ? "ok" : "violated"}});
  std::cout << summary.str() << "widths at k=" << horizon << ": np " << fmt(w_np.back()) << " gp "
            << fmt(w_gp.back()) << " dp " << fmt(w_dp.back()) << "\noutput: " << out.dir().string() << '\n';
  if (!contained) {
    std::cerr << "error: framer containment violated\n";
    return kExitNumeric;
  }
  return kExitOk;
}

int dispatch(const std::vector<std::string>& argv);

int run_rerun(const std::string& manifest_path, const std::string& out_override) {
  std::string text = read_file(manifest_path);
  std::vector<std::string> args;
  std::vector<std::pair<std::string, std::string>> files;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.rfind("arg: ", 0) == 0) args.push_back(line.substr(5));
    else if (line.rfind("file: ", 0) == 0) {
      std::string rest = line.substr(6);
      auto sp = rest.rfind(' ');
      if (sp == std::string::npos) throw Failure(kExitUsage, "malformed manifest line: " + line);
      files.emplace_back(rest.substr(0, sp), rest.substr(sp + 1));
    }
  }
  if (args.empty()) throw Failure(kExitUsage, "manifest has no recorded arguments: " + manifest_path);
  fs::path target;
  for (std::size_t i = 0; i + 1 < args.size(); ++i) {
    if (args[i] == "--out") {
      if (!out_override.empty()) args[i + 1] = abs_path(out_override);
      target = args[i + 1];
    }
  }
  std::vector<std::string> argv = {"gpobs"};
  argv.insert(argv.end(), args.begin(), args.end());
  int code = dispatch(argv);
  std::size_t mismatches = 0;
  for (const auto& [name, sum] : files) {
    fs::path p = target / name;
    std::string actual = fs::exists(p) ? sha256_hex(read_file(p)) : "missing";
    if (actual != sum) {
      ++mismatches;
      std::cerr << "mismatch: " << name << '\n';
    }
  }
  std::cout << "rerun files: " << files.size() << " mismatches: " << mismatches << '\n';
  if (mismatches > 0) return kExitNumeric;
  return code;
}

int dispatch(const std::vector<std::string>& argv) {
  CLI::App app{"Guaranteed-privacy interval observers: synthesis, simulation, audit and accuracy analysis"};
  app.require_subcommand(1);
  app.set_version_flag("--version", gpobs_version());
  std::function<int()> action;

  auto add_synth_flags = [](CLI::App* cmd, SynthFlags& f) {
    cmd->add_option("--mask", f.mask, "Gain structure for synthesized designs: none, pattern or scenario");
    cmd->add_option("--iters", f.iters, "Pattern-search sweep budget per start")->check(CLI::PositiveNumber);
    cmd->add_option("--starts", f.starts, "Extra random starts drawn from the seed");
    cmd->add_flag("--sigma-min", f.sigma_min, "Use sigma_min in the budget constraint");
    cmd->add_flag("--literal-alpha", f.literal_alpha, "Keep the extra alpha factor in the budget constraint");
  };

  SynthCmd synth;
  auto* s = app.add_subcommand("synth", "Synthesize an observer gain");
  s->add_option("scenario", synth.scenario, "Scenario file")->required();
  auto* priv = s->add_flag("--private", synth.flags.private_mode, "Joint (L, alpha) design under the budget");
  s->add_flag("--nonprivate", synth.nonprivate, "Gain only, alpha = 1")->excludes(priv);
  add_synth_flags(s, synth.flags);
  s->add_option("--seed", synth.flags.seed, "Search seed");
  s->add_option("--out", synth.out, "Output directory");
  s->callback([&] { action = [&] { return run_synth(synth); }; });

  SimulateCmd sim;
  auto* si = app.add_subcommand("simulate", "Co-simulate plant and framer");
  si->add_option("scenario", sim.scenario, "Scenario file")->required();
  si->add_option("--design", sim.design, "paper-gain, np, gp or a design file")->required();
  si->add_option("--horizon", sim.horizon, "Steps per run");
  si->add_option("--seeds", sim.seeds, "Number of consecutive seeds");
  si->add_option("--seed", sim.seed, "First seed");
  si->add_option("--mask", sim.flags.mask, "Gain structure when the design is synthesized");
  si->add_option("--out", sim.out, "Output directory");
  si->callback([&] { action = [&] { return run_simulate(sim); }; });

  AuditCmd aud;
  auto* au = app.add_subcommand("audit", "Audit guaranteed privacy on adjacent measurement pairs");
  au->add_option("scenario", aud.scenario, "Scenario file")->required();
  au->add_option("--design", aud.design, "paper-gain, np, gp or a design file")->required();
  au->add_option("--pairs", aud.pairs, "Number of adjacent pairs");
  au->add_option("--mode", aud.mode, "boundary, interior or single-agent");
  au->add_option("--agent", aud.agent, "Agent for single-agent mode (1-based)");
  au->add_option("--horizon", aud.horizon, "Steps per pair");
  au->add_option("--seed", aud.seed, "Base seed; pair i uses seed + i");
  au->add_option("--mask", aud.flags.mask, "Gain structure when the design is synthesized");
  au->add_option("--out", aud.out, "Output directory");
  au->callback([&] { action = [&] { return run_audit(aud); }; });

  AccuracyCmd accu;
  auto* ac = app.add_subcommand("accuracy", "Accuracy loss of a private design against a non-private one");
  ac->add_option("scenario", accu.scenario, "Scenario file")->required();
  ac->add_option("--np-design", accu.np_design, "Non-private design reference");
  ac->add_option("--gp-design", accu.gp_design, "Private design reference")->required();
  ac->add_option("--horizon", accu.horizon, "Last step k");
  ac->add_option("--seed", accu.seed, "Simulation seed for the cross-check");
  ac->add_option("--mask", accu.flags.mask, "Gain structure when a design is synthesized");
  ac->add_option("--out", accu.out, "Output directory");
  ac->callback([&] { action = [&] { return run_accuracy(accu); }; });

  ReproduceCmd rep;
  auto* re = app.add_subcommand("reproduce", "End-to-end run of the bundled market example");
  re->add_option("--scenario", rep.scenario, "Scenario file");
  re->add_option("--seed", rep.seed, "Seed");
  re->add_option("--horizon", rep.horizon, "Last step k of the figure data");
  re->add_option("--gp-mask", rep.gp_mask, "Gain structure for private synthesis");
  re->add_option("--delta-tol", rep.delta_tol, "Relative tolerance of the delta search")->check(CLI::PositiveNumber);
  re->add_option("--out", rep.out, "Output directory");
  re->callback([&] { action = [&] { return run_reproduce(rep); }; });

  std::string manifest;
  std::string rerun_out;
  auto* rr = app.add_subcommand("rerun", "Repeat a recorded run and verify output checksums");
  rr->add_option("manifest", manifest, "manifest.txt of an earlier run")->required();
  rr->add_option("--out", rerun_out, "Write into this directory instead of the recorded one");
  rr->callback([&] { action = [&] { return run_rerun(manifest, rerun_out); }; });

  std::vector<const char*> cargv;
  for (const auto& a : argv) cargv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(cargv.size()), cargv.data());
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }
  try {
    return action ? action() : kExitUsage;
  } catch (const Failure& f) {
    std::cerr << "error: " << f.what() << '\n';
    return f.code;
  }
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  try {
    return dispatch(args);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitNumeric;
  }
}
