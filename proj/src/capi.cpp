#include "gpobs/gpobs.h"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <memory>
#include <new>
#include <sstream>
#include <string>

#include "gpobs/error.hpp"
#include "gpobs/format.hpp"
#include "gpobs/hinf.hpp"
#include "gpobs/observer.hpp"
#include "gpobs/privacy.hpp"
#include "gpobs/scenario.hpp"
#include "gpobs/synthesis.hpp"

struct gpobs_scenario {
  gpobs::Scenario value;
};
struct gpobs_design {
  gpobs::ObserverDesign value;
};
struct gpobs_synth_result {
  gpobs::SynthesisResult value;
};
struct gpobs_trajectory {
  gpobs::FramerTrajectory value;
};
struct gpobs_audit_report {
  gpobs::AuditReport value;
};
struct gpobs_accuracy {
  std::vector<double> closed_form;
  std::vector<double> simulated;
  double steady = 0.0;
};

namespace {

thread_local std::string last_error;

gpobs_status code_of(gpobs::ErrorCode code) {
  switch (code) {
    case gpobs::ErrorCode::invalid_argument: return GPOBS_ERR_INVALID_ARGUMENT;
    case gpobs::ErrorCode::dimension_mismatch: return GPOBS_ERR_DIMENSION;
    case gpobs::ErrorCode::parse_error: return GPOBS_ERR_PARSE;
    case gpobs::ErrorCode::io_error: return GPOBS_ERR_IO;
    case gpobs::ErrorCode::unstable: return GPOBS_ERR_UNSTABLE;
    case gpobs::ErrorCode::singular: return GPOBS_ERR_SINGULAR;
  }
  return GPOBS_ERR_INTERNAL;
}

template <class F>
gpobs_status guarded(F&& f) {
  try {
    f();
    last_error.clear();
    return GPOBS_OK;
  } catch (const gpobs::Error& e) {
    last_error = e.what();
    return code_of(e.code());
  } catch (const std::bad_alloc&) {
    last_error = "out of memory";
    return GPOBS_ERR_INTERNAL;
  } catch (const std::exception& e) {
    last_error = e.what();
    return GPOBS_ERR_INTERNAL;
  }
}

void require(const void* p, const char* what) {
  if (p == nullptr) throw gpobs::Error(gpobs::ErrorCode::invalid_argument, std::string(what) + " is null");
}

char* dup_string(const std::string& s) {
  char* out = new char[s.size() + 1];
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

gpobs::SearchOptions search_options(const gpobs::Scenario& sc, const gpobs_synth_options* o) {
  gpobs::SearchOptions opt;
  if (o == nullptr) {
    if (sc.mask) opt.mask = sc.mask;
    return opt;
  }
  opt.max_sweeps = o->max_sweeps;
  opt.seed = o->seed;
  opt.random_starts = o->random_starts;
  opt.lhs.sigma_min = o->sigma_min != 0;
  opt.lhs.literal_alpha = o->literal_alpha != 0;
  switch (o->mask) {
    case GPOBS_MASK_NONE: break;
    case GPOBS_MASK_PATTERN: opt.mask = gpobs::pattern_mask(sc.plant); break;
    case GPOBS_MASK_SCENARIO:
      if (sc.mask) opt.mask = sc.mask;
      break;
    default: throw gpobs::Error(gpobs::ErrorCode::invalid_argument, "unknown mask mode");
  }
  return opt;
}

gpobs_provenance provenance_code(gpobs::Provenance p) {
  switch (p) {
    case gpobs::Provenance::loaded_fixture: return GPOBS_PROVENANCE_LOADED_FIXTURE;
    case gpobs::Provenance::non_private: return GPOBS_PROVENANCE_NON_PRIVATE;
    case gpobs::Provenance::synthesized: break;
  }
  return GPOBS_PROVENANCE_SYNTHESIZED;
}

gpobs_synth_status status_code(gpobs::SynthesisStatus s) {
  switch (s) {
    case gpobs::SynthesisStatus::certified: return GPOBS_SYNTH_CERTIFIED;
    case gpobs::SynthesisStatus::uncertified: return GPOBS_SYNTH_UNCERTIFIED;
    case gpobs::SynthesisStatus::infeasible_budget: return GPOBS_SYNTH_INFEASIBLE_BUDGET;
  }
  return GPOBS_SYNTH_UNCERTIFIED;
}

}  // namespace

extern "C" {

const char* gpobs_last_error(void) { return last_error.c_str(); }

const char* gpobs_version(void) { return "1.0.0"; }

const char* gpobs_status_name(gpobs_status status) {
  switch (status) {
    case GPOBS_OK: return "ok";
    case GPOBS_ERR_INVALID_ARGUMENT: return "invalid-argument";
    case GPOBS_ERR_DIMENSION: return "dimension-mismatch";
    case GPOBS_ERR_PARSE: return "parse-error";
    case GPOBS_ERR_IO: return "io-error";
    case GPOBS_ERR_UNSTABLE: return "unstable";
    case GPOBS_ERR_SINGULAR: return "singular";
    case GPOBS_ERR_INTERNAL: return "internal";
  }
  return "unknown";
}

void gpobs_string_free(char* text) { delete[] text; }

gpobs_status gpobs_scenario_load(const char* path, gpobs_scenario** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    *out = new gpobs_scenario{gpobs::load_scenario(path)};
  });
}

gpobs_status gpobs_scenario_parse(const char* text, const char* source, gpobs_scenario** out) {
  return guarded([&] {
    require(text, "text");
    require(out, "out");
    *out = new gpobs_scenario{gpobs::parse_scenario(text, source ? source : "<memory>")};
  });
}

void gpobs_scenario_free(gpobs_scenario* scenario) { delete scenario; }

gpobs_status gpobs_scenario_serialize(const gpobs_scenario* scenario, char** text) {
  return guarded([&] {
    require(scenario, "scenario");
    require(text, "text");
    *text = dup_string(gpobs::serialize_scenario(scenario->value));
  });
}

gpobs_status gpobs_scenario_dims(const gpobs_scenario* scenario, size_t* n, size_t* m, size_t* n_z, size_t* agents) {
  return guarded([&] {
    require(scenario, "scenario");
    const gpobs::PlantModel& p = scenario->value.plant;
    if (n) *n = p.n();
    if (m) *m = p.m();
    if (n_z) *n_z = p.n_z();
    if (agents) *agents = p.agent_count();
  });
}

gpobs_status gpobs_scenario_name(const gpobs_scenario* scenario, char** name) {
  return guarded([&] {
    require(scenario, "scenario");
    require(name, "name");
    *name = dup_string(scenario->value.name);
  });
}

gpobs_status gpobs_scenario_budget(const gpobs_scenario* scenario, int* present, double* epsilon, double* delta,
                                   double* rho) {
  return guarded([&] {
    require(scenario, "scenario");
    const auto& b = scenario->value.budget;
    if (present) *present = b ? 1 : 0;
    if (b) {
      if (epsilon) *epsilon = b->epsilon;
      if (delta) *delta = b->delta;
      if (rho) *rho = b->rho;
    }
  });
}

gpobs_status gpobs_scenario_set_budget(gpobs_scenario* scenario, double epsilon, double delta, double rho) {
  return guarded([&] {
    require(scenario, "scenario");
    scenario->value.budget = gpobs::PrivacyBudget(epsilon, delta, rho);
  });
}

gpobs_status gpobs_scenario_run(const gpobs_scenario* scenario, size_t* horizon, uint64_t* seed) {
  return guarded([&] {
    require(scenario, "scenario");
    if (horizon) *horizon = scenario->value.run.horizon;
    if (seed) *seed = scenario->value.run.seed;
  });
}

int gpobs_scenario_has_fixture(const gpobs_scenario* scenario) {
  return scenario != nullptr && scenario->value.fixture.has_value() ? 1 : 0;
}

gpobs_status gpobs_scenario_dp_scale(const gpobs_scenario* scenario, double* scale) {
  return guarded([&] {
    require(scenario, "scenario");
    require(scale, "scale");
    const gpobs::Scenario& sc = scenario->value;
    if (sc.dp_scale) *scale = *sc.dp_scale;
    else if (sc.budget && sc.budget->epsilon > 0.0) *scale = sc.budget->rho / sc.budget->epsilon;
    else *scale = 1.0;
  });
}

gpobs_status gpobs_design_from_fixture(const gpobs_scenario* scenario, gpobs_design** out) {
  return guarded([&] {
    require(scenario, "scenario");
    require(out, "out");
    const gpobs::Scenario& sc = scenario->value;
    if (!sc.fixture) throw gpobs::Error(gpobs::ErrorCode::invalid_argument, "scenario '" + sc.name + "' has no gain block");
    *out = new gpobs_design{gpobs::load_fixture_design(sc.plant, sc.fixture->gain, sc.fixture->alpha)};
  });
}

gpobs_status gpobs_design_load(const gpobs_scenario* scenario, const char* path, gpobs_design** out) {
  return guarded([&] {
    require(scenario, "scenario");
    require(path, "path");
    require(out, "out");
    gpobs::GainBlock block = gpobs::load_design(path);
    *out = new gpobs_design{gpobs::load_fixture_design(scenario->value.plant, block.gain, block.alpha)};
  });
}

gpobs_status gpobs_design_from_gain(const gpobs_scenario* scenario, const double* gain, size_t len, double alpha,
                                    gpobs_design** out) {
  return guarded([&] {
    require(scenario, "scenario");
    require(gain, "gain");
    require(out, "out");
    const gpobs::PlantModel& p = scenario->value.plant;
    if (len != p.n() * p.m()) {
      throw gpobs::Error(gpobs::ErrorCode::dimension_mismatch,
                         "gain buffer must hold " + std::to_string(p.n() * p.m()) + " entries");
    }
    gpobs::Matrix g(p.n(), p.m());
    for (size_t i = 0; i < p.n(); ++i)
      for (size_t j = 0; j < p.m(); ++j) g(i, j) = gain[i * p.m() + j];
    *out = new gpobs_design{gpobs::certify_design(p, g, alpha, gpobs::Provenance::synthesized).design};
  });
}

void gpobs_design_free(gpobs_design* design) { delete design; }

gpobs_status gpobs_design_info_get(const gpobs_design* design, gpobs_design_info* info) {
  return guarded([&] {
    require(design, "design");
    require(info, "info");
    const gpobs::ObserverDesign& d = design->value;
    info->gamma = d.gamma;
    info->eta = d.eta;
    info->alpha = d.alpha;
    info->beta = d.beta();
    info->provenance = provenance_code(d.provenance);
  });
}

gpobs_status gpobs_design_gain(const gpobs_design* design, double* buffer, size_t len) {
  return guarded([&] {
    require(design, "design");
    require(buffer, "buffer");
    const gpobs::Matrix& g = design->value.gain;
    if (len != g.rows() * g.cols()) throw gpobs::Error(gpobs::ErrorCode::dimension_mismatch, "gain buffer size mismatch");
    auto data = g.data();
    std::copy(data.begin(), data.end(), buffer);
  });
}

gpobs_status gpobs_design_serialize(const gpobs_design* design, char** text) {
  return guarded([&] {
    require(design, "design");
    require(text, "text");
    *text = dup_string(gpobs::serialize_design({design->value.gain, design->value.alpha}));
  });
}

void gpobs_synth_options_init(gpobs_synth_options* options) {
  if (options == nullptr) return;
  gpobs::SearchOptions defaults;
  options->private_mode = 0;
  options->mask = GPOBS_MASK_SCENARIO;
  options->max_sweeps = defaults.max_sweeps;
  options->seed = defaults.seed;
  options->random_starts = defaults.random_starts;
  options->sigma_min = 0;
  options->literal_alpha = 0;
}

gpobs_status gpobs_synthesize(const gpobs_scenario* scenario, const gpobs_synth_options* options,
                              gpobs_synth_result** out) {
  return guarded([&] {
    require(scenario, "scenario");
    require(out, "out");
    const gpobs::Scenario& sc = scenario->value;
    gpobs::SynthesisProblem problem{sc.plant, std::nullopt, search_options(sc, options)};
    if (options != nullptr && options->private_mode) {
      if (!sc.budget) throw gpobs::Error(gpobs::ErrorCode::invalid_argument, "private synthesis needs epsilon, delta and rho");
      problem.budget = sc.budget;
      *out = new gpobs_synth_result{gpobs::synth_private(problem)};
    } else {
      *out = new gpobs_synth_result{gpobs::synth_nonprivate(problem)};
    }
  });
}

gpobs_status gpobs_certify(const gpobs_scenario* scenario, const gpobs_design* design,
                           const gpobs_synth_options* options, gpobs_synth_result** out) {
  return guarded([&] {
    require(scenario, "scenario");
    require(design, "design");
    require(out, "out");
    const gpobs::Scenario& sc = scenario->value;
    const gpobs::ObserverDesign& d = design->value;
    *out = new gpobs_synth_result{
        gpobs::certify_design(sc.plant, d.gain, d.alpha, d.provenance, sc.budget, search_options(sc, options))};
  });
}

gpobs_status gpobs_min_feasible_delta(const gpobs_scenario* scenario, const gpobs_synth_options* options,
                                      double rel_tol, double* delta, gpobs_synth_result** out) {
  return guarded([&] {
    require(scenario, "scenario");
    require(delta, "delta");
    const gpobs::Scenario& sc = scenario->value;
    if (!sc.budget) throw gpobs::Error(gpobs::ErrorCode::invalid_argument, "delta search needs epsilon, delta and rho");
    gpobs::SynthesisProblem problem{sc.plant, sc.budget, search_options(sc, options)};
    gpobs::DeltaSearch found = gpobs::minimal_feasible_delta(problem, rel_tol);
    *delta = found.delta;
    if (out) *out = new gpobs_synth_result{std::move(found.result)};
  });
}

void gpobs_synth_result_free(gpobs_synth_result* result) { delete result; }

gpobs_status gpobs_synth_result_summary(const gpobs_synth_result* result, gpobs_synth_summary* s) {
  return guarded([&] {
    require(result, "result");
    require(s, "summary");
    const gpobs::SynthesisResult& r = result->value;
    s->status = status_code(r.status);
    s->gamma = r.design.gamma;
    s->gamma_direct = r.gamma_direct;
    s->eta = r.design.eta;
    s->eta_direct = r.eta_direct;
    s->alpha = r.design.alpha;
    s->has_budget = r.has_budget ? 1 : 0;
    s->budget_lhs = r.budget_lhs;
    s->budget_bound = r.budget_bound;
    s->budget_residual = r.budget_residual;
    s->evaluations = r.evaluations;
  });
}

gpobs_status gpobs_synth_result_report(const gpobs_synth_result* result, char** text) {
  return guarded([&] {
    require(result, "result");
    require(text, "text");
    *text = dup_string(gpobs::format_synthesis_report(result->value));
  });
}

gpobs_status gpobs_synth_result_design(const gpobs_synth_result* result, gpobs_design** out) {
  return guarded([&] {
    require(result, "result");
    require(out, "out");
    *out = new gpobs_design{result->value.design};
  });
}

const char* gpobs_synth_status_name(gpobs_synth_status status) {
  switch (status) {
    case GPOBS_SYNTH_CERTIFIED: return "certified";
    case GPOBS_SYNTH_UNCERTIFIED: return "uncertified";
    case GPOBS_SYNTH_INFEASIBLE_BUDGET: return "infeasible-budget";
  }
  return "unknown";
}

gpobs_status gpobs_simulate(const gpobs_scenario* scenario, const gpobs_design* design, size_t horizon, uint64_t seed,
                            gpobs_trajectory** out) {
  return guarded([&] {
    require(scenario, "scenario");
    require(design, "design");
    require(out, "out");
    *out = new gpobs_trajectory{gpobs::simulate(scenario->value.plant, design->value, horizon, seed)};
  });
}

gpobs_status gpobs_dp_baseline(const gpobs_scenario* scenario, const gpobs_design* design, double scale,
                               size_t horizon, uint64_t seed, gpobs_trajectory** out) {
  return guarded([&] {
    require(scenario, "scenario");
    require(design, "design");
    require(out, "out");
    *out = new gpobs_trajectory{gpobs::dp_baseline(scenario->value.plant, design->value.gain, scale, horizon, seed)};
  });
}

void gpobs_trajectory_free(gpobs_trajectory* trajectory) { delete trajectory; }

size_t gpobs_trajectory_length(const gpobs_trajectory* trajectory) {
  return trajectory == nullptr ? 0 : trajectory->value.horizon();
}

gpobs_status gpobs_trajectory_csv(const gpobs_trajectory* trajectory, char** text) {
  return guarded([&] {
    require(trajectory, "trajectory");
    require(text, "text");
    std::ostringstream os;
    gpobs::write_trajectory_csv(os, trajectory->value);
    *text = dup_string(os.str());
  });
}

gpobs_status gpobs_trajectory_containment(const gpobs_trajectory* trajectory, int* ok, double* worst_slack,
                                          size_t* worst_step) {
  return guarded([&] {
    require(trajectory, "trajectory");
    gpobs::ContainmentCheck c = gpobs::check_containment(trajectory->value);
    if (ok) *ok = c.ok ? 1 : 0;
    if (worst_slack) *worst_slack = c.worst_slack;
    if (worst_step) *worst_step = c.worst_step;
  });
}

gpobs_status gpobs_trajectory_output(const gpobs_trajectory* trajectory, size_t k, double* z_lo, double* z_hi,
                                     double* z_true, size_t len) {
  return guarded([&] {
    require(trajectory, "trajectory");
    const gpobs::FramerTrajectory& t = trajectory->value;
    if (k >= t.horizon()) throw gpobs::Error(gpobs::ErrorCode::invalid_argument, "step beyond trajectory length");
    if (len != t.z_lo[k].size()) throw gpobs::Error(gpobs::ErrorCode::dimension_mismatch, "output buffer size mismatch");
    for (size_t i = 0; i < len; ++i) {
      if (z_lo) z_lo[i] = t.z_lo[k][i];
      if (z_hi) z_hi[i] = t.z_hi[k][i];
      if (z_true) z_true[i] = t.has_truth() ? t.z_true[k][i] : 0.0;
    }
  });
}

void gpobs_audit_options_init(gpobs_audit_options* options) {
  if (options == nullptr) return;
  gpobs::AuditOptions d;
  options->pairs = d.pairs;
  options->horizon = d.horizon;
  options->seed = d.seed;
  options->mode = GPOBS_ADJ_BOUNDARY;
  options->agent = 0;
}

gpobs_status gpobs_audit(const gpobs_scenario* scenario, const gpobs_design* design,
                         const gpobs_audit_options* options, gpobs_audit_report** out) {
  return guarded([&] {
    require(scenario, "scenario");
    require(design, "design");
    require(options, "options");
    require(out, "out");
    const gpobs::Scenario& sc = scenario->value;
    if (!sc.budget) throw gpobs::Error(gpobs::ErrorCode::invalid_argument, "audit needs epsilon, delta and rho");
    gpobs::AuditOptions o;
    o.pairs = options->pairs;
    o.horizon = options->horizon;
    o.seed = options->seed;
    switch (options->mode) {
      case GPOBS_ADJ_BOUNDARY: o.mode = gpobs::AdjacencyMode::boundary; break;
      case GPOBS_ADJ_INTERIOR: o.mode = gpobs::AdjacencyMode::interior; break;
      case GPOBS_ADJ_SINGLE_AGENT: o.mode = gpobs::AdjacencyMode::single_agent; break;
      default: throw gpobs::Error(gpobs::ErrorCode::invalid_argument, "unknown adjacency mode");
    }
    o.agent = options->agent;
    *out = new gpobs_audit_report{gpobs::audit_guaranteed(sc.plant, design->value, *sc.budget, o)};
  });
}

void gpobs_audit_report_free(gpobs_audit_report* report) { delete report; }

gpobs_status gpobs_audit_report_text(const gpobs_audit_report* report, char** text) {
  return guarded([&] {
    require(report, "report");
    require(text, "text");
    *text = dup_string(gpobs::format_audit_report(report->value));
  });
}

gpobs_status gpobs_audit_report_csv(const gpobs_audit_report* report, char** text) {
  return guarded([&] {
    require(report, "report");
    require(text, "text");
    std::ostringstream os;
    gpobs::write_audit_csv(os, report->value);
    *text = dup_string(os.str());
  });
}

gpobs_status gpobs_audit_report_summary(const gpobs_audit_report* report, size_t* violations, double* worst,
                                        int* corner_exact) {
  return guarded([&] {
    require(report, "report");
    if (violations) *violations = report->value.violations;
    if (worst) *worst = report->value.worst;
    if (corner_exact) *corner_exact = report->value.corner_exact ? 1 : 0;
  });
}

gpobs_status gpobs_accuracy_compute(const gpobs_scenario* scenario, const gpobs_design* np, const gpobs_design* gp,
                            size_t horizon, uint64_t seed, gpobs_accuracy** out) {
  return guarded([&] {
    require(scenario, "scenario");
    require(np, "np");
    require(gp, "gp");
    require(out, "out");
    const gpobs::PlantModel& plant = scenario->value.plant;
    auto acc = std::make_unique<gpobs_accuracy>();
    acc->closed_form = gpobs::accuracy_series(plant, np->value, gp->value, horizon + 1);
    acc->steady = gpobs::accuracy_steady(plant, np->value, gp->value);
    gpobs::FramerTrajectory tn = gpobs::simulate(plant, np->value, horizon + 1, seed);
    gpobs::FramerTrajectory tg = gpobs::simulate(plant, gp->value, horizon + 1, seed);
    for (size_t k = 0; k <= horizon; ++k) {
      acc->simulated.push_back(gpobs::norm_inf(gpobs::sub(tn.z_width(k), tg.z_width(k))));
    }
    *out = acc.release();
  });
}

void gpobs_accuracy_free(gpobs_accuracy* accuracy) { delete accuracy; }

gpobs_status gpobs_accuracy_csv(const gpobs_accuracy* accuracy, char** text) {
  return guarded([&] {
    require(accuracy, "accuracy");
    require(text, "text");
    std::ostringstream os;
    os << "k,closed_form,simulated,abs_diff,steady\n";
    for (size_t k = 0; k < accuracy->closed_form.size(); ++k) {
      double c = accuracy->closed_form[k];
      double s = accuracy->simulated[k];
      os << k << ',' << gpobs::format_double(c) << ',' << gpobs::format_double(s) << ','
         << gpobs::format_double(std::abs(c - s)) << ',' << gpobs::format_double(accuracy->steady) << '\n';
    }
    *text = dup_string(os.str());
  });
}

gpobs_status gpobs_accuracy_summary(const gpobs_accuracy* accuracy, double* steady, double* max_mismatch) {
  return guarded([&] {
    require(accuracy, "accuracy");
    if (steady) *steady = accuracy->steady;
    if (max_mismatch) {
      double worst = 0.0;
      for (size_t k = 0; k < accuracy->closed_form.size(); ++k) {
        worst = std::max(worst, std::abs(accuracy->closed_form[k] - accuracy->simulated[k]));
      }
      *max_mismatch = worst;
    }
  });
}

gpobs_status gpobs_privacy_lhs(const gpobs_scenario* scenario, const gpobs_design* design, int sigma_min,
                               int literal_alpha, double* lhs, double* bound) {
  return guarded([&] {
    require(scenario, "scenario");
    require(design, "design");
    const gpobs::Scenario& sc = scenario->value;
    if (!sc.budget) throw gpobs::Error(gpobs::ErrorCode::invalid_argument, "scenario has no privacy budget");
    gpobs::PrivacyLhsOptions o{sigma_min != 0, literal_alpha != 0};
    if (lhs) *lhs = gpobs::privacy_constraint_lhs(sc.plant, design->value, *sc.budget, o);
    if (bound) *bound = sc.budget->bound();
  });
}

}  // extern "C"
