#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <string>
#include <vector>

#include "gpobs/gpobs.h"

namespace {

std::string data(const char* name) { return std::string(GPOBS_DATA_DIR) + "/" + name; }

std::string take(char* text) {
  std::string s = text ? text : "";
  gpobs_string_free(text);
  return s;
}

struct Scenario {
  gpobs_scenario* p = nullptr;
  explicit Scenario(const char* name) { REQUIRE(gpobs_scenario_load(data(name).c_str(), &p) == GPOBS_OK); }
  ~Scenario() { gpobs_scenario_free(p); }
};

struct Design {
  gpobs_design* p = nullptr;
  ~Design() { gpobs_design_free(p); }
};

}  // namespace

TEST_CASE("version and status names") {
  CHECK(std::string(gpobs_version()) == "1.0.0");
  CHECK(std::string(gpobs_status_name(GPOBS_ERR_UNSTABLE)) == "unstable");
  CHECK(std::string(gpobs_synth_status_name(GPOBS_SYNTH_INFEASIBLE_BUDGET)) == "infeasible-budget");
}

TEST_CASE("loading errors set status and message") {
  gpobs_scenario* sc = nullptr;
  CHECK(gpobs_scenario_load("/nonexistent.cfg", &sc) == GPOBS_ERR_IO);
  CHECK(sc == nullptr);
  CHECK(std::string(gpobs_last_error()).find("/nonexistent.cfg") != std::string::npos);
  CHECK(gpobs_scenario_parse("format gpobs-scenario 1\nbogus\n", "inline", &sc) == GPOBS_ERR_PARSE);
  CHECK(std::string(gpobs_last_error()).find("inline:2") != std::string::npos);
  CHECK(gpobs_scenario_load(nullptr, &sc) == GPOBS_ERR_INVALID_ARGUMENT);
  CHECK(gpobs_scenario_load(data("market5.cfg").c_str(), nullptr) == GPOBS_ERR_INVALID_ARGUMENT);
}

TEST_CASE("scenario queries") {
  Scenario sc("market5.cfg");
  size_t n = 0, m = 0, nz = 0, agents = 0;
  REQUIRE(gpobs_scenario_dims(sc.p, &n, &m, &nz, &agents) == GPOBS_OK);
  CHECK(n == 5);
  CHECK(m == 5);
  CHECK(nz == 1);
  CHECK(agents == 5);
  int present = 0;
  double eps = 0, delta = 0, rho = 0;
  REQUIRE(gpobs_scenario_budget(sc.p, &present, &eps, &delta, &rho) == GPOBS_OK);
  CHECK(present == 1);
  CHECK(eps == std::log(3.0));
  CHECK(delta == 0.1);
  CHECK(rho == 1.0);
  size_t horizon = 0;
  uint64_t seed = 0;
  REQUIRE(gpobs_scenario_run(sc.p, &horizon, &seed) == GPOBS_OK);
  CHECK(horizon == 100);
  CHECK(seed == 1);
  CHECK(gpobs_scenario_has_fixture(sc.p) == 1);
  char* name = nullptr;
  REQUIRE(gpobs_scenario_name(sc.p, &name) == GPOBS_OK);
  CHECK(take(name) == "market5");
  double scale = 0;
  REQUIRE(gpobs_scenario_dp_scale(sc.p, &scale) == GPOBS_OK);
  CHECK(scale == doctest::Approx(1.0 / std::log(3.0)));
  char* text = nullptr;
  REQUIRE(gpobs_scenario_serialize(sc.p, &text) == GPOBS_OK);
  const std::string s = take(text);
  gpobs_scenario* back = nullptr;
  REQUIRE(gpobs_scenario_parse(s.c_str(), "copy", &back) == GPOBS_OK);
  gpobs_scenario_free(back);
  CHECK(gpobs_scenario_set_budget(sc.p, -1.0, 0.1, 1.0) == GPOBS_ERR_INVALID_ARGUMENT);
  CHECK(gpobs_scenario_set_budget(sc.p, 0.0, 0.5, 1.0) == GPOBS_OK);
  REQUIRE(gpobs_scenario_budget(sc.p, &present, &eps, &delta, &rho) == GPOBS_OK);
  CHECK(delta == 0.5);
}

TEST_CASE("fixture design and its levels") {
  Scenario sc("market5.cfg");
  Design d;
  REQUIRE(gpobs_design_from_fixture(sc.p, &d.p) == GPOBS_OK);
  gpobs_design_info info{};
  REQUIRE(gpobs_design_info_get(d.p, &info) == GPOBS_OK);
  CHECK(info.alpha == 1.364);
  CHECK(info.provenance == GPOBS_PROVENANCE_LOADED_FIXTURE);
  CHECK(info.gamma > 2.4);
  CHECK(info.beta == doctest::Approx(info.gamma * 1.364));
  std::vector<double> gain(25);
  REQUIRE(gpobs_design_gain(d.p, gain.data(), gain.size()) == GPOBS_OK);
  CHECK(gain[0] == 0.425);
  CHECK(gpobs_design_gain(d.p, gain.data(), 3) == GPOBS_ERR_DIMENSION);
  char* text = nullptr;
  REQUIRE(gpobs_design_serialize(d.p, &text) == GPOBS_OK);
  CHECK(take(text).find("alpha 1.364") != std::string::npos);
  double lhs = 0, bound = 0;
  REQUIRE(gpobs_privacy_lhs(sc.p, d.p, 0, 0, &lhs, &bound) == GPOBS_OK);
  CHECK(bound == doctest::Approx(0.1 / 3.0));
  CHECK(lhs > 20.0);
}

TEST_CASE("unstable gains are reported") {
  Scenario sc("market5.cfg");
  Design d;
  std::vector<double> gain(25, 0.0);
  CHECK(gpobs_design_from_gain(sc.p, gain.data(), gain.size(), 1.0, &d.p) == GPOBS_ERR_UNSTABLE);
  CHECK(d.p == nullptr);
  CHECK(gpobs_design_from_gain(sc.p, gain.data(), 24, 1.0, &d.p) == GPOBS_ERR_DIMENSION);
}

TEST_CASE("synthesis through the C interface") {
  Scenario sc("scalar.cfg");
  gpobs_synth_options o;
  gpobs_synth_options_init(&o);
  o.private_mode = 1;
  gpobs_synth_result* r = nullptr;
  REQUIRE(gpobs_synthesize(sc.p, &o, &r) == GPOBS_OK);
  gpobs_synth_summary s{};
  REQUIRE(gpobs_synth_result_summary(r, &s) == GPOBS_OK);
  CHECK(s.status == GPOBS_SYNTH_CERTIFIED);
  CHECK(s.has_budget == 1);
  CHECK(s.budget_residual <= 0.0);
  CHECK(s.gamma == doctest::Approx(1.02 * s.gamma_direct));
  char* text = nullptr;
  REQUIRE(gpobs_synth_result_report(r, &text) == GPOBS_OK);
  CHECK(take(text).find("status: certified") != std::string::npos);
  Design d;
  REQUIRE(gpobs_synth_result_design(r, &d.p) == GPOBS_OK);
  gpobs_synth_result_free(r);

  gpobs_synth_result* again = nullptr;
  REQUIRE(gpobs_certify(sc.p, d.p, &o, &again) == GPOBS_OK);
  gpobs_synth_summary s2{};
  REQUIRE(gpobs_synth_result_summary(again, &s2) == GPOBS_OK);
  CHECK(s2.status == GPOBS_SYNTH_CERTIFIED);
  CHECK(s2.gamma_direct == doctest::Approx(s.gamma_direct));
  gpobs_synth_result_free(again);

  double delta = 0;
  gpobs_synth_result* tight = nullptr;
  REQUIRE(gpobs_min_feasible_delta(sc.p, &o, 1e-3, &delta, &tight) == GPOBS_OK);
  CHECK(delta > 0.0);
  CHECK(delta < 1.0);
  gpobs_synth_result_free(tight);

  o.private_mode = 0;
  REQUIRE(gpobs_synthesize(sc.p, &o, &r) == GPOBS_OK);
  gpobs_synth_summary np{};
  REQUIRE(gpobs_synth_result_summary(r, &np) == GPOBS_OK);
  CHECK(np.gamma_direct <= s.gamma_direct * (1 + 1e-9));
  gpobs_synth_result_free(r);
  r = nullptr;
  CHECK(gpobs_synthesize(nullptr, &o, &r) == GPOBS_ERR_INVALID_ARGUMENT);
  CHECK(r == nullptr);
}

TEST_CASE("simulation and trajectory access") {
  Scenario sc("market5.cfg");
  Design d;
  REQUIRE(gpobs_design_from_fixture(sc.p, &d.p) == GPOBS_OK);
  gpobs_trajectory* t = nullptr;
  REQUIRE(gpobs_simulate(sc.p, d.p, 100, 7, &t) == GPOBS_OK);
  CHECK(gpobs_trajectory_length(t) == 100);
  int ok = 0;
  double slack = 0;
  size_t step = 0;
  REQUIRE(gpobs_trajectory_containment(t, &ok, &slack, &step) == GPOBS_OK);
  CHECK(ok == 1);
  CHECK(slack >= -1e-9);
  double lo = 0, hi = 0, truth = 0;
  REQUIRE(gpobs_trajectory_output(t, 99, &lo, &hi, &truth, 1) == GPOBS_OK);
  CHECK(lo <= truth);
  CHECK(truth <= hi);
  CHECK(gpobs_trajectory_output(t, 100, &lo, &hi, &truth, 1) == GPOBS_ERR_INVALID_ARGUMENT);
  char* csv = nullptr;
  REQUIRE(gpobs_trajectory_csv(t, &csv) == GPOBS_OK);
  CHECK(take(csv).rfind("k,z_true_1,z_lo_1,z_hi_1,width_1\n", 0) == 0);
  gpobs_trajectory_free(t);

  gpobs_trajectory* dp = nullptr;
  REQUIRE(gpobs_dp_baseline(sc.p, d.p, 0.5, 50, 7, &dp) == GPOBS_OK);
  REQUIRE(gpobs_trajectory_containment(dp, &ok, &slack, &step) == GPOBS_OK);
  CHECK(ok == 1);
  gpobs_trajectory_free(dp);
  CHECK(gpobs_simulate(sc.p, d.p, 0, 7, &t) == GPOBS_ERR_INVALID_ARGUMENT);
}

TEST_CASE("audit through the C interface") {
  Scenario sc("market5.cfg");
  Design d;
  REQUIRE(gpobs_design_from_fixture(sc.p, &d.p) == GPOBS_OK);
  gpobs_audit_options o;
  gpobs_audit_options_init(&o);
  o.pairs = 4;
  o.horizon = 20;
  gpobs_audit_report* rep = nullptr;
  REQUIRE(gpobs_audit(sc.p, d.p, &o, &rep) == GPOBS_OK);
  size_t violations = 0;
  double worst = 0;
  int exact = 0;
  REQUIRE(gpobs_audit_report_summary(rep, &violations, &worst, &exact) == GPOBS_OK);
  CHECK(violations > 0);
  CHECK(exact == 1);
  char* text = nullptr;
  REQUIRE(gpobs_audit_report_csv(rep, &text) == GPOBS_OK);
  CHECK(take(text).rfind("k,worst_distance,delta,violations\n", 0) == 0);
  REQUIRE(gpobs_audit_report_text(rep, &text) == GPOBS_OK);
  CHECK(take(text).find("pairs: 4") != std::string::npos);
  gpobs_audit_report_free(rep);
  o.pairs = 0;
  CHECK(gpobs_audit(sc.p, d.p, &o, &rep) == GPOBS_ERR_INVALID_ARGUMENT);
}

TEST_CASE("accuracy through the C interface") {
  Scenario sc("market5.cfg");
  Design fixture;
  REQUIRE(gpobs_design_from_fixture(sc.p, &fixture.p) == GPOBS_OK);
  gpobs_accuracy* acc = nullptr;
  REQUIRE(gpobs_accuracy_compute(sc.p, fixture.p, fixture.p, 20, 1, &acc) == GPOBS_OK);
  double steady = 1, mismatch = 1;
  REQUIRE(gpobs_accuracy_summary(acc, &steady, &mismatch) == GPOBS_OK);
  CHECK(steady == doctest::Approx(0.0));
  CHECK(mismatch <= 1e-8);
  char* csv = nullptr;
  REQUIRE(gpobs_accuracy_csv(acc, &csv) == GPOBS_OK);
  const std::string s = take(csv);
  CHECK(s.rfind("k,closed_form,simulated,abs_diff,steady\n0,0,", 0) == 0);
  gpobs_accuracy_free(acc);
}

TEST_CASE("null handles are rejected without crashing") {
  CHECK(gpobs_scenario_dims(nullptr, nullptr, nullptr, nullptr, nullptr) == GPOBS_ERR_INVALID_ARGUMENT);
  CHECK(gpobs_design_info_get(nullptr, nullptr) == GPOBS_ERR_INVALID_ARGUMENT);
  CHECK(gpobs_trajectory_length(nullptr) == 0);
  gpobs_scenario_free(nullptr);
  gpobs_design_free(nullptr);
  gpobs_string_free(nullptr);
}
