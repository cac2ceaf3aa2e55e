#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>
#include <sstream>

#include "gpobs/error.hpp"
#include "gpobs/hinf.hpp"
#include "gpobs/privacy.hpp"
#include "gpobs/synthesis.hpp"
#include "oracles.hpp"
#include "support.hpp"

using gpobs::AdjacencyMode;
using gpobs::IntervalVector;
using gpobs::Matrix;
using gpobs::Vector;

namespace {

gpobs::ObserverDesign market_fixture(const gpobs::Scenario& sc) {
  return gpobs::load_fixture_design(sc.plant, sc.fixture->gain, sc.fixture->alpha);
}

IntervalVector random_box(std::mt19937_64& gen, std::size_t d) {
  const Vector c = support::random_vector(gen, d, -1, 1), w = support::random_vector(gen, d, 0, 2);
  Vector lo(d), hi(d);
  for (std::size_t i = 0; i < d; ++i) {
    lo[i] = c[i] - w[i] / 2;
    hi[i] = c[i] + w[i] / 2;
  }
  return {lo, hi};
}

}  // namespace

TEST_CASE("zero adjacency radius leaves the measurements unchanged") {
  const auto sc = support::market();
  const auto d = gpobs::make_design(sc.fixture->gain, 1.0);
  const auto pair = gpobs::gen_adjacent(sc.plant, d, 20, 3, 0.0, AdjacencyMode::boundary);
  CHECK(pair.y == pair.y_prime);
}

TEST_CASE("boundary, interior and single-agent deviations") {
  const auto sc = support::market();
  const auto d = gpobs::make_design(sc.fixture->gain, 1.0);
  const double rho = 0.7;
  const auto b = gpobs::gen_adjacent(sc.plant, d, 50, 1, rho, AdjacencyMode::boundary);
  for (std::size_t k = 0; k < 50; ++k) {
    CHECK(std::abs(gpobs::norm2(gpobs::sub(b.y_prime[k], b.y[k])) - rho) <= 1e-12);
    CHECK(b.deviation[k] == doctest::Approx(rho).epsilon(1e-12));
  }
  const auto in = gpobs::gen_adjacent(sc.plant, d, 50, 1, rho, AdjacencyMode::interior);
  bool strictly_inside = false;
  for (std::size_t k = 0; k < 50; ++k) {
    const double dev = gpobs::norm2(gpobs::sub(in.y_prime[k], in.y[k]));
    CHECK(dev <= rho * (1 + 1e-12));
    strictly_inside = strictly_inside || dev < 0.9 * rho;
  }
  CHECK(strictly_inside);
  const auto one = gpobs::gen_adjacent(sc.plant, d, 50, 1, rho, AdjacencyMode::single_agent, 2);
  for (std::size_t k = 0; k < 50; ++k) {
    const Vector diff = gpobs::sub(one.y_prime[k], one.y[k]);
    for (std::size_t i = 0; i < 5; ++i)
      if (i != 2) CHECK(diff[i] == 0.0);
    CHECK(std::abs(diff[2]) == doctest::Approx(rho).epsilon(1e-12));
  }
  CHECK_THROWS_AS(gpobs::gen_adjacent(sc.plant, d, 5, 1, rho, AdjacencyMode::single_agent, 5), gpobs::Error);
  CHECK_THROWS_AS(gpobs::gen_adjacent(sc.plant, d, 5, 1, -1.0, AdjacencyMode::boundary), gpobs::Error);
}

TEST_CASE("adjacency mode names") {
  CHECK(gpobs::to_string(AdjacencyMode::single_agent) == "single-agent");
  CHECK(gpobs::parse_adjacency_mode("interior") == AdjacencyMode::interior);
  CHECK_THROWS_AS(gpobs::parse_adjacency_mode("sideways"), gpobs::Error);
}

TEST_CASE("corner enumeration attains the box-to-box maximum") {
  std::mt19937_64 gen(13);
  for (std::size_t d = 1; d <= 3; ++d)
    for (int t = 0; t < 10; ++t) {
      const auto a = random_box(gen, d), b = random_box(gen, d);
      const double corners = gpobs::max_corner_distance(a, b);
      CHECK(corners == doctest::Approx(oracle::box_distance_closed_form(a, b)).epsilon(1e-12));
      const double sampled = oracle::sampled_box_distance(a, b, 20000, 100 + t);
      CHECK(sampled <= corners * (1 + 1e-12));
      CHECK(sampled >= corners * 0.97);
      CHECK(gpobs::center_width_bound(a, b) >= corners * (1 - 1e-12));
    }
  const IntervalVector big(Vector(9, 0.0), Vector(9, 1.0));
  CHECK_THROWS_AS(gpobs::max_corner_distance(big, big), gpobs::Error);
}

TEST_CASE("noise-free audit with a vanishing radius reports nothing") {
  const auto sc = gpobs::load_scenario(support::data_path("zero_width.cfg"));
  const auto d = gpobs::load_fixture_design(sc.plant, sc.fixture->gain, 1.0);
  gpobs::AuditOptions o;
  o.pairs = 20;
  o.horizon = 30;
  const auto rep = gpobs::audit_guaranteed(sc.plant, d, gpobs::PrivacyBudget(0.0, 1e-6, 1e-12), o);
  CHECK(rep.worst <= 1e-10);
  CHECK(rep.violations == 0);
  CHECK(rep.corner_exact);
}

TEST_CASE("scalar feasible design passes the audit") {
  const auto sc = gpobs::load_scenario(support::data_path("scalar.cfg"));
  gpobs::SynthesisProblem prob;
  prob.plant = sc.plant;
  prob.budget = sc.budget;
  const auto found = gpobs::minimal_feasible_delta(prob, 1e-3);
  REQUIRE(found.result.status == gpobs::SynthesisStatus::certified);
  const gpobs::PrivacyBudget tight(sc.budget->epsilon, found.delta, sc.budget->rho);
  gpobs::AuditOptions o;
  o.pairs = 200;
  o.horizon = 100;
  o.seed = 5;
  const auto rep = gpobs::audit_guaranteed(sc.plant, found.result.design, tight, o);
  CHECK(rep.violations == 0);
  CHECK(rep.worst <= tight.delta);
  CHECK(rep.worst > 0.0);
  CHECK(rep.step_worst.size() == 100);
}

TEST_CASE("market fixture violates its published budget in the audit") {
  const auto sc = support::market();
  gpobs::AuditOptions o;
  o.pairs = 10;
  o.horizon = 40;
  const auto rep = gpobs::audit_guaranteed(sc.plant, market_fixture(sc), *sc.budget, o);
  CHECK(rep.violations > 0);
  CHECK(rep.violating_pairs == 10);
  CHECK(rep.worst > sc.budget->delta);
  const auto text = gpobs::format_audit_report(rep);
  CHECK(text.find("violations: ") != std::string::npos);
  CHECK(text.find("residual: ") != std::string::npos);
  std::ostringstream csv;
  gpobs::write_audit_csv(csv, rep);
  CHECK(csv.str().rfind("k,worst_distance,delta,violations\n", 0) == 0);
}

TEST_CASE("audit is deterministic") {
  const auto sc = support::market();
  const auto d = market_fixture(sc);
  gpobs::AuditOptions o;
  o.pairs = 5;
  o.horizon = 20;
  o.seed = 8;
  o.mode = AdjacencyMode::interior;
  const auto a = gpobs::audit_guaranteed(sc.plant, d, *sc.budget, o);
  const auto b = gpobs::audit_guaranteed(sc.plant, d, *sc.budget, o);
  CHECK(a.step_worst == b.step_worst);
  CHECK(a.worst_pair == b.worst_pair);
}

TEST_CASE("wide outputs fall back to the center-plus-width bound") {
  std::mt19937_64 gen(2);
  auto plant = support::random_plant(gen, 9, 2, 0.1);
  plant.a = 0.5 * Matrix::identity(9);
  plant.gamma = Matrix::identity(9);
  const auto d = gpobs::load_fixture_design(plant, Matrix(9, 2, 0.01), 1.0);
  gpobs::AuditOptions o;
  o.pairs = 3;
  o.horizon = 10;
  const auto rep = gpobs::audit_guaranteed(plant, d, gpobs::PrivacyBudget(0.0, 100.0, 0.1), o);
  CHECK_FALSE(rep.corner_exact);
  CHECK(gpobs::format_audit_report(rep).find("center-width") != std::string::npos);
}

TEST_CASE("input perturbation with zero scale reproduces the plain run") {
  const auto sc = support::market();
  const auto np = gpobs::simulate(sc.plant, gpobs::make_design(sc.fixture->gain, 1.0), 60, 4);
  const auto dp = gpobs::dp_baseline(sc.plant, sc.fixture->gain, 0.0, 60, 4);
  for (std::size_t k = 0; k < 60; ++k) {
    CHECK(dp.z_true[k] == np.z_true[k]);
    CHECK(std::abs(dp.z_lo[k][0] - np.z_lo[k][0]) <= 1e-12);
    CHECK(std::abs(dp.z_hi[k][0] - np.z_hi[k][0]) <= 1e-12);
  }
}

TEST_CASE("input perturbation widens the intervals and keeps containment") {
  const auto sc = support::market();
  const auto np = gpobs::simulate(sc.plant, gpobs::make_design(sc.fixture->gain, 1.0), 101, 1);
  const auto gp = gpobs::simulate(sc.plant, gpobs::make_design(sc.fixture->gain, sc.fixture->alpha), 101, 1);
  for (double s : {0.05, 1.0 / std::log(3.0), 2.0}) {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      const auto dp = gpobs::dp_baseline(sc.plant, sc.fixture->gain, s, 101, seed);
      CHECK(gpobs::check_containment(dp).worst_slack >= -1e-9);
      CHECK(dp.z_width(100)[0] > np.z_width(100)[0]);
    }
  }
  const auto dp = gpobs::dp_baseline(sc.plant, sc.fixture->gain, 1.0 / std::log(3.0), 101, 1);
  CHECK(gp.z_width(100)[0] < dp.z_width(100)[0]);
}

TEST_CASE("perturbation draws stay on their support") {
  const auto sc = support::market();
  gpobs::DpNoise noise(sc.plant, 0.3, 12);
  for (std::size_t k = 0; k < 200; ++k) {
    const auto draw = noise.draw(k);
    REQUIRE(draw.v.size() == 10);
    for (std::size_t i = 5; i < 10; ++i) CHECK(std::abs(draw.v[i]) <= 0.3);
  }
  const auto aug = gpobs::dp_augmented_plant(sc.plant, 0.3);
  CHECK(aug.n_v() == 10);
  CHECK(aug.v_bounds.lo[7] == -0.3);
  CHECK_THROWS_AS(gpobs::dp_augmented_plant(sc.plant, -1.0), gpobs::Error);
}
