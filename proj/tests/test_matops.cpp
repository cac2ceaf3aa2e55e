#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include "gpobs/error.hpp"
#include "gpobs/matops.hpp"
#include "gpobs/synthesis.hpp"
#include "oracles.hpp"
#include "support.hpp"

using gpobs::Matrix;

TEST_CASE("split of a mixed-sign matrix") {
  const auto s = gpobs::split(Matrix{{1, -2}, {0, 3}});
  CHECK(s.plus == Matrix{{1, 0}, {0, 3}});
  CHECK(s.minus == Matrix{{0, 2}, {0, 0}});
  CHECK(s.abs == Matrix{{1, 2}, {0, 3}});
}

TEST_CASE("split of nonnegative and nonpositive matrices") {
  const Matrix m{{0.5, 2}, {0, 7}};
  auto s = gpobs::split(m);
  CHECK(s.plus == m);
  CHECK(s.minus == Matrix(2, 2));
  s = gpobs::split(-1.0 * m);
  CHECK(s.plus == Matrix(2, 2));
  CHECK(s.minus == m);
}

TEST_CASE("split identities hold exactly on random matrices") {
  std::mt19937_64 gen(11);
  for (int t = 0; t < 50; ++t) {
    const Matrix m = support::random_matrix(gen, 4, 5, -3, 3);
    const auto s = gpobs::split(m);
    CHECK(s.plus - s.minus == m);
    CHECK(s.plus + s.minus == s.abs);
    CHECK(s.plus.is_nonnegative());
    CHECK(s.minus.is_nonnegative());
    for (std::size_t i = 0; i < 4; ++i)
      for (std::size_t j = 0; j < 5; ++j) CHECK(s.abs(i, j) == std::abs(m(i, j)));
  }
}

TEST_CASE("interval_mat_vec on a single row") {
  const auto [lo, hi] = gpobs::interval_mat_vec(Matrix{{1, -1}}, std::vector{0.0, 0.0}, std::vector{1.0, 1.0});
  CHECK(lo == gpobs::Vector{-1.0});
  CHECK(hi == gpobs::Vector{1.0});
}

TEST_CASE("interval_mat_vec with a nonnegative matrix maps the corners") {
  const Matrix a{{1, 2}, {0, 3}};
  const gpobs::Vector l{-1, 2}, h{1, 4};
  const auto [lo, hi] = gpobs::interval_mat_vec(a, l, h);
  CHECK(lo == a * l);
  CHECK(hi == a * h);
}

TEST_CASE("interval_mat_vec contains sampled images") {
  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const Matrix a = support::random_matrix(gen, 3, 3, -2, 2);
  const gpobs::Vector l{-1, 0.5, -3}, h{2, 0.75, -1};
  const auto [lo, hi] = gpobs::interval_mat_vec(a, l, h);
  for (int s = 0; s < 10000; ++s) {
    gpobs::Vector x(3);
    for (int i = 0; i < 3; ++i) x[i] = l[i] + (h[i] - l[i]) * u(gen);
    const auto y = a * x;
    for (int i = 0; i < 3; ++i) {
      CHECK(y[i] >= lo[i] - 1e-12);
      CHECK(y[i] <= hi[i] + 1e-12);
    }
  }
}

TEST_CASE("interval_mat_vec rejects bad inputs") {
  const Matrix row{{1, 1}}, one{{1}};
  const gpobs::Vector zero{0.0}, unit{1.0}, two{2.0};
  CHECK_THROWS_AS(gpobs::interval_mat_vec(row, zero, unit), gpobs::Error);
  CHECK_THROWS_AS(gpobs::interval_mat_vec(one, two, unit), gpobs::Error);
}

TEST_CASE("sigma_max reference values") {
  CHECK(gpobs::sigma_max(Matrix::identity(4)) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(gpobs::sigma_max(Matrix{{1, 1, 1, 1, 1}}) == doctest::Approx(std::sqrt(5.0)).epsilon(1e-12));
}

TEST_CASE("sigma_max agrees with power iteration and is transpose and scale consistent") {
  std::mt19937_64 gen(21);
  for (int t = 0; t < 20; ++t) {
    const Matrix m = support::random_matrix(gen, 4, 6, -1, 1);
    const double s = gpobs::sigma_max(m);
    CHECK(std::abs(s - oracle::sigma_max_power(oracle::to_dense(m))) <= 1e-8 * s);
    CHECK(gpobs::sigma_max(m.transposed()) == doctest::Approx(s).epsilon(1e-10));
    CHECK(gpobs::sigma_max(-2.5 * m) == doctest::Approx(2.5 * s).epsilon(1e-10));
  }
}

TEST_CASE("spectral_radius_nonneg reference values") {
  CHECK(gpobs::spectral_radius_nonneg(Matrix{{0.5, 0}, {0, 0.2}}) == doctest::Approx(0.5).epsilon(1e-10));
  CHECK(gpobs::spectral_radius_nonneg(Matrix{{0, 1}, {1, 0}}) == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(gpobs::spectral_radius_nonneg(Matrix{{0, 1}, {0, 0}}) == doctest::Approx(0.0));
  const Matrix negative{{0, -1}, {1, 0}}, wide{{0, 1}};
  CHECK_THROWS_AS(gpobs::spectral_radius_nonneg(negative), gpobs::Error);
  CHECK_THROWS_AS(gpobs::spectral_radius_nonneg(wide), gpobs::Error);
}

TEST_CASE("spectral radius of the market closed loop matches the characteristic polynomial") {
  const auto sc = support::market();
  const Matrix at = gpobs::abs(sc.plant.a - sc.fixture->gain * sc.plant.c);
  const double r = gpobs::spectral_radius_nonneg(at);
  CHECK(r < 1.0);
  CHECK(std::abs(r - oracle::spectral_radius_charpoly(oracle::to_dense(at))) <= 1e-10 * r);
}

TEST_CASE("spectral_radius_nonneg on random nonnegative matrices, including reducible ones") {
  std::mt19937_64 gen(8);
  for (int t = 0; t < 40; ++t) {
    const std::size_t n = 2 + t % 5;
    Matrix m = support::random_matrix(gen, n, n, 0, 1);
    if (t % 2) {
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < i; ++j) m(i, j) = 0.0;  // upper triangular, reducible
    }
    const double r = gpobs::spectral_radius_nonneg(m);
    CHECK(std::abs(r - oracle::spectral_radius_charpoly(oracle::to_dense(m))) <= 1e-8 * std::max(r, 1.0));
    Matrix bigger = m;
    bigger(0, n - 1) += 0.3;
    CHECK(gpobs::spectral_radius_nonneg(bigger) >= r - 1e-12);
  }
}

TEST_CASE("spectral_radius_estimate follows the modulus of complex eigenvalues") {
  const Matrix rot{{0.0, -0.8}, {0.8, 0.0}};
  CHECK(gpobs::spectral_radius_estimate(rot) == doctest::Approx(0.8).epsilon(1e-8));
  CHECK(gpobs::spectral_radius_estimate(Matrix{{1.2, 5.0}, {0.0, 0.3}}) == doctest::Approx(1.2).epsilon(1e-6));
}

TEST_CASE("sym_eig_min reference values") {
  CHECK(gpobs::sym_eig_min(Matrix::identity(3)) == doctest::Approx(1.0));
  CHECK(gpobs::sym_eig_min(Matrix{{3, 0, 0}, {0, -2, 0}, {0, 0, 5}}) == doctest::Approx(-2.0));
  const Matrix asym{{1, 2}, {0, 1}};
  CHECK_THROWS_AS(gpobs::sym_eig_min(asym), gpobs::Error);
}

TEST_CASE("sym_eig_min agrees with inertia bisection and with the Cholesky test") {
  std::mt19937_64 gen(3);
  for (int t = 0; t < 30; ++t) {
    Matrix b = support::random_matrix(gen, 8, 8, -1, 1);
    Matrix s = b + b.transposed();
    for (std::size_t i = 0; i < 8; ++i) s(i, i) += (t % 3) * 1.5;
    const double lmin = gpobs::sym_eig_min(s);
    CHECK(std::abs(lmin - oracle::sym_min_eig_bisect(oracle::to_dense(s))) <= 1e-8);
    CHECK((lmin > 0.0) == gpobs::cholesky_positive(s));
  }
}

TEST_CASE("sym_eig returns an orthonormal eigenbasis") {
  std::mt19937_64 gen(4);
  Matrix b = support::random_matrix(gen, 5, 5, -1, 1);
  const Matrix s = b + b.transposed();
  const auto e = gpobs::sym_eig(s);
  const Matrix recon = e.vectors * Matrix::diagonal(e.values) * e.vectors.transposed();
  CHECK((recon - s).max_abs() < 1e-10);
  CHECK((e.vectors.transposed() * e.vectors - Matrix::identity(5)).max_abs() < 1e-10);
  for (std::size_t i = 1; i < 5; ++i) CHECK(e.values[i - 1] <= e.values[i]);
}

TEST_CASE("solve reference values") {
  const Matrix b{{1, 2}, {3, 4}};
  CHECK(gpobs::solve(Matrix::identity(2), b) == b);
  CHECK((gpobs::solve(2.0 * Matrix::identity(3), Matrix::identity(3)) - 0.5 * Matrix::identity(3)).max_abs() == 0.0);
}

TEST_CASE("solve reports the singular pivot") {
  try {
    gpobs::solve(Matrix{{1, 2}, {2, 4}}, Matrix::identity(2));
    FAIL("expected a singular matrix error");
  } catch (const gpobs::Error& e) {
    CHECK(e.code() == gpobs::ErrorCode::singular);
    CHECK(std::string(e.what()).find("pivot 1") != std::string::npos);
  }
}

TEST_CASE("resolvent of the market error system passes the residual check") {
  const auto sc = support::market();
  const Matrix at = gpobs::abs(sc.plant.a - sc.fixture->gain * sc.plant.c);
  const Matrix lhs = Matrix::identity(5) - at;
  const Matrix rhs = Matrix::identity(5);
  const Matrix x = gpobs::solve(lhs, rhs);
  CHECK((lhs * x - rhs).max_abs() <= 1e-9 * rhs.max_abs());
  const auto inv = oracle::inverse(oracle::to_dense(lhs));
  CHECK((x - oracle::from_dense(inv)).max_abs() < 1e-10);
}

TEST_CASE("matrix helpers") {
  CHECK(gpobs::power(Matrix{{0, 1}, {0, 0}}, 2) == Matrix(2, 2));
  CHECK(gpobs::power(Matrix{{2}}, 0) == Matrix{{1}});
  CHECK(gpobs::hstack(Matrix{{1}}, Matrix{{2, 3}}) == Matrix{{1, 2, 3}});
  CHECK(gpobs::vstack(Matrix{{1}}, Matrix{{2}}) == Matrix{{1}, {2}});
  const Matrix one{{1}}, square{{1, 2}, {3, 4}};
  CHECK_THROWS_AS(one * square, gpobs::Error);
  CHECK(gpobs::norm2(std::vector{3.0, 4.0}) == 5.0);
  CHECK(gpobs::norm_inf(std::vector{-7.0, 4.0}) == 7.0);
}
