#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <utility>
#include <vector>

namespace gpobs {

using Vector = std::vector<double>;

/// Dense row-major real matrix.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  Matrix(std::initializer_list<std::initializer_list<double>> rows);

  static Matrix identity(std::size_t n);
  static Matrix diagonal(std::span<const double> d);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool empty() const noexcept { return rows_ == 0 || cols_ == 0; }
  bool square() const noexcept { return rows_ == cols_; }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  std::span<double> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }
  std::span<const double> row(std::size_t i) const { return {data_.data() + i * cols_, cols_}; }
  std::span<const double> data() const noexcept { return data_; }

  Matrix transposed() const;
  double max_abs() const;
  bool is_nonnegative() const;
  bool is_diagonal() const;
  bool all_finite() const;

  Matrix& operator+=(const Matrix& other);
  Matrix& operator-=(const Matrix& other);
  Matrix& operator*=(double s);

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

Matrix operator+(Matrix a, const Matrix& b);
Matrix operator-(Matrix a, const Matrix& b);
Matrix operator*(Matrix a, double s);
Matrix operator*(double s, Matrix a);
Matrix operator*(const Matrix& a, const Matrix& b);
Vector operator*(const Matrix& a, std::span<const double> x);

Matrix hstack(const Matrix& left, const Matrix& right);
Matrix vstack(const Matrix& top, const Matrix& bottom);
Matrix abs(const Matrix& m);
Matrix power(const Matrix& m, std::size_t k);

Vector add(std::span<const double> a, std::span<const double> b);
Vector sub(std::span<const double> a, std::span<const double> b);
Vector scaled(std::span<const double> a, double s);
Vector concat(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> v);
double norm_inf(std::span<const double> v);

/// Entrywise positive part, negative part and absolute value of a matrix.
/// plus - minus == original and abs == plus + minus hold exactly.
struct MatrixSplit {
  Matrix plus;
  Matrix minus;
  Matrix abs;
};

MatrixSplit split(const Matrix& m);

/// Tight interval image of {A x : lo <= x <= hi}:
/// (A+ lo - A- hi, A+ hi - A- lo).
std::pair<Vector, Vector> interval_mat_vec(const Matrix& a, std::span<const double> lo,
                                           std::span<const double> hi);

/// Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.
/// values ascending; column j of vectors is the eigenvector for values[j].
struct SymmetricEigen {
  Vector values;
  Matrix vectors;
};

/// Asymmetry beyond 1e-9 (relative to the largest entry) is rejected.
SymmetricEigen sym_eig(const Matrix& s);
double sym_eig_min(const Matrix& s);

/// True iff an unpivoted Cholesky factorization succeeds with every pivot > 0.
bool cholesky_positive(const Matrix& s);

/// Positive-definiteness margin used for strict matrix inequalities.
inline constexpr double kDefiniteMargin = 1e-9;

double sigma_max(const Matrix& m);
double sigma_min(const Matrix& m);

/// Perron root of an entrywise nonnegative square matrix.
double spectral_radius_nonneg(const Matrix& m);

/// Spectral radius of an arbitrary square matrix estimated as
/// ||M^(2^j)||^(1/2^j) with renormalized repeated squaring.
double spectral_radius_estimate(const Matrix& m);

/// Solves A X = B by LU with partial pivoting.
Matrix solve(const Matrix& a, const Matrix& b);

}  // namespace gpobs
