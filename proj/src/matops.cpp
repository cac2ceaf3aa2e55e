#include "gpobs/matops.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <string>

#include "gpobs/error.hpp"

namespace gpobs {

namespace {

void require_same_shape(const Matrix& a, const Matrix& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw Error(ErrorCode::dimension_mismatch,
                std::string(op) + ": " + std::to_string(a.rows()) + "x" +
                    std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" +
                    std::to_string(b.cols()));
  }
}

std::string shape(const Matrix& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

Matrix symmetrized(const Matrix& s) {
  if (!s.square()) throw Error(ErrorCode::dimension_mismatch, "symmetric matrix must be square, got " + shape(s));
  const double scale = std::max(1.0, s.max_abs());
  Matrix out(s.rows(), s.cols());
  for (std::size_t i = 0; i < s.rows(); ++i) {
    for (std::size_t j = 0; j < s.cols(); ++j) {
      if (std::abs(s(i, j) - s(j, i)) > 1e-9 * scale) {
        throw Error(ErrorCode::invalid_argument,
                    "matrix is not symmetric at (" + std::to_string(i) + "," + std::to_string(j) + ")");
      }
      out(i, j) = 0.5 * (s(i, j) + s(j, i));
    }
  }
  return out;
}

Matrix gram(const Matrix& m) {
  // Smaller of M^T M and M M^T.
  const bool tall = m.rows() >= m.cols();
  const std::size_t k = tall ? m.cols() : m.rows();
  Matrix g(k, k);
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = i; j < k; ++j) {
      double acc = 0.0;
      if (tall) {
        for (std::size_t r = 0; r < m.rows(); ++r) acc += m(r, i) * m(r, j);
      } else {
        for (std::size_t c = 0; c < m.cols(); ++c) acc += m(i, c) * m(j, c);
      }
      g(i, j) = acc;
      g(j, i) = acc;
    }
  }
  return g;
}

// Perron root of an irreducible nonnegative block (at least 2x2) by power
// iteration on the primitive matrix M/r + I with Collatz-Wielandt brackets.
double perron_irreducible(const Matrix& m) {
  const std::size_t n = m.rows();
  double r = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j) s += m(i, j);
    r = std::max(r, s);
  }
  if (r == 0.0) return 0.0;

  Vector x(n, 1.0), y(n);
  double lower = 0.0, upper = 0.0;
  constexpr int kMaxIterations = 200000;
  for (int it = 0; it < kMaxIterations; ++it) {
    for (std::size_t i = 0; i < n; ++i) {
      double acc = x[i];
      for (std::size_t j = 0; j < n; ++j) acc += (m(i, j) / r) * x[j];
      y[i] = acc;
    }
    lower = std::numeric_limits<double>::infinity();
    upper = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double q = y[i] / x[i];
      lower = std::min(lower, q);
      upper = std::max(upper, q);
    }
    const double tol = std::max(1e-12 * (lower - 1.0), 4e-16 * upper);
    if (upper - lower <= tol) break;
    const double ymax = *std::max_element(y.begin(), y.end());
    for (std::size_t i = 0; i < n; ++i) x[i] = y[i] / ymax;
  }
  return r * (0.5 * (lower + upper) - 1.0);
}

// Strongly connected components of the sparsity graph (Tarjan).
std::vector<std::vector<std::size_t>> strong_components(const Matrix& m) {
  const std::size_t n = m.rows();
  std::vector<int> index(n, -1), low(n, 0);
  std::vector<bool> on_stack(n, false);
  std::vector<std::size_t> stack;
  std::vector<std::vector<std::size_t>> components;
  int counter = 0;

  std::function<void(std::size_t)> visit = [&](std::size_t v) {
    index[v] = low[v] = counter++;
    stack.push_back(v);
    on_stack[v] = true;
    for (std::size_t w = 0; w < n; ++w) {
      if (m(v, w) == 0.0) continue;
      if (index[w] < 0) {
        visit(w);
        low[v] = std::min(low[v], low[w]);
      } else if (on_stack[w]) {
        low[v] = std::min(low[v], index[w]);
      }
    }
    if (low[v] == index[v]) {
      std::vector<std::size_t> comp;
      std::size_t w;
      do {
        w = stack.back();
        stack.pop_back();
        on_stack[w] = false;
        comp.push_back(w);
      } while (w != v);
      std::sort(comp.begin(), comp.end());
      components.push_back(std::move(comp));
    }
  };
  for (std::size_t v = 0; v < n; ++v) {
    if (index[v] < 0) visit(v);
  }
  return components;
}

}  // namespace

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows) {
  rows_ = rows.size();
  cols_ = rows_ == 0 ? 0 : rows.begin()->size();
  data_.reserve(rows_ * cols_);
  for (const auto& r : rows) {
    if (r.size() != cols_) throw Error(ErrorCode::dimension_mismatch, "ragged matrix literal");
    data_.insert(data_.end(), r.begin(), r.end());
  }
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::diagonal(std::span<const double> d) {
  Matrix m(d.size(), d.size());
  for (std::size_t i = 0; i < d.size(); ++i) m(i, i) = d[i];
  return m;
}

Matrix Matrix::transposed() const {
  Matrix t(cols_, rows_);
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
  return t;
}

double Matrix::max_abs() const {
  double m = 0.0;
  for (double v : data_) m = std::max(m, std::abs(v));
  return m;
}

bool Matrix::is_nonnegative() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return v >= 0.0; });
}

bool Matrix::is_diagonal() const {
  if (!square()) return false;
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = 0; j < cols_; ++j)
      if (i != j && (*this)(i, j) != 0.0) return false;
  return true;
}

bool Matrix::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

Matrix& Matrix::operator+=(const Matrix& other) {
  require_same_shape(*this, other, "matrix +");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
  return *this;
}

Matrix& Matrix::operator-=(const Matrix& other) {
  require_same_shape(*this, other, "matrix -");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= other.data_[i];
  return *this;
}

Matrix& Matrix::operator*=(double s) {
  for (double& v : data_) v *= s;
  return *this;
}

Matrix operator+(Matrix a, const Matrix& b) { return a += b; }
Matrix operator-(Matrix a, const Matrix& b) { return a -= b; }
Matrix operator*(Matrix a, double s) { return a *= s; }
Matrix operator*(double s, Matrix a) { return a *= s; }

Matrix operator*(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) {
    throw Error(ErrorCode::dimension_mismatch, "matrix product " + shape(a) + " * " + shape(b));
  }
  Matrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      for (std::size_t j = 0; j < b.cols(); ++j) c(i, j) += aik * b(k, j);
    }
  }
  return c;
}

Vector operator*(const Matrix& a, std::span<const double> x) {
  if (a.cols() != x.size()) {
    throw Error(ErrorCode::dimension_mismatch,
                "matrix-vector product " + shape(a) + " * " + std::to_string(x.size()));
  }
  Vector y(a.rows(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < a.cols(); ++j) acc += a(i, j) * x[j];
    y[i] = acc;
  }
  return y;
}

Matrix hstack(const Matrix& left, const Matrix& right) {
  if (left.rows() != right.rows()) {
    throw Error(ErrorCode::dimension_mismatch, "hstack " + shape(left) + " | " + shape(right));
  }
  Matrix out(left.rows(), left.cols() + right.cols());
  for (std::size_t i = 0; i < left.rows(); ++i) {
    for (std::size_t j = 0; j < left.cols(); ++j) out(i, j) = left(i, j);
    for (std::size_t j = 0; j < right.cols(); ++j) out(i, left.cols() + j) = right(i, j);
  }
  return out;
}

Matrix vstack(const Matrix& top, const Matrix& bottom) {
  if (top.cols() != bottom.cols()) {
    throw Error(ErrorCode::dimension_mismatch, "vstack " + shape(top) + " / " + shape(bottom));
  }
  Matrix out(top.rows() + bottom.rows(), top.cols());
  for (std::size_t i = 0; i < top.rows(); ++i)
    for (std::size_t j = 0; j < top.cols(); ++j) out(i, j) = top(i, j);
  for (std::size_t i = 0; i < bottom.rows(); ++i)
    for (std::size_t j = 0; j < bottom.cols(); ++j) out(top.rows() + i, j) = bottom(i, j);
  return out;
}

Matrix abs(const Matrix& m) {
  Matrix out(m.rows(), m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) out(i, j) = std::abs(m(i, j));
  return out;
}

Matrix power(const Matrix& m, std::size_t k) {
  if (!m.square()) throw Error(ErrorCode::dimension_mismatch, "power of non-square " + shape(m));
  Matrix out = Matrix::identity(m.rows());
  for (std::size_t i = 0; i < k; ++i) out = out * m;
  return out;
}

Vector add(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw Error(ErrorCode::dimension_mismatch, "vector add length mismatch");
  Vector out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + b[i];
  return out;
}

Vector sub(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw Error(ErrorCode::dimension_mismatch, "vector sub length mismatch");
  Vector out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] - b[i];
  return out;
}

Vector scaled(std::span<const double> a, double s) {
  Vector out(a.begin(), a.end());
  for (double& v : out) v *= s;
  return out;
}

Vector concat(std::span<const double> a, std::span<const double> b) {
  Vector out(a.begin(), a.end());
  out.insert(out.end(), b.begin(), b.end());
  return out;
}

double norm2(std::span<const double> v) {
  double acc = 0.0;
  for (double x : v) acc += x * x;
  return std::sqrt(acc);
}

double norm_inf(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

MatrixSplit split(const Matrix& m) {
  MatrixSplit s{Matrix(m.rows(), m.cols()), Matrix(m.rows(), m.cols()), Matrix(m.rows(), m.cols())};
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = 0; j < m.cols(); ++j) {
      const double v = m(i, j);
      s.plus(i, j) = v > 0.0 ? v : 0.0;
      s.minus(i, j) = v < 0.0 ? -v : 0.0;
      s.abs(i, j) = s.plus(i, j) + s.minus(i, j);
    }
  }
  return s;
}

std::pair<Vector, Vector> interval_mat_vec(const Matrix& a, std::span<const double> lo,
                                           std::span<const double> hi) {
  if (lo.size() != a.cols() || hi.size() != a.cols()) {
    throw Error(ErrorCode::dimension_mismatch, "interval_mat_vec: matrix " + shape(a) +
                                                   " with interval of length " +
                                                   std::to_string(lo.size()));
  }
  for (std::size_t j = 0; j < lo.size(); ++j) {
    if (!(lo[j] <= hi[j])) {
      throw Error(ErrorCode::invalid_argument,
                  "interval_mat_vec: lo > hi at index " + std::to_string(j));
    }
  }
  Vector out_lo(a.rows(), 0.0), out_hi(a.rows(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    double l = 0.0, h = 0.0;
    for (std::size_t j = 0; j < a.cols(); ++j) {
      const double v = a(i, j);
      if (v >= 0.0) {
        l += v * lo[j];
        h += v * hi[j];
      } else {
        l += v * hi[j];
        h += v * lo[j];
      }
    }
    out_lo[i] = l;
    out_hi[i] = h;
  }
  return {out_lo, out_hi};
}

SymmetricEigen sym_eig(const Matrix& s_in) {
  Matrix a = symmetrized(s_in);
  const std::size_t n = a.rows();
  Matrix v = Matrix::identity(n);

  double frob = 0.0;
  for (double x : a.data()) frob += x * x;
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
    if (off <= 1e-32 * frob || off == 0.0) break;

    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }

  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return a(x, x) < a(y, y); });
  SymmetricEigen out{Vector(n), Matrix(n, n)};
  for (std::size_t j = 0; j < n; ++j) {
    out.values[j] = a(order[j], order[j]);
    for (std::size_t k = 0; k < n; ++k) out.vectors(k, j) = v(k, order[j]);
  }
  return out;
}

double sym_eig_min(const Matrix& s) {
  if (s.empty()) throw Error(ErrorCode::dimension_mismatch, "sym_eig_min of empty matrix");
  return sym_eig(s).values.front();
}

bool cholesky_positive(const Matrix& s_in) {
  const Matrix s = symmetrized(s_in);
  const std::size_t n = s.rows();
  Matrix l(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    double d = s(j, j);
    for (std::size_t k = 0; k < j; ++k) d -= l(j, k) * l(j, k);
    if (!(d > 0.0)) return false;
    l(j, j) = std::sqrt(d);
    for (std::size_t i = j + 1; i < n; ++i) {
      double acc = s(i, j);
      for (std::size_t k = 0; k < j; ++k) acc -= l(i, k) * l(j, k);
      l(i, j) = acc / l(j, j);
    }
  }
  return true;
}

double sigma_max(const Matrix& m) {
  if (m.empty()) return 0.0;
  const double top = sym_eig(gram(m)).values.back();
  return std::sqrt(std::max(top, 0.0));
}

double sigma_min(const Matrix& m) {
  if (m.empty()) return 0.0;
  const double bottom = sym_eig(gram(m)).values.front();
  return std::sqrt(std::max(bottom, 0.0));
}

double spectral_radius_nonneg(const Matrix& m) {
  if (!m.square()) throw Error(ErrorCode::dimension_mismatch, "spectral radius of non-square " + shape(m));
  if (!m.is_nonnegative()) {
    throw Error(ErrorCode::invalid_argument, "spectral_radius_nonneg: matrix has a negative entry");
  }
  double rho = 0.0;
  for (const auto& comp : strong_components(m)) {
    if (comp.size() == 1) {
      rho = std::max(rho, m(comp[0], comp[0]));
      continue;
    }
    Matrix block(comp.size(), comp.size());
    for (std::size_t i = 0; i < comp.size(); ++i)
      for (std::size_t j = 0; j < comp.size(); ++j) block(i, j) = m(comp[i], comp[j]);
    rho = std::max(rho, perron_irreducible(block));
  }
  return rho;
}

double spectral_radius_estimate(const Matrix& m) {
  if (!m.square()) throw Error(ErrorCode::dimension_mismatch, "spectral radius of non-square " + shape(m));
  auto frob = [](const Matrix& x) {
    double acc = 0.0;
    for (double v : x.data()) acc += v * v;
    return std::sqrt(acc);
  };
  double nrm = frob(m);
  if (nrm == 0.0) return 0.0;
  Matrix s = m * (1.0 / nrm);
  double log_c = std::log(nrm);
  double exponent = 1.0;
  for (int j = 0; j < 48; ++j) {
    Matrix sq = s * s;
    const double t = frob(sq);
    if (t == 0.0) return 0.0;
    s = sq * (1.0 / t);
    log_c = 2.0 * log_c + std::log(t);
    exponent *= 2.0;
  }
  return std::exp(log_c / exponent);
}

Matrix solve(const Matrix& a_in, const Matrix& b_in) {
  if (!a_in.square()) throw Error(ErrorCode::dimension_mismatch, "solve: non-square " + shape(a_in));
  if (b_in.rows() != a_in.rows()) {
    throw Error(ErrorCode::dimension_mismatch, "solve: " + shape(a_in) + " with rhs " + shape(b_in));
  }
  const std::size_t n = a_in.rows();
  Matrix a = a_in;
  Matrix x = b_in;
  Vector row_scale(n);
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j) s = std::max(s, std::abs(a(i, j)));
    row_scale[i] = s;
  }

  for (std::size_t k = 0; k < n; ++k) {
    std::size_t p = k;
    for (std::size_t i = k + 1; i < n; ++i)
      if (std::abs(a(i, k)) > std::abs(a(p, k))) p = i;
    if (!(std::abs(a(p, k)) > 1e-12 * row_scale[p])) {
      throw Error(ErrorCode::singular, "solve: matrix is singular to tolerance at pivot " + std::to_string(k));
    }
    if (p != k) {
      for (std::size_t j = 0; j < n; ++j) std::swap(a(p, j), a(k, j));
      for (std::size_t j = 0; j < x.cols(); ++j) std::swap(x(p, j), x(k, j));
      std::swap(row_scale[p], row_scale[k]);
    }
    for (std::size_t i = k + 1; i < n; ++i) {
      const double f = a(i, k) / a(k, k);
      if (f == 0.0) continue;
      a(i, k) = 0.0;
      for (std::size_t j = k + 1; j < n; ++j) a(i, j) -= f * a(k, j);
      for (std::size_t j = 0; j < x.cols(); ++j) x(i, j) -= f * x(k, j);
    }
  }
  for (std::size_t kk = n; kk-- > 0;) {
    for (std::size_t j = 0; j < x.cols(); ++j) {
      double acc = x(kk, j);
      for (std::size_t c = kk + 1; c < n; ++c) acc -= a(kk, c) * x(c, j);
      x(kk, j) = acc / a(kk, kk);
    }
  }
  return x;
}

}  // namespace gpobs
