#pragma once

// Small dense linear algebra for the bound computations. Every matrix in the
// library is at most kMaxDim x kMaxDim, so storage is a fixed inline array and
// nothing here allocates.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <limits>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "crllb/errors.hpp"

namespace crllb {

inline constexpr std::size_t kMaxDim = 8;

/// Singular-value cutoff used by invert(): |lambda_min| < kRcond * |lambda_max|.
inline constexpr double kRcond = 1e-12;

class Vector {
 public:
  Vector() = default;
  explicit Vector(std::size_t n, double fill = 0.0) : size_(checked(n)) {
    std::fill_n(data_.begin(), size_, fill);
  }
  Vector(std::initializer_list<double> values) : size_(checked(values.size())) {
    std::copy(values.begin(), values.end(), data_.begin());
  }
  explicit Vector(std::span<const double> values) : size_(checked(values.size())) {
    std::copy(values.begin(), values.end(), data_.begin());
  }

  std::size_t size() const { return size_; }
  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }
  double* begin() { return data_.data(); }
  double* end() { return data_.data() + size_; }
  const double* begin() const { return data_.data(); }
  const double* end() const { return data_.data() + size_; }
  std::span<const double> span() const { return {data_.data(), size_}; }

  Vector& operator+=(const Vector& o) {
    require_same(o);
    for (std::size_t i = 0; i < size_; ++i) data_[i] += o.data_[i];
    return *this;
  }
  Vector& operator-=(const Vector& o) {
    require_same(o);
    for (std::size_t i = 0; i < size_; ++i) data_[i] -= o.data_[i];
    return *this;
  }
  Vector& operator*=(double s) {
    for (std::size_t i = 0; i < size_; ++i) data_[i] *= s;
    return *this;
  }

  friend Vector operator+(Vector a, const Vector& b) { return a += b; }
  friend Vector operator-(Vector a, const Vector& b) { return a -= b; }
  friend Vector operator*(Vector a, double s) { return a *= s; }
  friend Vector operator*(double s, Vector a) { return a *= s; }
  friend Vector operator-(Vector a) { return a *= -1.0; }

  friend bool operator==(const Vector& a, const Vector& b) {
    return a.size_ == b.size_ && std::equal(a.begin(), a.end(), b.begin());
  }

 private:
  static std::size_t checked(std::size_t n) {
    if (n > kMaxDim) throw DimMismatch("vector dimension exceeds kMaxDim");
    return n;
  }
  void require_same(const Vector& o) const {
    if (o.size_ != size_) throw DimMismatch("vector size mismatch");
  }

  std::array<double, kMaxDim> data_{};
  std::size_t size_ = 0;
};

inline double dot(const Vector& a, const Vector& b) {
  if (a.size() != b.size()) throw DimMismatch("dot: size mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm(const Vector& v) { return std::sqrt(dot(v, v)); }

/// General rows x cols matrix, row-major.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols) {
    if (rows > kMaxDim || cols > kMaxDim) {
      throw DimMismatch("matrix dimension exceeds kMaxDim");
    }
    std::fill_n(data_.begin(), rows * cols, fill);
  }
  Matrix(std::initializer_list<std::initializer_list<double>> rows)
      : Matrix(rows.size(), rows.size() ? rows.begin()->size() : 0) {
    std::size_t i = 0;
    for (const auto& row : rows) {
      if (row.size() != cols_) throw DimMismatch("ragged matrix literal");
      std::size_t j = 0;
      for (double v : row) (*this)(i, j++) = v;
      ++i;
    }
  }

  static Matrix identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const {
    return data_[i * cols_ + j];
  }

  Matrix transpose() const {
    Matrix t(cols_, rows_);
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
    return t;
  }

  Matrix& operator+=(const Matrix& o) {
    require_same(o);
    for (std::size_t k = 0; k < rows_ * cols_; ++k) data_[k] += o.data_[k];
    return *this;
  }
  Matrix& operator-=(const Matrix& o) {
    require_same(o);
    for (std::size_t k = 0; k < rows_ * cols_; ++k) data_[k] -= o.data_[k];
    return *this;
  }
  Matrix& operator*=(double s) {
    for (std::size_t k = 0; k < rows_ * cols_; ++k) data_[k] *= s;
    return *this;
  }

  /// Adds s * a * b^T without forming the outer product.
  void add_outer(double s, const Vector& a, const Vector& b) {
    if (a.size() != rows_ || b.size() != cols_) {
      throw DimMismatch("add_outer: shape mismatch");
    }
    for (std::size_t i = 0; i < rows_; ++i) {
      const double sa = s * a[i];
      for (std::size_t j = 0; j < cols_; ++j) data_[i * cols_ + j] += sa * b[j];
    }
  }

  friend Matrix operator+(Matrix a, const Matrix& b) { return a += b; }
  friend Matrix operator-(Matrix a, const Matrix& b) { return a -= b; }
  friend Matrix operator*(Matrix a, double s) { return a *= s; }
  friend Matrix operator*(double s, Matrix a) { return a *= s; }

  friend Matrix operator*(const Matrix& a, const Matrix& b) {
    if (a.cols_ != b.rows_) throw DimMismatch("matrix product shape mismatch");
    Matrix c(a.rows_, b.cols_);
    for (std::size_t i = 0; i < a.rows_; ++i)
      for (std::size_t k = 0; k < a.cols_; ++k) {
        const double aik = a(i, k);
        for (std::size_t j = 0; j < b.cols_; ++j) c(i, j) += aik * b(k, j);
      }
    return c;
  }

  friend Vector operator*(const Matrix& a, const Vector& v) {
    if (a.cols_ != v.size()) throw DimMismatch("matrix-vector shape mismatch");
    Vector r(a.rows_);
    for (std::size_t i = 0; i < a.rows_; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < a.cols_; ++j) s += a(i, j) * v[j];
      r[i] = s;
    }
    return r;
  }

  friend bool operator==(const Matrix& a, const Matrix& b) {
    return a.rows_ == b.rows_ && a.cols_ == b.cols_ &&
           std::equal(a.data_.begin(), a.data_.begin() + a.rows_ * a.cols_,
                      b.data_.begin());
  }

 private:
  void require_same(const Matrix& o) const {
    if (o.rows_ != rows_ || o.cols_ != cols_) {
      throw DimMismatch("matrix shape mismatch");
    }
  }

  std::array<double, kMaxDim * kMaxDim> data_{};
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
};

inline Matrix outer(const Vector& a, const Vector& b) {
  Matrix m(a.size(), b.size());
  m.add_outer(1.0, a, b);
  return m;
}

inline double frobenius(const Matrix& m) {
  double s = 0.0;
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) s += m(i, j) * m(i, j);
  return std::sqrt(s);
}

/// Square symmetric matrix. Construction from an arbitrary square matrix
/// replaces (i,j) and (j,i) by their average, so entries are exactly
/// symmetric afterwards.
class SymMatrix {
 public:
  SymMatrix() = default;
  explicit SymMatrix(std::size_t n) : m_(n, n) {
    if (n == 0) throw DimMismatch("SymMatrix dimension must be >= 1");
  }
  explicit SymMatrix(const Matrix& m) : m_(m) {
    if (m.rows() != m.cols() || m.rows() == 0) {
      throw DimMismatch("SymMatrix requires a non-empty square matrix");
    }
    for (std::size_t i = 0; i < dim(); ++i)
      for (std::size_t j = i + 1; j < dim(); ++j) {
        const double avg = 0.5 * (m_(i, j) + m_(j, i));
        m_(i, j) = avg;
        m_(j, i) = avg;
      }
  }
  SymMatrix(std::initializer_list<std::initializer_list<double>> rows)
      : SymMatrix(Matrix(rows)) {}

  static SymMatrix identity(std::size_t n) { return SymMatrix(Matrix::identity(n)); }
  static SymMatrix scaled_identity(std::size_t n, double s) {
    return SymMatrix(Matrix::identity(n) * s);
  }
  static SymMatrix diagonal(std::span<const double> d) {
    Matrix m(d.size(), d.size());
    for (std::size_t i = 0; i < d.size(); ++i) m(i, i) = d[i];
    return SymMatrix(m);
  }

  std::size_t dim() const { return m_.rows(); }
  double operator()(std::size_t i, std::size_t j) const { return m_(i, j); }
  const Matrix& matrix() const { return m_; }
  operator const Matrix&() const { return m_; }  // NOLINT(google-explicit-constructor)

  friend SymMatrix operator+(const SymMatrix& a, const SymMatrix& b) {
    return SymMatrix(a.m_ + b.m_);
  }
  friend SymMatrix operator-(const SymMatrix& a, const SymMatrix& b) {
    return SymMatrix(a.m_ - b.m_);
  }
  friend SymMatrix operator*(const SymMatrix& a, double s) { return SymMatrix(a.m_ * s); }
  friend SymMatrix operator*(double s, const SymMatrix& a) { return SymMatrix(a.m_ * s); }
  friend bool operator==(const SymMatrix& a, const SymMatrix& b) { return a.m_ == b.m_; }

 private:
  Matrix m_;
};

inline double frobenius(const SymMatrix& m) { return frobenius(m.matrix()); }

inline bool is_symmetric(const Matrix& m) {
  if (m.rows() != m.cols()) return false;
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = i + 1; j < m.cols(); ++j)
      if (m(i, j) != m(j, i)) return false;
  return true;
}

struct EigenDecomposition {
  std::vector<double> values;  // ascending
  Matrix vectors;              // column k pairs with values[k]
};

/// Cyclic Jacobi eigen-decomposition of a symmetric matrix.
inline EigenDecomposition eigen_symmetric(const SymMatrix& s) {
  const std::size_t n = s.dim();
  Matrix a = s.matrix();
  Matrix v = Matrix::identity(n);

  auto off_norm = [&] {
    double off = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) off += a(i, j) * a(i, j);
    return std::sqrt(off);
  };
  const double scale = std::max(frobenius(a), std::numeric_limits<double>::min());

  for (int sweep = 0; sweep < 100 && off_norm() > 1e-17 * scale; ++sweep) {
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = std::copysign(1.0, theta) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double sn = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a(k, p);
          const double akq = a(k, q);
          a(k, p) = c * akp - sn * akq;
          a(k, q) = sn * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a(p, k);
          const double aqk = a(q, k);
          a(p, k) = c * apk - sn * aqk;
          a(q, k) = sn * apk + c * aqk;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = v(k, p);
          const double vkq = v(k, q);
          v(k, p) = c * vkp - sn * vkq;
          v(k, q) = sn * vkp + c * vkq;
        }
      }
    }
  }

  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](std::size_t i, std::size_t j) { return a(i, i) < a(j, j); });
  EigenDecomposition out{std::vector<double>(n), Matrix(n, n)};
  for (std::size_t k = 0; k < n; ++k) {
    out.values[k] = a(order[k], order[k]);
    for (std::size_t i = 0; i < n; ++i) out.vectors(i, k) = v(i, order[k]);
  }
  return out;
}

inline std::vector<double> eigenvalues(const SymMatrix& m) {
  return eigen_symmetric(m).values;
}

inline double min_eigenvalue(const SymMatrix& m) { return eigenvalues(m).front(); }

inline double max_eigenvalue(const SymMatrix& m) { return eigenvalues(m).back(); }

/// Inverse via the eigen-decomposition. Throws SingularMatrix when the
/// smallest eigenvalue magnitude is below kRcond times the largest.
inline SymMatrix invert(const SymMatrix& m) {
  const auto eig = eigen_symmetric(m);
  double lo = std::numeric_limits<double>::infinity();
  double hi = 0.0;
  for (double l : eig.values) {
    lo = std::min(lo, std::abs(l));
    hi = std::max(hi, std::abs(l));
  }
  if (!(hi > 0.0) || lo < kRcond * hi) {
    throw SingularMatrix("matrix is singular (|lambda_min| = " + std::to_string(lo) +
                         ", |lambda_max| = " + std::to_string(hi) + ")");
  }
  const std::size_t n = m.dim();
  Matrix inv(n, n);
  for (std::size_t k = 0; k < n; ++k) {
    const double w = 1.0 / eig.values[k];
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        inv(i, j) += w * eig.vectors(i, k) * eig.vectors(j, k);
  }
  return SymMatrix(inv);
}

/// a >= b in the Loewner order, up to an absolute eigenvalue slack `tol`.
inline bool loewner_geq(const SymMatrix& a, const SymMatrix& b, double tol) {
  if (a.dim() != b.dim()) throw DimMismatch("loewner_geq: dimension mismatch");
  return min_eigenvalue(a - b) >= -tol;
}

/// A^T S A, symmetrized.
inline SymMatrix congruence(const Matrix& a, const SymMatrix& s) {
  return SymMatrix(a.transpose() * s.matrix() * a);
}

inline std::ostream& operator<<(std::ostream& os, const Matrix& m) {
  os << '[';
  for (std::size_t i = 0; i < m.rows(); ++i) {
    os << (i ? "; " : "");
    for (std::size_t j = 0; j < m.cols(); ++j) os << (j ? ", " : "") << m(i, j);
  }
  return os << ']';
}

inline std::ostream& operator<<(std::ostream& os, const SymMatrix& m) {
  return os << m.matrix();
}

inline std::ostream& operator<<(std::ostream& os, const Vector& v) {
  os << '(';
  for (std::size_t i = 0; i < v.size(); ++i) os << (i ? ", " : "") << v[i];
  return os << ')';
}

}  // namespace crllb
