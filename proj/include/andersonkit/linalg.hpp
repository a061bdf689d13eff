#pragma once

// Dense real linear algebra used by the solvers and the diagnostics:
// finite-valued vectors and matrices, Householder QR with column pivoting,
// minimum-norm least squares, and Gram-Schmidt basis extension.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace andersonkit {

/// Raised for dimension mismatches and violated preconditions.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when a value that must be finite is NaN or infinite.
class NonFiniteError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

inline constexpr double default_dep_tol = 1e-10;
inline constexpr double default_rank_tol = 1e-10;

namespace detail {

inline void require_finite(std::span<const double> data, const char* what) {
  for (double v : data) {
    if (!std::isfinite(v)) {
      throw NonFiniteError(std::string(what) + ": non-finite entry");
    }
  }
}

}  // namespace detail

/// Fixed-length vector of finite reals.
class RealVector {
 public:
  explicit RealVector(std::vector<double> entries) : data_(std::move(entries)) {
    if (data_.empty()) throw DimensionError("RealVector: length must be >= 1");
    detail::require_finite(data_, "RealVector");
  }
  RealVector(std::initializer_list<double> entries) : RealVector(std::vector<double>(entries)) {}

  static RealVector zeros(std::size_t n) { return RealVector(std::vector<double>(n, 0.0)); }
  static RealVector unit(std::size_t n, std::size_t k) {
    if (k >= n) throw DimensionError("RealVector::unit: index out of range");
    std::vector<double> e(n, 0.0);
    e[k] = 1.0;
    return RealVector(std::move(e));
  }

  std::size_t size() const noexcept { return data_.size(); }
  double operator[](std::size_t i) const { return data_[i]; }
  std::span<const double> values() const noexcept { return data_; }
  const std::vector<double>& std_vector() const noexcept { return data_; }

  bool operator==(const RealVector&) const = default;

 private:
  std::vector<double> data_;
};

inline void require_same_size(const RealVector& u, const RealVector& v, const char* what) {
  if (u.size() != v.size()) {
    throw DimensionError(std::string(what) + ": length mismatch (" + std::to_string(u.size()) +
                         " vs " + std::to_string(v.size()) + ")");
  }
}

inline double dot(const RealVector& u, const RealVector& v) {
  require_same_size(u, v, "dot");
  double s = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) s += u[i] * v[i];
  return s;
}

/// Euclidean norm, scaled to avoid overflow for large entries.
inline double norm2(const RealVector& v) {
  double scale = 0.0;
  for (double x : v.values()) scale = std::max(scale, std::abs(x));
  if (scale == 0.0) return 0.0;
  double s = 0.0;
  for (double x : v.values()) {
    const double t = x / scale;
    s += t * t;
  }
  return scale * std::sqrt(s);
}

/// Returns a*x + y.
inline RealVector axpy(double a, const RealVector& x, const RealVector& y) {
  require_same_size(x, y, "axpy");
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = a * x[i] + y[i];
  return RealVector(std::move(out));
}

inline RealVector operator+(const RealVector& u, const RealVector& v) { return axpy(1.0, u, v); }

inline RealVector operator-(const RealVector& u, const RealVector& v) {
  require_same_size(u, v, "operator-");
  std::vector<double> out(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) out[i] = u[i] - v[i];
  return RealVector(std::move(out));
}

inline RealVector operator*(double a, const RealVector& v) {
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = a * v[i];
  return RealVector(std::move(out));
}

/// Row-major dense matrix of finite reals.
class DenseMatrix {
 public:
  DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> row_major)
      : rows_(rows), cols_(cols), data_(std::move(row_major)) {
    if (rows_ == 0 || cols_ == 0) throw DimensionError("DenseMatrix: dimensions must be >= 1");
    if (data_.size() != rows_ * cols_) throw DimensionError("DenseMatrix: entry count mismatch");
    detail::require_finite(data_, "DenseMatrix");
  }

  static DenseMatrix zeros(std::size_t rows, std::size_t cols) {
    return DenseMatrix(rows, cols, std::vector<double>(rows * cols, 0.0));
  }
  static DenseMatrix identity(std::size_t n) {
    std::vector<double> d(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) d[i * n + i] = 1.0;
    return DenseMatrix(n, n, std::move(d));
  }
  static DenseMatrix diagonal(const RealVector& diag) {
    const std::size_t n = diag.size();
    std::vector<double> d(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) d[i * n + i] = diag[i];
    return DenseMatrix(n, n, std::move(d));
  }
  static DenseMatrix from_columns(std::span<const RealVector> columns) {
    if (columns.empty()) throw DimensionError("DenseMatrix::from_columns: no columns");
    const std::size_t rows = columns.front().size();
    const std::size_t cols = columns.size();
    std::vector<double> d(rows * cols);
    for (std::size_t j = 0; j < cols; ++j) {
      if (columns[j].size() != rows) throw DimensionError("DenseMatrix::from_columns: ragged columns");
      for (std::size_t i = 0; i < rows; ++i) d[i * cols + j] = columns[j][i];
    }
    return DenseMatrix(rows, cols, std::move(d));
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }
  std::span<const double> row_major() const noexcept { return data_; }

  RealVector column(std::size_t j) const {
    std::vector<double> c(rows_);
    for (std::size_t i = 0; i < rows_; ++i) c[i] = (*this)(i, j);
    return RealVector(std::move(c));
  }

  DenseMatrix transpose() const {
    std::vector<double> t(rows_ * cols_);
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t j = 0; j < cols_; ++j) t[j * rows_ + i] = (*this)(i, j);
    return DenseMatrix(cols_, rows_, std::move(t));
  }

  bool operator==(const DenseMatrix&) const = default;

 private:
  std::size_t rows_;
  std::size_t cols_;
  std::vector<double> data_;
};

inline RealVector matvec(const DenseMatrix& a, const RealVector& v) {
  if (a.cols() != v.size()) {
    throw DimensionError("matvec: matrix has " + std::to_string(a.cols()) + " columns, vector has " +
                         std::to_string(v.size()) + " entries");
  }
  std::vector<double> out(a.rows(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < a.cols(); ++j) s += a(i, j) * v[j];
    out[i] = s;
  }
  return RealVector(std::move(out));
}

inline DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.cols() != b.rows()) throw DimensionError("matmul: inner dimension mismatch");
  std::vector<double> out(a.rows() * b.cols(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      for (std::size_t j = 0; j < b.cols(); ++j) out[i * b.cols() + j] += aik * b(k, j);
    }
  return DenseMatrix(a.rows(), b.cols(), std::move(out));
}

inline double frobenius_norm(const DenseMatrix& a) {
  double s = 0.0;
  for (double x : a.row_major()) s += x * x;
  return std::sqrt(s);
}

/// Householder QR with column pivoting, M P = Q R.
///
/// `q` holds the first k = min(rows, cols) columns of the orthogonal factor,
/// `r` is k x cols upper trapezoidal (upper triangular when cols <= rows) and
/// `permutation[j]` is the original index of the j-th pivoted column. The
/// numerical rank counts leading diagonal entries with |R_jj| > rank_tol * |R_00|.
struct QrFactors {
  std::vector<RealVector> q;
  std::vector<std::vector<double>> r;  // k rows of length cols
  std::vector<std::size_t> permutation;
  std::size_t numerical_rank = 0;
};

inline QrFactors householder_qr(const DenseMatrix& m, double rank_tol, bool pivoting = true) {
  if (!(rank_tol > 0.0)) throw DimensionError("householder_qr: rank_tol must be > 0");
  const std::size_t rows = m.rows();
  const std::size_t cols = m.cols();
  const std::size_t k = std::min(rows, cols);

  // Column-major working copy.
  std::vector<std::vector<double>> w(cols, std::vector<double>(rows));
  for (std::size_t j = 0; j < cols; ++j)
    for (std::size_t i = 0; i < rows; ++i) w[j][i] = m(i, j);

  std::vector<std::size_t> perm(cols);
  for (std::size_t j = 0; j < cols; ++j) perm[j] = j;

  std::vector<std::vector<double>> reflectors;
  std::vector<double> taus;
  reflectors.reserve(k);

  for (std::size_t step = 0; step < k; ++step) {
    if (pivoting) {
      // Column norms are recomputed each step; cheap at the sizes used here
      // and avoids the cancellation issues of norm downdating.
      std::size_t best = step;
      double best_norm = -1.0;
      for (std::size_t j = step; j < cols; ++j) {
        double s = 0.0;
        for (std::size_t i = step; i < rows; ++i) s += w[j][i] * w[j][i];
        if (s > best_norm) {
          best_norm = s;
          best = j;
        }
      }
      std::swap(w[step], w[best]);
      std::swap(perm[step], perm[best]);
    }

    std::vector<double> v(rows - step);
    for (std::size_t i = step; i < rows; ++i) v[i - step] = w[step][i];
    double alpha = 0.0;
    for (double x : v) alpha += x * x;
    alpha = std::sqrt(alpha);
    double tau = 0.0;
    if (alpha > 0.0) {
      const double beta = v[0] >= 0.0 ? -alpha : alpha;
      v[0] -= beta;
      double vnorm2 = 0.0;
      for (double x : v) vnorm2 += x * x;
      tau = vnorm2 > 0.0 ? 2.0 / vnorm2 : 0.0;
      for (std::size_t j = step; j < cols; ++j) {
        double s = 0.0;
        for (std::size_t i = step; i < rows; ++i) s += v[i - step] * w[j][i];
        s *= tau;
        for (std::size_t i = step; i < rows; ++i) w[j][i] -= s * v[i - step];
      }
      w[step][step] = beta;
      for (std::size_t i = step + 1; i < rows; ++i) w[step][i] = 0.0;
    }
    reflectors.push_back(std::move(v));
    taus.push_back(tau);
  }

  QrFactors out;
  out.permutation = perm;
  out.r.assign(k, std::vector<double>(cols, 0.0));
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = i; j < cols; ++j) out.r[i][j] = w[j][i];

  // Thin Q: apply reflectors in reverse to the first k unit vectors.
  out.q.reserve(k);
  for (std::size_t c = 0; c < k; ++c) {
    std::vector<double> e(rows, 0.0);
    e[c] = 1.0;
    for (std::size_t s = k; s-- > 0;) {
      const auto& v = reflectors[s];
      double d = 0.0;
      for (std::size_t i = s; i < rows; ++i) d += v[i - s] * e[i];
      d *= taus[s];
      for (std::size_t i = s; i < rows; ++i) e[i] -= d * v[i - s];
    }
    out.q.emplace_back(std::move(e));
  }

  const double lead = k > 0 ? std::abs(out.r[0][0]) : 0.0;
  std::size_t rank = 0;
  if (lead > 0.0) {
    while (rank < k && std::abs(out.r[rank][rank]) > rank_tol * lead) ++rank;
  }
  out.numerical_rank = rank;
  return out;
}

struct LeastSquaresResult {
  RealVector coeffs;
  double residual_norm;
  std::size_t rank;
};

/// Minimizes ||rhs - M c||. Rank-deficient problems (at rank_tol, relative to
/// the leading pivot) return the minimum-norm minimizer through a complete
/// orthogonal decomposition of the retained rows of R.
inline LeastSquaresResult least_squares(const DenseMatrix& m, const RealVector& rhs, double rank_tol) {
  if (m.rows() != rhs.size()) throw DimensionError("least_squares: row count does not match rhs length");
  if (!(rank_tol > 0.0)) throw DimensionError("least_squares: rank_tol must be > 0");
  const std::size_t cols = m.cols();
  const QrFactors qr = householder_qr(m, rank_tol, true);
  const std::size_t rank = qr.numerical_rank;

  std::vector<double> z(cols, 0.0);  // solution in pivoted coordinates
  if (rank > 0) {
    std::vector<double> c(rank);
    for (std::size_t i = 0; i < rank; ++i) c[i] = dot(qr.q[i], rhs);

    if (rank == cols) {
      for (std::size_t i = rank; i-- > 0;) {
        double s = c[i];
        for (std::size_t j = i + 1; j < cols; ++j) s -= qr.r[i][j] * z[j];
        z[i] = s / qr.r[i][i];
      }
    } else {
      // R_top (rank x cols) = T^T Z^T with Z orthonormal (cols x rank).
      std::vector<double> rt(cols * rank);
      for (std::size_t i = 0; i < rank; ++i)
        for (std::size_t j = 0; j < cols; ++j) rt[j * rank + i] = qr.r[i][j];
      const QrFactors lq = householder_qr(DenseMatrix(cols, rank, std::move(rt)), rank_tol, false);
      // Solve T^T w = c (T upper triangular, so T^T is lower).
      std::vector<double> wv(rank, 0.0);
      for (std::size_t i = 0; i < rank; ++i) {
        double s = c[i];
        for (std::size_t j = 0; j < i; ++j) s -= lq.r[j][i] * wv[j];
        wv[i] = s / lq.r[i][i];
      }
      for (std::size_t i = 0; i < rank; ++i)
        for (std::size_t j = 0; j < cols; ++j) z[j] += lq.q[i][j] * wv[i];
    }
  }

  std::vector<double> coeffs(cols, 0.0);
  for (std::size_t j = 0; j < cols; ++j) coeffs[qr.permutation[j]] = z[j];
  RealVector cv(std::move(coeffs));
  const double res = norm2(rhs - matvec(m, cv));
  return {std::move(cv), res, rank};
}

struct ExtendResult {
  std::optional<RealVector> q;
  std::vector<double> h;
  bool dependent;
  double remainder_norm;
};

/// Orthogonalizes v against an orthonormal basis by modified Gram-Schmidt
/// followed by one full reorthogonalization pass. v counts as dependent when
/// the remainder norm is at most dep_tol * ||v||.
inline ExtendResult orthonormal_extend(std::span<const RealVector> basis, const RealVector& v, double dep_tol) {
  if (!(dep_tol > 0.0)) throw DimensionError("orthonormal_extend: dep_tol must be > 0");
  for (const auto& b : basis) require_same_size(b, v, "orthonormal_extend");
  std::vector<double> h(basis.size(), 0.0);
  const double vnorm = norm2(v);
  if (vnorm == 0.0) return {std::nullopt, std::move(h), true, 0.0};

  std::vector<double> w(v.values().begin(), v.values().end());
  for (int pass = 0; pass < 2; ++pass) {
    for (std::size_t j = 0; j < basis.size(); ++j) {
      double c = 0.0;
      for (std::size_t i = 0; i < w.size(); ++i) c += basis[j][i] * w[i];
      for (std::size_t i = 0; i < w.size(); ++i) w[i] -= c * basis[j][i];
      h[j] += c;
    }
  }
  RealVector rem(std::move(w));
  const double rnorm = norm2(rem);
  if (rnorm <= dep_tol * vnorm) return {std::nullopt, std::move(h), true, rnorm};
  return {(1.0 / rnorm) * rem, std::move(h), false, rnorm};
}

/// Orthonormal basis of the column space, dropping columns that are dependent at dep_tol.
inline std::vector<RealVector> orthonormal_column_basis(std::span<const RealVector> columns, double dep_tol) {
  std::vector<RealVector> basis;
  for (const auto& c : columns) {
    auto ext = orthonormal_extend(basis, c, dep_tol);
    if (!ext.dependent) basis.push_back(std::move(*ext.q));
  }
  return basis;
}

/// Orthogonal projection of v onto span(basis) for an orthonormal basis.
inline RealVector project_onto_basis(std::span<const RealVector> basis, const RealVector& v) {
  std::vector<double> p(v.size(), 0.0);
  for (const auto& q : basis) {
    const double c = dot(q, v);
    for (std::size_t i = 0; i < p.size(); ++i) p[i] += c * q[i];
  }
  return RealVector(std::move(p));
}

inline RealVector project_onto_columnspace(const DenseMatrix& m, const RealVector& v, double dep_tol) {
  if (m.rows() != v.size()) throw DimensionError("project_onto_columnspace: row count does not match vector length");
  std::vector<RealVector> cols;
  cols.reserve(m.cols());
  for (std::size_t j = 0; j < m.cols(); ++j) cols.push_back(m.column(j));
  const auto basis = orthonormal_column_basis(cols, dep_tol);
  return project_onto_basis(basis, v);
}

/// Raised by lu_solve when a pivot falls below rank_tol times the largest entry.
class SingularMatrixError : public std::runtime_error {
 public:
  SingularMatrixError() : std::runtime_error("singular matrix") {}
};

/// Solves A x = rhs by LU with partial pivoting.
inline RealVector lu_solve(const DenseMatrix& a, const RealVector& rhs, double rank_tol) {
  const std::size_t n = a.rows();
  if (a.cols() != n) throw DimensionError("lu_solve: matrix must be square");
  if (rhs.size() != n) throw DimensionError("lu_solve: rhs length mismatch");
  std::vector<double> lu(a.row_major().begin(), a.row_major().end());
  std::vector<double> x(rhs.values().begin(), rhs.values().end());
  double scale = 0.0;
  for (double v : lu) scale = std::max(scale, std::abs(v));
  if (scale == 0.0) throw SingularMatrixError();

  for (std::size_t k = 0; k < n; ++k) {
    std::size_t p = k;
    for (std::size_t i = k + 1; i < n; ++i)
      if (std::abs(lu[i * n + k]) > std::abs(lu[p * n + k])) p = i;
    if (std::abs(lu[p * n + k]) <= rank_tol * scale) throw SingularMatrixError();
    if (p != k) {
      for (std::size_t j = 0; j < n; ++j) std::swap(lu[k * n + j], lu[p * n + j]);
      std::swap(x[k], x[p]);
    }
    for (std::size_t i = k + 1; i < n; ++i) {
      const double l = lu[i * n + k] / lu[k * n + k];
      for (std::size_t j = k + 1; j < n; ++j) lu[i * n + j] -= l * lu[k * n + j];
      x[i] -= l * x[k];
    }
  }
  for (std::size_t i = n; i-- > 0;) {
    double s = x[i];
    for (std::size_t j = i + 1; j < n; ++j) s -= lu[i * n + j] * x[j];
    x[i] = s / lu[i * n + i];
  }
  return RealVector(std::move(x));
}

}  // namespace andersonkit
