#pragma once

// Dense symmetric-matrix algebra on small SPD matrices: spectral
// decomposition, spectral matrix functions and the SPD geodesic step.

#include <cmath>
#include <cstddef>
#include <sstream>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace ggkaf {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

/// Base class for numerical failures of the matrix functions.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised when an operation requiring a positive-definite argument sees an
/// eigenvalue at or below the relative floor.
class NotPositiveDefinite : public NumericalError {
 public:
  NotPositiveDefinite(double min_eig, double max_eig)
      : NumericalError(describe(min_eig, max_eig)), min_eig_(min_eig), max_eig_(max_eig) {}

  double min_eigenvalue() const noexcept { return min_eig_; }
  double max_eigenvalue() const noexcept { return max_eig_; }

 private:
  static std::string describe(double lo, double hi) {
    std::ostringstream os;
    os.precision(17);
    os << "matrix is not positive definite: eigenvalues span [" << lo << ", " << hi << "]";
    return os.str();
  }

  double min_eig_;
  double max_eig_;
};

/// Smallest admissible ratio lambda_min / lambda_max for log / sqrt.
inline constexpr double kEigFloor = 1e-12;

/// Dense symmetric L x L matrix. Every constructor symmetrizes, so
/// (k,l) == (l,k) holds bit for bit.
class SymMatrix {
 public:
  /// Symmetric part (X + X^T) / 2 of a square matrix.
  explicit SymMatrix(const Matrix& x) : m_(x.rows(), x.cols()) {
    if (x.rows() != x.cols()) {
      throw std::invalid_argument("SymMatrix: matrix must be square, got " +
                                  std::to_string(x.rows()) + "x" + std::to_string(x.cols()));
    }
    if (x.rows() < 1) throw std::invalid_argument("SymMatrix: dimension must be >= 1");
    const Index n = x.rows();
    for (Index k = 0; k < n; ++k) {
      m_(k, k) = x(k, k);
      for (Index l = k + 1; l < n; ++l) {
        const double v = (x(k, l) + x(l, k)) / 2.0;
        m_(k, l) = v;
        m_(l, k) = v;
      }
    }
  }

  static SymMatrix identity(Index n) { return scaled_identity(n, 1.0); }
  static SymMatrix zero(Index n) { return SymMatrix(Matrix::Zero(n, n)); }
  static SymMatrix scaled_identity(Index n, double s) {
    return SymMatrix(Matrix::Identity(n, n) * s);
  }

  Index dim() const noexcept { return m_.rows(); }
  double operator()(Index k, Index l) const { return m_(k, l); }
  const Matrix& matrix() const noexcept { return m_; }

  /// True when the matrix equals s*I for some s (entrywise, exact).
  bool is_scaled_identity() const {
    const double s = m_(0, 0);
    for (Index k = 0; k < dim(); ++k)
      for (Index l = 0; l < dim(); ++l)
        if (m_(k, l) != (k == l ? s : 0.0)) return false;
    return true;
  }

  friend SymMatrix operator+(const SymMatrix& a, const SymMatrix& b) {
    return SymMatrix(a.m_ + b.m_);
  }
  friend SymMatrix operator-(const SymMatrix& a, const SymMatrix& b) {
    return SymMatrix(a.m_ - b.m_);
  }
  friend SymMatrix operator*(double s, const SymMatrix& a) { return SymMatrix(s * a.m_); }
  friend bool operator==(const SymMatrix& a, const SymMatrix& b) {
    return a.dim() == b.dim() && a.m_ == b.m_;
  }

 private:
  Matrix m_;
};

/// Symmetric part of a square matrix.
inline SymMatrix sym(const Matrix& x) { return SymMatrix(x); }

/// Congruence a * s * a for symmetric a, s; the result is re-symmetrized.
inline SymMatrix congruence(const SymMatrix& a, const SymMatrix& s) {
  return SymMatrix(a.matrix() * s.matrix() * a.matrix());
}

struct SpectralDecomp {
  Vector eigenvalues;  // ascending
  Matrix eigenvectors;  // orthogonal, columns are eigenvectors

  /// W diag(f(lambda)) W^T, symmetrized.
  template <class F>
  SymMatrix apply(F&& f) const {
    Vector mapped = eigenvalues.unaryExpr(f);
    return SymMatrix(eigenvectors * mapped.asDiagonal() * eigenvectors.transpose());
  }
};

inline SpectralDecomp spectral_decompose(const SymMatrix& a) {
  if (!a.matrix().allFinite()) {
    throw NumericalError("spectral_decompose: matrix has non-finite entries");
  }
  Eigen::SelfAdjointEigenSolver<Matrix> solver(a.matrix(), Eigen::ComputeEigenvectors);
  if (solver.info() != Eigen::Success) {
    std::ostringstream os;
    os << "spectral_decompose: eigensolver did not converge (dim " << a.dim()
       << ", max |a_kl| " << a.matrix().cwiseAbs().maxCoeff() << ")";
    throw NumericalError(os.str());
  }
  return {solver.eigenvalues(), solver.eigenvectors()};
}

namespace detail {

inline void require_positive_definite(const SpectralDecomp& sd) {
  const double lo = sd.eigenvalues(0);
  const double hi = sd.eigenvalues(sd.eigenvalues.size() - 1);
  if (!(lo > 0.0) || !(lo > kEigFloor * hi)) throw NotPositiveDefinite(lo, hi);
}

inline void require_finite(const SymMatrix& m, const char* what) {
  if (!m.matrix().allFinite()) {
    throw NumericalError(std::string(what) + ": result overflowed");
  }
}

inline thread_local std::size_t log_invocations = 0;

}  // namespace detail

/// Number of mat_log calls made on the current thread. Diagnostic only.
inline std::size_t mat_log_invocations() noexcept { return detail::log_invocations; }

inline SymMatrix mat_exp(const SymMatrix& a) {
  SymMatrix r = spectral_decompose(a).apply([](double x) { return std::exp(x); });
  detail::require_finite(r, "mat_exp");
  return r;
}

/// Principal logarithm. Refuses, rather than clamps, near-singular input.
inline SymMatrix mat_log(const SymMatrix& a) {
  ++detail::log_invocations;
  const SpectralDecomp sd = spectral_decompose(a);
  detail::require_positive_definite(sd);
  return sd.apply([](double x) { return std::log(x); });
}

inline SymMatrix mat_sqrt(const SymMatrix& a) {
  const SpectralDecomp sd = spectral_decompose(a);
  detail::require_positive_definite(sd);
  return sd.apply([](double x) { return std::sqrt(x); });
}

inline SymMatrix mat_inv_sqrt(const SymMatrix& a) {
  const SpectralDecomp sd = spectral_decompose(a);
  detail::require_positive_definite(sd);
  return sd.apply([](double x) { return 1.0 / std::sqrt(x); });
}

/// Geodesic from x (SPD) in direction v under the affine-invariant metric:
/// x^{1/2} exp(x^{-1/2} v x^{-1/2}) x^{1/2}.
inline SymMatrix geodesic_step(const SymMatrix& x, const SymMatrix& v) {
  if (x.dim() != v.dim()) throw std::invalid_argument("geodesic_step: dimension mismatch");
  const SpectralDecomp sd = spectral_decompose(x);
  detail::require_positive_definite(sd);
  const SymMatrix root = sd.apply([](double l) { return std::sqrt(l); });
  const SymMatrix inv_root = sd.apply([](double l) { return 1.0 / std::sqrt(l); });
  // Evaluated as B B^T with B = X^{1/2} W exp(L/2), which stays a Gram matrix.
  const SpectralDecomp inner = spectral_decompose(congruence(inv_root, v));
  const Vector half = (0.5 * inner.eigenvalues.array()).exp().matrix();
  const Matrix b = root.matrix() * inner.eigenvectors * half.asDiagonal();
  SymMatrix r(b * b.transpose());
  detail::require_finite(r, "geodesic_step");
  return r;
}

/// Smallest eigenvalue; convenience for SPD checks.
inline double min_eigenvalue(const SymMatrix& a) { return spectral_decompose(a).eigenvalues(0); }

}  // namespace ggkaf
