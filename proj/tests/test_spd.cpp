#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "ggkaf/spd.hpp"
#include "test_support.hpp"

namespace ggkaf {
namespace {

using testing::Gen;
using testing::rel_frobenius;

bool exactly_symmetric(const SymMatrix& m) {
  for (Index k = 0; k < m.dim(); ++k)
    for (Index l = 0; l < m.dim(); ++l)
      if (m(k, l) != m(l, k)) return false;
  return true;
}

TEST(Sym, FixedPointOnSymmetricInput) {
  Matrix x(2, 2);
  x << 1.5, -0.25, -0.25, 3.0;
  EXPECT_EQ(sym(x).matrix(), x);
}

TEST(Sym, AveragesWithTranspose) {
  Matrix x(2, 2);
  x << 0, 2, 0, 0;
  Matrix want(2, 2);
  want << 0, 1, 1, 0;
  EXPECT_EQ(sym(x).matrix(), want);
}

TEST(Sym, RandomMatchesEntrywiseAverage) {
  Gen g(1);
  for (int t = 0; t < 100; ++t) {
    const Matrix x = g.square(3, -5.0, 5.0);
    const SymMatrix s = sym(x);
    ASSERT_TRUE(exactly_symmetric(s));
    for (Index k = 0; k < 3; ++k)
      for (Index l = 0; l < 3; ++l) EXPECT_EQ(s(k, l), (x(k, l) + x(l, k)) / 2.0);
  }
}

TEST(Sym, RejectsNonSquare) {
  EXPECT_THROW(sym(Matrix::Zero(2, 3)), std::invalid_argument);
  EXPECT_THROW(sym(Matrix(0, 0)), std::invalid_argument);
}

TEST(SpectralDecompose, IdentityAndDiagonal) {
  const SpectralDecomp id = spectral_decompose(SymMatrix::identity(3));
  EXPECT_TRUE(id.eigenvalues.isApprox(Vector::Ones(3)));

  Matrix d(2, 2);
  d << 5, 0, 0, 2;
  const SpectralDecomp sd = spectral_decompose(SymMatrix(d));
  EXPECT_NEAR(sd.eigenvalues(0), 2.0, 1e-15);
  EXPECT_NEAR(sd.eigenvalues(1), 5.0, 1e-15);
  EXPECT_NEAR(std::abs(sd.eigenvectors(1, 0)), 1.0, 1e-15);
  EXPECT_NEAR(std::abs(sd.eigenvectors(0, 1)), 1.0, 1e-15);
}

TEST(SpectralDecompose, MatchesBisectionOracle) {
  Gen g(2);
  for (int t = 0; t < 200; ++t) {
    const SymMatrix a = g.symmetric(4, 3.0);
    const SpectralDecomp sd = spectral_decompose(a);
    const auto oracle = testing::bisection_eigenvalues(a.matrix());
    for (Index i = 0; i < 4; ++i) EXPECT_NEAR(sd.eigenvalues(i), oracle[static_cast<std::size_t>(i)], 1e-8);
  }
}

TEST(SpectralDecompose, ReconstructionAndOrthogonality) {
  Gen g(3);
  for (int t = 0; t < 500; ++t) {
    const Index n = g.integer(1, 6);
    const SymMatrix a = g.symmetric(n, 10.0);
    const SpectralDecomp sd = spectral_decompose(a);
    const Matrix& w = sd.eigenvectors;
    EXPECT_LE(rel_frobenius(w * sd.eigenvalues.asDiagonal() * w.transpose(), a.matrix()), 1e-10);
    EXPECT_LE((w.transpose() * w - Matrix::Identity(n, n)).norm(), 1e-10);
    for (Index i = 1; i < n; ++i) EXPECT_LE(sd.eigenvalues(i - 1), sd.eigenvalues(i));
  }
}

TEST(SpectralDecompose, NonFiniteInputIsANumericalError) {
  Matrix m = Matrix::Identity(2, 2);
  m(0, 0) = std::numeric_limits<double>::infinity();
  EXPECT_THROW(spectral_decompose(SymMatrix(m)), NumericalError);
}

TEST(MatExp, ZeroAndDiagonal) {
  EXPECT_EQ(mat_exp(SymMatrix::zero(3)).matrix(), Matrix::Identity(3, 3));
  Matrix d(2, 2);
  d << 1, 0, 0, -1;
  const SymMatrix e = mat_exp(SymMatrix(d));
  EXPECT_NEAR(e(0, 0), std::numbers::e, 1e-15);
  EXPECT_NEAR(e(1, 1), 1.0 / std::numbers::e, 1e-15);
  EXPECT_EQ(e(0, 1), 0.0);
}

TEST(MatExp, MatchesTaylorSeries) {
  Gen g(4);
  for (int t = 0; t < 500; ++t) {
    SymMatrix a = g.symmetric(3);
    const double norm = a.matrix().norm();
    if (norm > 1.0) a = (g.uniform(0.0, 1.0) / norm) * a;
    EXPECT_LE(rel_frobenius(mat_exp(a).matrix(), testing::taylor_exp(a.matrix())), 1e-12);
  }
}

TEST(MatExp, OverflowIsReported) {
  EXPECT_THROW(mat_exp(SymMatrix::scaled_identity(2, 800.0)), NumericalError);
}

TEST(MatLog, IdentityAndRoundTrip) {
  EXPECT_LE(mat_log(SymMatrix::identity(4)).matrix().norm(), 1e-15);
  Gen g(5);
  for (int t = 0; t < 500; ++t) {
    const Index n = g.integer(1, 5);
    SymMatrix a = g.symmetric(n);
    a = (g.uniform(0.0, 2.0) / std::max(a.matrix().norm(), 1e-12)) * a;
    EXPECT_LE((mat_log(mat_exp(a)).matrix() - a.matrix()).norm(),
              1e-10 * std::max(1.0, a.matrix().norm()));
  }
}

TEST(MatLog, RefusesNearSingular) {
  Matrix d(2, 2);
  d << 1e-20, 0, 0, 1;
  EXPECT_THROW(mat_log(SymMatrix(d)), NotPositiveDefinite);
  EXPECT_THROW(mat_log(SymMatrix(-Matrix::Identity(2, 2))), NotPositiveDefinite);
  try {
    mat_log(SymMatrix(d));
  } catch (const NotPositiveDefinite& e) {
    EXPECT_EQ(e.min_eigenvalue(), 1e-20);
    EXPECT_EQ(e.max_eigenvalue(), 1.0);
  }
}

TEST(MatLog, FloorIsRelativeToLargestEigenvalue) {
  Matrix d(2, 2);
  d << 1e-9, 0, 0, 1e-3;  // ratio 1e-6: fine even though both are tiny
  EXPECT_NO_THROW(mat_log(SymMatrix(d)));
}

TEST(MatLog, InvocationCounterCountsCallsOnThisThread) {
  const std::size_t before = mat_log_invocations();
  mat_log(SymMatrix::identity(2));
  mat_exp(SymMatrix::identity(2));
  mat_sqrt(SymMatrix::identity(2));
  EXPECT_EQ(mat_log_invocations(), before + 1);
}

TEST(MatSqrt, Basics) {
  EXPECT_LE((mat_sqrt(SymMatrix::identity(3)).matrix() - Matrix::Identity(3, 3)).norm(), 1e-15);
  Matrix d(2, 2);
  d << 4, 0, 0, 9;
  Matrix want(2, 2);
  want << 2, 0, 0, 3;
  EXPECT_LE((mat_sqrt(SymMatrix(d)).matrix() - want).norm(), 1e-15);
  EXPECT_THROW(mat_sqrt(SymMatrix(-Matrix::Identity(2, 2))), NotPositiveDefinite);
  EXPECT_THROW(mat_inv_sqrt(SymMatrix(Matrix::Zero(2, 2))), NotPositiveDefinite);
}

TEST(MatSqrt, MultiplicationOracle) {
  Gen g(6);
  for (int t = 0; t < 500; ++t) {
    const SymMatrix a = g.spd(3, 0.05, 20.0);
    const Matrix r = mat_sqrt(a).matrix();
    const Matrix ir = mat_inv_sqrt(a).matrix();
    EXPECT_LE(rel_frobenius(r * r, a.matrix()), 1e-10);
    EXPECT_LE((ir * a.matrix() * ir - Matrix::Identity(3, 3)).norm(), 1e-10);
  }
}

TEST(GeodesicStep, TrivialCases) {
  Gen g(7);
  const SymMatrix x = g.spd(3);
  EXPECT_LE(rel_frobenius(geodesic_step(x, SymMatrix::zero(3)).matrix(), x.matrix()), 1e-13);
  const SymMatrix v = g.symmetric(3);
  EXPECT_LE(rel_frobenius(geodesic_step(SymMatrix::identity(3), v).matrix(), mat_exp(v).matrix()), 1e-14);
  EXPECT_THROW(geodesic_step(SymMatrix(-Matrix::Identity(3, 3)), v), NotPositiveDefinite);
  EXPECT_THROW(geodesic_step(x, SymMatrix::zero(2)), std::invalid_argument);
}

TEST(GeodesicStep, MatchesCompositionOfPrimitives) {
  Gen g(8);
  for (int t = 0; t < 500; ++t) {
    const Index n = g.integer(1, 5);
    const SymMatrix x = g.spd(n);
    const SymMatrix v = g.symmetric(n, 2.0);
    const Matrix r = mat_sqrt(x).matrix();
    const Matrix ir = mat_inv_sqrt(x).matrix();
    const Matrix want = r * mat_exp(sym(ir * v.matrix() * ir)).matrix() * r;
    const SymMatrix got = geodesic_step(x, v);
    EXPECT_LE(rel_frobenius(got.matrix(), want), 1e-12);
    EXPECT_GT(min_eigenvalue(got), 0.0);
  }
}

// Every output SPD over 10^4 random (X, V) pairs, dims 1..6. The step in
// whitened coordinates is capped at spectral norm 5 so the output's condition
// number stays representable in double precision.
TEST(GeodesicStep, AlwaysSpdAndExactlySymmetric) {
  Gen g(9);
  for (int t = 0; t < 10000; ++t) {
    const Index n = g.integer(1, 6);
    const SymMatrix x = g.spd(n, 0.01, 100.0);
    SymMatrix v = g.symmetric(n);
    const Matrix ir = mat_inv_sqrt(x).matrix();
    const double whitened = (ir * v.matrix() * ir).operatorNorm();
    v = (g.uniform(0.0, 5.0) / whitened) * v;
    const SymMatrix y = geodesic_step(x, v);
    ASSERT_TRUE(exactly_symmetric(y));
    ASSERT_GT(min_eigenvalue(y), 0.0);
  }
}

TEST(GeodesicStep, InitialVelocityIsDirection) {
  Gen g(10);
  for (int t = 0; t < 100; ++t) {
    const Index n = g.integer(1, 5);
    const SymMatrix x = g.spd(n, 0.5, 2.0);
    const SymMatrix v = g.symmetric(n);
    const double h = 1e-6;
    const Matrix fd = (geodesic_step(x, h * v).matrix() - geodesic_step(x, -h * v).matrix()) / (2 * h);
    EXPECT_LE(rel_frobenius(fd, v.matrix()), 1e-5);
  }
}

TEST(MatFunctions, ExpLogRoundTripOnWellConditionedSpd) {
  Gen g(11);
  for (int t = 0; t < 500; ++t) {
    const Index n = g.integer(1, 6);
    const SymMatrix a = g.spd(n, 1e-3, 1e3);  // condition <= 1e6
    EXPECT_LE(rel_frobenius(mat_exp(mat_log(a)).matrix(), a.matrix()), 1e-10);
  }
}

TEST(MatFunctions, OutputsAreExactlySymmetric) {
  Gen g(12);
  for (int t = 0; t < 200; ++t) {
    const Index n = g.integer(1, 6);
    const SymMatrix a = g.spd(n);
    EXPECT_TRUE(exactly_symmetric(mat_exp(g.symmetric(n))));
    EXPECT_TRUE(exactly_symmetric(mat_log(a)));
    EXPECT_TRUE(exactly_symmetric(mat_sqrt(a)));
    EXPECT_TRUE(exactly_symmetric(mat_inv_sqrt(a)));
  }
}

}  // namespace
}  // namespace ggkaf
