#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <vector>

#include "andersonkit/generators.hpp"
#include "andersonkit/linalg.hpp"
#include "andersonkit/random.hpp"

using namespace andersonkit;

namespace {

Eigen::MatrixXd to_eigen(const DenseMatrix& m) {
  Eigen::MatrixXd e(m.rows(), m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) e(i, j) = m(i, j);
  return e;
}

Eigen::VectorXd to_eigen(const RealVector& v) {
  Eigen::VectorXd e(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) e(i) = v[i];
  return e;
}

double rel_err(const RealVector& a, const Eigen::VectorXd& b) {
  return (to_eigen(a) - b).norm() / std::max(b.norm(), 1e-300);
}

DenseMatrix uniform_matrix(std::size_t r, std::size_t c, Rng& rng) {
  std::vector<double> d(r * c);
  for (auto& x : d) x = rng.uniform(-1.0, 1.0);
  return DenseMatrix(r, c, std::move(d));
}

}  // namespace

TEST(RealVector, RejectsEmptyAndNonFinite) {
  EXPECT_THROW(RealVector(std::vector<double>{}), DimensionError);
  EXPECT_THROW((RealVector{1.0, std::numeric_limits<double>::quiet_NaN()}), NonFiniteError);
  EXPECT_THROW((RealVector{std::numeric_limits<double>::infinity()}), NonFiniteError);
}

TEST(RealVector, ArithmeticChecksLengths) {
  const RealVector u{1.0, 2.0};
  const RealVector v{1.0, 2.0, 3.0};
  EXPECT_THROW(dot(u, v), DimensionError);
  EXPECT_THROW(u + v, DimensionError);
  EXPECT_DOUBLE_EQ(dot(u, u), 5.0);
  EXPECT_DOUBLE_EQ(norm2(RealVector{3.0, 4.0}), 5.0);
}

TEST(RealVector, NormAvoidsOverflow) {
  EXPECT_DOUBLE_EQ(norm2(RealVector{3e200, 4e200}), 5e200);
}

TEST(DenseMatrix, Validation) {
  EXPECT_THROW(DenseMatrix(2, 2, {1.0, 2.0, 3.0}), DimensionError);
  EXPECT_THROW(DenseMatrix(0, 2, {}), DimensionError);
  EXPECT_THROW(DenseMatrix(1, 1, {std::nan("")}), NonFiniteError);
}

TEST(Matvec, IdentityAndPermutation) {
  EXPECT_EQ(matvec(DenseMatrix::identity(3), RealVector{1.0, 2.0, 3.0}), (RealVector{1.0, 2.0, 3.0}));
  EXPECT_EQ(matvec(cycle_permutation(3), RealVector::unit(3, 0)), RealVector::unit(3, 1));
  EXPECT_THROW(matvec(DenseMatrix::identity(3), RealVector{1.0, 2.0}), DimensionError);
}

TEST(Matvec, MatchesNaiveDoubleLoop) {
  Rng rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const DenseMatrix a = uniform_matrix(4, 4, rng);
    const RealVector v = rng.uniform_vector(4, -1.0, 1.0);
    const RealVector got = matvec(a, v);
    for (std::size_t i = 0; i < 4; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < 4; ++j) s += a(i, j) * v[j];
      EXPECT_NEAR(got[i], s, 1e-15);
    }
  }
}

TEST(Matvec, IsLinear) {
  Rng rng(12);
  for (int trial = 0; trial < 50; ++trial) {
    const DenseMatrix a = uniform_matrix(7, 7, rng);
    const RealVector u = rng.uniform_vector(7, -1.0, 1.0);
    const RealVector v = rng.uniform_vector(7, -1.0, 1.0);
    const RealVector lhs = matvec(a, u + v);
    const RealVector rhs = matvec(a, u) + matvec(a, v);
    EXPECT_LE(norm2(lhs - rhs), 1e-13 * std::max(norm2(lhs), 1.0));
  }
}

TEST(Matmul, MatchesEigen) {
  Rng rng(13);
  const DenseMatrix a = uniform_matrix(3, 5, rng);
  const DenseMatrix b = uniform_matrix(5, 4, rng);
  const Eigen::MatrixXd expect = to_eigen(a) * to_eigen(b);
  EXPECT_LE((to_eigen(matmul(a, b)) - expect).norm(), 1e-14 * expect.norm());
}

TEST(HouseholderQr, FactorsReproduceInput) {
  Rng rng(14);
  const DenseMatrix m = uniform_matrix(6, 4, rng);
  const QrFactors qr = householder_qr(m, 1e-12, true);
  ASSERT_EQ(qr.numerical_rank, 4u);
  for (std::size_t a = 0; a < qr.q.size(); ++a) {
    EXPECT_NEAR(norm2(qr.q[a]), 1.0, 1e-12);
    for (std::size_t b = 0; b < a; ++b) EXPECT_LE(std::abs(dot(qr.q[a], qr.q[b])), 1e-12);
  }
  // M P = Q R, column by column.
  for (std::size_t j = 0; j < 4; ++j) {
    const RealVector col = m.column(qr.permutation[j]);
    std::vector<double> rebuilt(6, 0.0);
    for (std::size_t k = 0; k < qr.q.size(); ++k)
      for (std::size_t i = 0; i < 6; ++i) rebuilt[i] += qr.q[k][i] * qr.r[k][j];
    EXPECT_LE(norm2(col - RealVector(rebuilt)), 1e-13);
  }
}

TEST(HouseholderQr, RankMatchesEigenSvd) {
  Rng rng(15);
  // Rank-2 product of 6x2 and 2x5 factors.
  const DenseMatrix m = matmul(uniform_matrix(6, 2, rng), uniform_matrix(2, 5, rng));
  const QrFactors qr = householder_qr(m, 1e-10, true);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(to_eigen(m));
  const auto& s = svd.singularValues();
  std::size_t rank = 0;
  for (int i = 0; i < s.size(); ++i)
    if (s(i) > 1e-10 * s(0)) ++rank;
  EXPECT_EQ(qr.numerical_rank, rank);
  EXPECT_EQ(qr.numerical_rank, 2u);
}

TEST(LeastSquares, OneDimensionalProjection) {
  const auto ls = least_squares(DenseMatrix(2, 1, {1.0, 0.0}), RealVector{2.0, 3.0}, 1e-12);
  EXPECT_NEAR(ls.coeffs[0], 2.0, 1e-15);
  EXPECT_NEAR(ls.residual_norm, 3.0, 1e-15);
}

TEST(LeastSquares, ZeroMatrixGivesZeroCoefficients) {
  const auto ls = least_squares(DenseMatrix::zeros(3, 2), RealVector{1.0, 2.0, 2.0}, 1e-12);
  EXPECT_EQ(ls.coeffs, RealVector::zeros(2));
  EXPECT_NEAR(ls.residual_norm, 3.0, 1e-15);
  EXPECT_EQ(ls.rank, 0u);
}

TEST(LeastSquares, DimensionMismatchThrows) {
  EXPECT_THROW(least_squares(DenseMatrix::zeros(3, 2), RealVector{1.0, 2.0}, 1e-12), DimensionError);
  EXPECT_THROW(least_squares(DenseMatrix::zeros(2, 2), RealVector{1.0, 2.0}, 0.0), DimensionError);
}

TEST(LeastSquares, MatchesNormalEquations) {
  Rng rng(16);
  for (int trial = 0; trial < 20; ++trial) {
    const DenseMatrix m = uniform_matrix(6, 3, rng);
    const RealVector rhs = rng.uniform_vector(6, -1.0, 1.0);
    const auto ls = least_squares(m, rhs, 1e-12);
    const Eigen::MatrixXd em = to_eigen(m);
    const Eigen::VectorXd expect = (em.transpose() * em).ldlt().solve(em.transpose() * to_eigen(rhs));
    EXPECT_LE(rel_err(ls.coeffs, expect), 1e-10);
    EXPECT_NEAR(ls.residual_norm, norm2(rhs - matvec(m, ls.coeffs)), 1e-14);
  }
}

TEST(LeastSquares, RankDeficientGivesMinimumNorm) {
  Rng rng(17);
  for (int trial = 0; trial < 20; ++trial) {
    const DenseMatrix m = matmul(uniform_matrix(7, 2, rng), uniform_matrix(2, 4, rng));
    const RealVector rhs = rng.uniform_vector(7, -1.0, 1.0);
    const auto ls = least_squares(m, rhs, 1e-10);
    EXPECT_EQ(ls.rank, 2u);
    // Oracle: the SVD pseudoinverse solution is the minimum-norm minimizer.
    const Eigen::MatrixXd em = to_eigen(m);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(em, Eigen::ComputeThinU | Eigen::ComputeThinV);
    svd.setThreshold(1e-10);
    const Eigen::VectorXd expect = svd.solve(to_eigen(rhs));
    EXPECT_LE(rel_err(ls.coeffs, expect), 1e-9);
  }
}

TEST(LeastSquares, ResidualOrthogonalToRange) {
  Rng rng(18);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t rows = 4 + trial % 5;
    const std::size_t cols = 1 + trial % 4;
    const DenseMatrix m = uniform_matrix(rows, cols, rng);
    const RealVector rhs = rng.uniform_vector(rows, -1.0, 1.0);
    const auto ls = least_squares(m, rhs, 1e-12);
    const RealVector res = rhs - matvec(m, ls.coeffs);
    const double bound = 1e-10 * (frobenius_norm(m) * norm2(ls.coeffs) + norm2(rhs));
    for (std::size_t j = 0; j < cols; ++j) EXPECT_LE(std::abs(dot(m.column(j), res)), bound);
  }
}

TEST(OrthonormalExtend, SpecExamples) {
  const std::vector<RealVector> basis{RealVector::unit(2, 0)};
  auto a = orthonormal_extend(basis, RealVector::unit(2, 1), 1e-10);
  ASSERT_FALSE(a.dependent);
  EXPECT_EQ(*a.q, RealVector::unit(2, 1));

  auto b = orthonormal_extend(basis, RealVector{5.0, 0.0}, 1e-10);
  EXPECT_TRUE(b.dependent);
  EXPECT_FALSE(b.q.has_value());
  EXPECT_DOUBLE_EQ(b.h[0], 5.0);

  auto c = orthonormal_extend(basis, RealVector{1.0, 1e-14}, 1e-10);
  EXPECT_TRUE(c.dependent);

  auto z = orthonormal_extend(basis, RealVector::zeros(2), 1e-10);
  EXPECT_TRUE(z.dependent);
  EXPECT_EQ(z.h[0], 0.0);
}

TEST(OrthonormalExtend, KeepsOrthogonalityOnNearlyParallelInput) {
  Rng rng(19);
  std::vector<RealVector> basis;
  RealVector v = rng.uniform_vector(10, -1.0, 1.0);
  for (int k = 0; k < 8; ++k) {
    // Each new vector differs from the previous one only slightly.
    RealVector next = v + 1e-6 * rng.uniform_vector(10, -1.0, 1.0);
    auto ext = orthonormal_extend(basis, next, 1e-10);
    ASSERT_FALSE(ext.dependent);
    EXPECT_NEAR(norm2(*ext.q), 1.0, 1e-12);
    for (const auto& b : basis) EXPECT_LE(std::abs(dot(*ext.q, b)), 1e-10);
    basis.push_back(*ext.q);
    v = next;
  }
}

TEST(Projection, SpecExamples) {
  EXPECT_EQ(project_onto_columnspace(DenseMatrix(2, 1, {1.0, 0.0}), RealVector{3.0, 4.0}, 1e-10),
            (RealVector{3.0, 0.0}));
  Rng rng(20);
  const DenseMatrix full = uniform_matrix(5, 5, rng);
  const RealVector v = rng.uniform_vector(5, -1.0, 1.0);
  EXPECT_LE(norm2(project_onto_columnspace(full, v, 1e-10) - v), 1e-12 * norm2(v));
  EXPECT_EQ(project_onto_columnspace(DenseMatrix::zeros(3, 2), RealVector{1.0, 2.0, 3.0}, 1e-10),
            RealVector::zeros(3));
}

TEST(Projection, MatchesNormalEquationsProjector) {
  Rng rng(21);
  for (int trial = 0; trial < 20; ++trial) {
    const DenseMatrix m = uniform_matrix(5, 2, rng);
    const RealVector v = rng.uniform_vector(5, -1.0, 1.0);
    const Eigen::MatrixXd em = to_eigen(m);
    const Eigen::VectorXd expect = em * (em.transpose() * em).inverse() * em.transpose() * to_eigen(v);
    const RealVector got = project_onto_columnspace(m, v, 1e-10);
    EXPECT_LE(rel_err(got, expect), 1e-10);
    // Idempotence.
    EXPECT_LE(norm2(project_onto_columnspace(m, got, 1e-10) - got), 1e-12 * norm2(got));
  }
}

TEST(LuSolve, MatchesEigenAndDetectsSingular) {
  Rng rng(22);
  const DenseMatrix a = uniform_matrix(6, 6, rng);
  const RealVector b = rng.uniform_vector(6, -1.0, 1.0);
  const Eigen::VectorXd expect = to_eigen(a).partialPivLu().solve(to_eigen(b));
  EXPECT_LE(rel_err(lu_solve(a, b, 1e-12), expect), 1e-12);
  EXPECT_THROW(lu_solve(DenseMatrix(2, 2, {1.0, 2.0, 2.0, 4.0}), RealVector{1.0, 1.0}, 1e-12), SingularMatrixError);
}

TEST(RandomOrthogonal, IsOrthogonalAndDeterministic) {
  Rng a(5), b(5);
  const DenseMatrix q = random_orthogonal(8, a);
  EXPECT_EQ(q, random_orthogonal(8, b));
  const Eigen::MatrixXd e = to_eigen(q);
  EXPECT_LE((e.transpose() * e - Eigen::MatrixXd::Identity(8, 8)).norm(), 1e-13);
}

TEST(Rng, FixedStreamForSeed) {
  // mt19937_64 with the default seed 5489 has a standardized 10000th output.
  std::mt19937_64 ref;
  for (int i = 0; i < 9999; ++i) ref();
  EXPECT_EQ(ref(), 9981545732273789042ULL);
  Rng r(1);
  const double u = r.uniform();
  EXPECT_GE(u, 0.0);
  EXPECT_LT(u, 1.0);
}
