#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "ssgp/kernel_linalg.hpp"

using namespace ssgp;

namespace {

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

}  // namespace

TEST(GaussianCorr, ZeroDistanceIsOne) {
  const Vector x = vec({0.3, -1.2, 7.0});
  EXPECT_DOUBLE_EQ(gaussian_corr(x, x, vec({1.0, 50.0, 3.0})), 1.0);
}

TEST(GaussianCorr, ZeroThetaIsOne) {
  EXPECT_DOUBLE_EQ(gaussian_corr(vec({0.0, 0.0}), vec({0.9, 0.1}), vec({0.0, 0.0})), 1.0);
}

TEST(GaussianCorr, HandEvaluation) {
  EXPECT_NEAR(gaussian_corr(vec({0.0, 0.0}), vec({0.5, 0.5}), vec({1.0, 2.0})), std::exp(-0.75), 1e-15);
  EXPECT_NEAR(std::exp(-0.75), 0.47237, 1e-5);
}

TEST(GaussianCorr, RejectsBadInput) {
  EXPECT_THROW(gaussian_corr(vec({0.0}), vec({0.0, 1.0}), vec({1.0})), InvalidArgument);
  EXPECT_THROW(gaussian_corr(vec({NAN}), vec({0.0}), vec({1.0})), InvalidArgument);
  EXPECT_THROW(gaussian_corr(vec({0.0}), vec({1.0}), vec({-1.0})), InvalidArgument);
}

TEST(GaussianCorr, SymmetricAndMonotoneInTheta) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 3.0);
  for (int t = 0; t < 200; ++t) {
    const Vector a = oracle::random_vector(4, rng), b = oracle::random_vector(4, rng);
    Vector theta(4);
    for (int k = 0; k < 4; ++k) theta(k) = u(rng);
    EXPECT_EQ(gaussian_corr(a, b, theta), gaussian_corr(b, a, theta));
    const int k = t % 4;
    Vector bigger = theta;
    bigger(k) += 0.5;
    EXPECT_LE(gaussian_corr(a, b, bigger), gaussian_corr(a, b, theta));
  }
}

TEST(BuildCorrMatrix, SinglePoint) {
  Matrix x(1, 2);
  x << 0.2, 0.4;
  const CorrMatrix m = build_corr_matrix(x, vec({1.0, 1.0}), 1e-3);
  ASSERT_EQ(m.size(), 1);
  EXPECT_DOUBLE_EQ(m.entries(0, 0), 1.0 + 1e-3);
}

TEST(BuildCorrMatrix, ZeroThetaGivesOnesPlusNugget) {
  Matrix x(2, 1);
  x << 0.0, 0.7;
  const CorrMatrix m = build_corr_matrix(x, vec({0.0}), 0.25);
  Matrix expected(2, 2);
  expected << 1.25, 1.0, 1.0, 1.25;
  EXPECT_EQ((m.entries - expected).norm(), 0.0);
}

TEST(BuildCorrMatrix, TwoPointsAtUnitDistance) {
  Matrix x(2, 1);
  x << 0.0, 1.0;
  const CorrMatrix m = build_corr_matrix(x, vec({1.0}), 0.0);
  EXPECT_DOUBLE_EQ(m.entries(0, 0), 1.0);
  EXPECT_DOUBLE_EQ(m.entries(1, 1), 1.0);
  EXPECT_NEAR(m.entries(0, 1), std::exp(-1.0), 1e-15);
  EXPECT_EQ(m.entries(0, 1), m.entries(1, 0));
}

TEST(BuildCorrMatrix, DuplicatePointsFlaggedOnlyWithoutNugget) {
  Matrix x(3, 2);
  x << 0.1, 0.2, 0.5, 0.5, 0.1, 0.2;
  EXPECT_TRUE(build_corr_matrix(x, vec({1.0, 1.0}), 0.0).duplicate_points);
  EXPECT_FALSE(build_corr_matrix(x, vec({1.0, 1.0}), 1e-8).duplicate_points);
}

TEST(BuildCorrMatrix, UnitDiagonalAndEntriesInUnitInterval) {
  std::mt19937_64 rng(3);
  for (int t = 0; t < 20; ++t) {
    const Matrix x = oracle::random_points(15, 3, rng);
    const double nugget = 1e-6 * t;
    const CorrMatrix m = build_corr_matrix(x, vec({0.5 * t, 1.0, 10.0}), nugget);
    const Matrix base = m.entries - nugget * Matrix::Identity(15, 15);
    EXPECT_EQ((m.entries - m.entries.transpose()).norm(), 0.0);
    for (Eigen::Index i = 0; i < 15; ++i) {
      EXPECT_NEAR(base(i, i), 1.0, 1e-15);
      for (Eigen::Index j = 0; j < 15; ++j) {
        EXPECT_GT(base(i, j), 0.0);
        EXPECT_LE(base(i, j), 1.0);
      }
    }
  }
}

TEST(Cholesky, IdentityFactor) {
  const CholFactor f = chol_decompose(Matrix::Identity(4, 4));
  EXPECT_EQ((f.lower() - Matrix::Identity(4, 4)).norm(), 0.0);
}

TEST(Cholesky, HandFactor) {
  Matrix m(2, 2);
  m << 1.0, 0.5, 0.5, 1.0;
  const CholFactor f = chol_decompose(m);
  EXPECT_DOUBLE_EQ(f.lower()(0, 0), 1.0);
  EXPECT_DOUBLE_EQ(f.lower()(0, 1), 0.0);
  EXPECT_DOUBLE_EQ(f.lower()(1, 0), 0.5);
  EXPECT_NEAR(f.lower()(1, 1), 0.86603, 1e-5);
  EXPECT_NEAR(f.lower()(1, 1), std::sqrt(0.75), 1e-15);
}

TEST(Cholesky, IndefiniteMatrixThrows) {
  Matrix m(2, 2);
  m << 1.0, 2.0, 2.0, 1.0;
  try {
    chol_decompose(m);
    FAIL() << "expected NotPositiveDefinite";
  } catch (const NotPositiveDefinite& e) {
    EXPECT_EQ(e.pivot(), 1u);
    EXPECT_LE(e.value(), kPivotTolerance);
  }
}

TEST(Cholesky, ReconstructsCorrelationMatrices) {
  std::mt19937_64 rng(5);
  for (int t = 0; t < 30; ++t) {
    const Eigen::Index n = 2 + t;
    const Matrix x = oracle::random_points(n, 3, rng);
    const CorrMatrix m = build_corr_matrix(x, vec({2.0, 5.0, 1.0}), 1e-6);
    const CholFactor f = chol_decompose(m);
    const Matrix& l = f.lower();
    EXPECT_LE((l * l.transpose() - m.entries).norm(), 1e-10 * m.entries.norm());
    EXPECT_TRUE((l.diagonal().array() > 0.0).all());
    EXPECT_EQ(l.triangularView<Eigen::StrictlyUpper>().toDenseMatrix().norm(), 0.0);
  }
}

TEST(LogDet, Examples) {
  EXPECT_EQ(log_det_from_chol(chol_decompose(Matrix::Identity(3, 3))), 0.0);
  Matrix d = Matrix::Zero(2, 2);
  d.diagonal() << 4.0, 9.0;
  EXPECT_NEAR(log_det_from_chol(chol_decompose(d)), std::log(36.0), 1e-14);
  EXPECT_NEAR(std::log(36.0), 3.5835, 1e-4);
  Matrix m(2, 2);
  m << 1.0, 0.5, 0.5, 1.0;
  EXPECT_NEAR(log_det_from_chol(chol_decompose(m)), std::log(0.75), 1e-14);
  EXPECT_NEAR(std::log(0.75), -0.28768, 1e-5);
}

TEST(Solve, Examples) {
  const Vector x = solve_with_chol(chol_decompose(Matrix::Identity(2, 2)), vec({3.0, 4.0}));
  EXPECT_EQ(x, vec({3.0, 4.0}));
  Matrix d = Matrix::Zero(2, 2);
  d.diagonal() << 2.0, 5.0;
  const Vector y = solve_with_chol(chol_decompose(d), vec({2.0, 5.0}));
  EXPECT_NEAR(y(0), 1.0, 1e-15);
  EXPECT_NEAR(y(1), 1.0, 1e-15);
}

TEST(Solve, DimensionMismatchThrows) {
  const CholFactor f = chol_decompose(Matrix::Identity(3, 3));
  EXPECT_THROW(solve_with_chol(f, vec({1.0, 2.0})), InvalidArgument);
  EXPECT_THROW(f.half_solve(vec({1.0})), InvalidArgument);
}

TEST(Solve, RandomSpd5x5AgainstInverse) {
  std::mt19937_64 rng(17);
  const Matrix m = oracle::random_spd(5, rng);
  const Vector b = oracle::random_vector(5, rng);
  const Vector expected = oracle::inverse(m) * b;
  EXPECT_LE((solve_with_chol(chol_decompose(m), b) - expected).norm(), 1e-8 * expected.norm());
}

// Explicit-inverse oracle on random SPD matrices up to n = 50.
TEST(LinearAlgebraOracle, SolvesDeterminantsAndQuadFormsUpTo50) {
  std::mt19937_64 rng(2024);
  for (Eigen::Index n = 1; n <= 50; ++n) {
    const Matrix m = oracle::random_spd(n, rng);
    const Vector b = oracle::random_vector(n, rng);
    const CholFactor f = chol_decompose(m);
    const Matrix inv = oracle::inverse(m);
    const Vector x = solve_with_chol(f, b);
    EXPECT_LE((x - inv * b).norm(), 1e-8 * (inv * b).norm()) << "n=" << n;
    EXPECT_LE((m * x - b).norm(), 1e-8 * b.norm()) << "n=" << n;
    EXPECT_NEAR(log_det_from_chol(f), oracle::log_det(m), 1e-8 * std::max(1.0, std::abs(oracle::log_det(m))))
        << "n=" << n;
    EXPECT_NEAR(f.quad_form(b), b.dot(inv * b), 1e-8 * b.dot(inv * b)) << "n=" << n;
  }
}

TEST(FactorCorr, UsesInitialNuggetWhenPossible) {
  std::mt19937_64 rng(1);
  const Matrix x = oracle::random_points(10, 2, rng);
  const JitteredFactor f = factor_corr(x, vec({1.0, 1.0}));
  EXPECT_EQ(f.nugget, 1e-8);
}

TEST(FactorCorr, EscalatesNuggetOnNearSingularMatrix) {
  // Very smooth kernel on crowded points: without jitter R is numerically singular.
  Matrix x(30, 1);
  for (int i = 0; i < 30; ++i) x(i, 0) = i / 29.0;
  const NuggetPolicy policy{0.0, 1e-4, 10.0};
  EXPECT_THROW(chol_decompose(build_corr_matrix(x, vec({1e-2}), 0.0)), NotPositiveDefinite);
  const JitteredFactor f = factor_corr(x, vec({1e-2}), policy);
  EXPECT_GT(f.nugget, 0.0);
  EXPECT_LE(f.nugget, 1e-4 * (1 + 1e-9));
  const Matrix m = build_corr_matrix(x, vec({1e-2}), f.nugget).entries;
  EXPECT_LE((f.chol.lower() * f.chol.lower().transpose() - m).norm(), 1e-10 * m.norm());
}

TEST(FactorCorr, FailsPastMaximumNugget) {
  Matrix x(2, 1);
  x << 0.5, 0.5;
  NuggetPolicy policy{0.0, 0.0, 10.0};
  EXPECT_THROW(factor_corr(x, vec({1.0}), policy), IllConditioned);
}
