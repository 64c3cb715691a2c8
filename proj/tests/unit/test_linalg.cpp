#include "s5id/linalg.hpp"

#include "expect_error.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <complex>
#include <limits>

using namespace s5id;
using s5id::testing::Generator;

namespace {

double rel(const Matrix& a, const Matrix& b) { return (a - b).norm() / std::max(1.0, b.norm()); }

Matrix diag2(double a, double b) {
  Matrix m = Matrix::Zero(2, 2);
  m(0, 0) = a;
  m(1, 1) = b;
  return m;
}

}  // namespace

TEST(SymSqrt, Identity) {
  EXPECT_LE((linalg::sym_sqrt(Matrix::Identity(3, 3)) - Matrix::Identity(3, 3)).norm(), 1e-15);
  EXPECT_LE((linalg::sym_inv_sqrt(Matrix::Identity(3, 3)) - Matrix::Identity(3, 3)).norm(), 1e-15);
}

TEST(SymSqrt, Diagonal) {
  EXPECT_LE((linalg::sym_sqrt(diag2(4, 9)) - diag2(2, 3)).norm(), 1e-14);
  EXPECT_LE((linalg::sym_inv_sqrt(diag2(4, 9)) - diag2(0.5, 1.0 / 3.0)).norm(), 1e-14);
}

TEST(SymSqrt, RandomComposesBack) {
  Generator g(11);
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix S = g.spd(5);
    const Matrix R = linalg::sym_sqrt(S);
    EXPECT_LE((R - R.transpose()).norm(), 1e-14);
    EXPECT_LE((R * R - S).norm() / S.norm(), 1e-10);
    const Matrix Ri = linalg::sym_inv_sqrt(S);
    EXPECT_LE((Ri * S * Ri - Matrix::Identity(5, 5)).norm(), 1e-9);
    EXPECT_LE((R * Ri - Matrix::Identity(5, 5)).norm(), 1e-9);
  }
}

TEST(SymSqrt, RejectsSemidefinite) {
  EXPECT_S5ID_ERROR(linalg::sym_sqrt(diag2(1, 0)), ErrorCode::NotPositiveDefinite);
  EXPECT_S5ID_ERROR(linalg::sym_inv_sqrt(diag2(1, -1)), ErrorCode::NotPositiveDefinite);
  EXPECT_S5ID_ERROR(linalg::sym_sqrt(Matrix::Zero(2, 2)), ErrorCode::NotPositiveDefinite);
}

TEST(SymSqrt, RejectsNonFinite) {
  Matrix S = Matrix::Identity(2, 2);
  S(0, 0) = std::numeric_limits<double>::quiet_NaN();
  EXPECT_S5ID_ERROR(linalg::sym_sqrt(S), ErrorCode::NonFiniteInput);
}

TEST(SolveSpdRight, MatchesInverse) {
  Generator g(3);
  const Matrix G = g.spd(4);
  const Matrix X = g.gaussian(3, 4);
  EXPECT_LE(rel(linalg::solve_spd_right(X, G), X * G.inverse()), 1e-12);
  EXPECT_S5ID_ERROR(linalg::solve_spd_right(X, Matrix::Zero(4, 4)), ErrorCode::RankDeficientRegressors);
}

TEST(Sylvester, ScalarClosedForm) {
  const Matrix M = linalg::solve_sylvester(Matrix::Constant(1, 1, 0.0), Matrix::Constant(1, 1, 0.5),
                                           Matrix::Constant(1, 1, 1.0));
  EXPECT_NEAR(M(0, 0), 2.0, 1e-14);
}

TEST(Sylvester, CommonEigenvaluesRejected) {
  EXPECT_S5ID_ERROR(linalg::solve_sylvester(0.5 * Matrix::Identity(2, 2), 0.5 * Matrix::Identity(2, 2),
                                            Matrix::Ones(2, 2)),
                    ErrorCode::CommonEigenvalues);
}

TEST(Sylvester, MatchesVecOracle) {
  Generator g(5);
  for (int trial = 0; trial < 25; ++trial) {
    const Matrix A = g.stable(4, 0.9);
    const Matrix Au = g.stable(2, 0.8);
    const Matrix B = g.gaussian(4, 2);
    const Matrix M = linalg::solve_sylvester(A, Au, B);
    const Matrix oracle = s5id::testing::sylvester_by_vec(A, Au, B);
    EXPECT_LE(rel(M, oracle), 1e-10) << "trial " << trial;
    EXPECT_LE(linalg::sylvester_residual(A, Au, B, M), 1e-9);
  }
}

TEST(Sylvester, DimensionMismatch) {
  EXPECT_S5ID_ERROR(linalg::solve_sylvester(Matrix::Zero(3, 3), 0.5 * Matrix::Identity(2, 2), Matrix::Zero(3, 3)),
                    ErrorCode::DimensionMismatch);
}

TEST(Dlyap, ZeroTransition) {
  Generator g(8);
  const Matrix Q = g.spd(3);
  EXPECT_LE(rel(linalg::solve_dlyap(Matrix::Zero(3, 3), Q), Q), 1e-14);
}

TEST(Dlyap, ScalarGeometricSeries) {
  EXPECT_NEAR(linalg::solve_dlyap(Matrix::Constant(1, 1, 0.5), Matrix::Constant(1, 1, 1.0))(0, 0), 4.0 / 3.0,
              1e-14);
}

TEST(Dlyap, MatchesSeriesOracle) {
  Generator g(21);
  for (int trial = 0; trial < 10; ++trial) {
    const Matrix A = g.stable(6, 0.9);
    const Matrix Q = g.spd(6);
    const Matrix P = linalg::solve_dlyap(A, Q);
    EXPECT_LE(rel(P, s5id::testing::lyapunov_by_series(A, Q)), 1e-10);
    EXPECT_LE((P - A * P * A.transpose() - Q).norm() / Q.norm(), 1e-8);
    EXPECT_LE((P - P.transpose()).norm(), 1e-12 * P.norm());
    Eigen::SelfAdjointEigenSolver<Matrix> es(P);
    EXPECT_GT(es.eigenvalues().minCoeff(), 0.0);
  }
}

TEST(Dlyap, UnstableRejected) {
  EXPECT_S5ID_ERROR(linalg::solve_dlyap(Matrix::Identity(2, 2), Matrix::Identity(2, 2)), ErrorCode::UnstableMatrix);
}

TEST(Spectra, DiagonalRadius) { EXPECT_DOUBLE_EQ(linalg::spectral_radius(diag2(0.5, -0.9)), 0.9); }

TEST(Spectra, RotationBlock) {
  const double theta = 0.74;
  Matrix R(2, 2);
  R << std::cos(theta), -std::sin(theta), std::sin(theta), std::cos(theta);
  const Spectrum s = linalg::eigenvalues(0.95 * R);
  ASSERT_EQ(s.size(), 2);
  for (Index i = 0; i < 2; ++i) {
    EXPECT_NEAR(std::abs(s(i)), 0.95, 1e-14);
    EXPECT_NEAR(std::abs(std::arg(s(i))), theta, 1e-14);
  }
  EXPECT_NEAR(std::arg(s(0)), -std::arg(s(1)), 1e-14);
}

TEST(Spectra, LargestSingularValueMatchesGram) {
  Generator g(13);
  for (int trial = 0; trial < 10; ++trial) {
    const Matrix A = g.gaussian(8, 8);
    EXPECT_NEAR(linalg::largest_singular_value(A), s5id::testing::gram_norm(A), 1e-10 * s5id::testing::gram_norm(A));
  }
}

TEST(Spectra, GapBetweenSpectra) {
  Spectrum a(2), b(1);
  a << 0.1, 0.5;
  b << 0.45;
  EXPECT_NEAR(linalg::spectral_gap(a, b), 0.05, 1e-15);
}

TEST(PlaceObserverPoles, Scalar) {
  const Matrix K = linalg::place_observer_poles(Matrix::Constant(1, 1, 0.9), Matrix::Constant(1, 1, 1.0),
                                                Spectrum::Constant(1, 0.1));
  EXPECT_NEAR(K(0, 0), 0.8, 1e-14);
}

TEST(PlaceObserverPoles, UnobservableRejected) {
  Spectrum targets(2);
  targets << 0.1, 0.2;
  EXPECT_S5ID_ERROR(linalg::place_observer_poles(diag2(0.5, 0.3), Matrix::Zero(1, 2), targets),
                    ErrorCode::NotObservable);
}

TEST(PlaceObserverPoles, MultiOutputUnsupported) {
  Spectrum targets(2);
  targets << 0.1, 0.2;
  EXPECT_S5ID_ERROR(linalg::place_observer_poles(diag2(0.5, 0.3), Matrix::Identity(2, 2), targets),
                    ErrorCode::UnsupportedDimension);
}

TEST(PlaceObserverPoles, BlockDiagonalTargetsOnCircle) {
  const Index n = 8;
  const Index p = 18;
  Matrix A = Matrix::Zero(n, n);
  for (Index k = 0; k < n / 2; ++k) {
    const double angle = M_PI * static_cast<double>(k + 1) / static_cast<double>(n / 2 + 1);
    const double re = 0.9999 * std::cos(angle);
    const double im = 0.9999 * std::sin(angle);
    A.block(2 * k, 2 * k, 2, 2) << re, im, -im, re;
  }
  const Matrix C = Matrix::Constant(1, n, 0.3);
  const double radius = std::pow(0.1, 1.0 / static_cast<double>(p));
  Spectrum targets(n);
  for (Index k = 0; k < n / 2; ++k) {
    const double angle = M_PI * (static_cast<double>(k) + 0.5) / static_cast<double>(n / 2);
    targets(2 * k) = std::polar(radius, angle);
    targets(2 * k + 1) = std::polar(radius, -angle);
  }
  const Matrix K = linalg::place_observer_poles(A, C, targets);
  Eigen::EigenSolver<Matrix> es(A - K * C);
  for (Index i = 0; i < n; ++i) EXPECT_NEAR(std::abs(es.eigenvalues()(i)), radius, 1e-4);
  EXPECT_LE(s5id::testing::spectrum_mismatch(es.eigenvalues(), targets), 1e-6);
}

TEST(KrylovMatrices, Ranks) {
  const Matrix A = diag2(0.5, 0.3);
  Matrix C(1, 2);
  C << 1, 1;
  EXPECT_EQ(linalg::numerical_rank(linalg::observability_matrix(A, C)), 2);
  EXPECT_EQ(linalg::numerical_rank(linalg::reachability_matrix(A, C.transpose())), 2);
  Matrix c1(1, 2);
  c1 << 1, 0;
  EXPECT_EQ(linalg::numerical_rank(linalg::observability_matrix(A, c1)), 1);
}

TEST(Kron, MatchesOracle) {
  Generator g(2);
  const Matrix a = g.gaussian(2, 3);
  const Matrix b = g.gaussian(3, 2);
  EXPECT_EQ((linalg::kron(a, b) - s5id::testing::kron_product(a, b)).norm(), 0.0);
}

TEST(FactorizationCounter, CountsPerCall) {
  linalg::FactorizationCounter counter;
  linalg::sym_sqrt(Matrix::Identity(2, 2));
  EXPECT_EQ(counter.count(), 1u);
}
