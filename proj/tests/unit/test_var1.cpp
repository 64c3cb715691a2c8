#include "s5id/var1.hpp"

#include "expect_error.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace s5id;

namespace {

Var1Model lowdim_input_law() {
  Var1Model law;
  law.transition.resize(2, 2);
  law.transition << 0.9, 0.2, -0.2, 0.9;
  law.noise_cov.resize(2, 2);
  law.noise_cov << 1.0, 0.5, 0.5, 2.0;
  return law;
}

LagCovTriple scalar_triple() {
  Matrix series(1, 3);
  series << 1, 2, 3;
  return lag_covariances(series, 0, 2);
}

}  // namespace

TEST(SimulateVar1, WhiteWhenTransitionIsZero) {
  Var1Model law{Matrix::Zero(2, 2), Matrix::Identity(2, 2)};
  const auto traj = simulate_var1(law, 50, 7);
  for (Index t = 0; t + 1 < 50; ++t) {
    EXPECT_EQ((traj.series.col(t + 1) - traj.innovations.col(t)).norm(), 0.0);
  }
}

TEST(SimulateVar1, RecursionHoldsExactly) {
  const auto law = lowdim_input_law();
  const auto traj = simulate_var1(law, 200, 3);
  for (Index t = 0; t + 1 < 200; ++t) {
    const Vector expect = law.transition * traj.series.col(t) + traj.innovations.col(t);
    EXPECT_EQ((traj.series.col(t + 1) - expect).norm(), 0.0);
  }
}

TEST(SimulateVar1, Deterministic) {
  const auto law = lowdim_input_law();
  const auto a = simulate_var1(law, 100, 42);
  const auto b = simulate_var1(law, 100, 42);
  const auto c = simulate_var1(law, 100, 43);
  EXPECT_EQ(a.series, b.series);
  EXPECT_NE(a.series, c.series);
}

TEST(SimulateVar1, ZeroInitStartsAtZero) {
  const auto traj = simulate_var1(lowdim_input_law(), 10, 1, InitMode::Zero);
  EXPECT_EQ(traj.series.col(0).norm(), 0.0);
}

TEST(SimulateVar1, SampleCovarianceMatchesLyapunov) {
  const auto law = lowdim_input_law();
  const auto traj = simulate_var1(law, 1'000'001, 2024);
  const Matrix sample = traj.series * traj.series.transpose() / static_cast<double>(traj.series.cols());
  const Matrix pi = s5id::testing::lyapunov_by_series(law.transition, law.noise_cov);
  EXPECT_LE((sample - pi).cwiseAbs().maxCoeff() / pi.cwiseAbs().maxCoeff(), 0.02);
}

TEST(SimulateVar1, UnstableRejected) {
  Var1Model law{Matrix::Constant(1, 1, 1.01), Matrix::Identity(1, 1)};
  EXPECT_S5ID_ERROR(simulate_var1(law, 10, 1), ErrorCode::UnstableModel);
}

TEST(LagCovariances, ScalarHandArithmetic) {
  const auto cov = scalar_triple();
  EXPECT_DOUBLE_EQ(cov.s00(0, 0), 2.5);
  EXPECT_DOUBLE_EQ(cov.s11(0, 0), 6.5);
  EXPECT_DOUBLE_EQ(cov.s10(0, 0), 4.0);
  EXPECT_EQ(cov.sample_count, 2);
}

TEST(LagCovariances, ZeroSeries) {
  const auto cov = lag_covariances(Matrix::Zero(2, 10), 0, 9);
  EXPECT_EQ(cov.s00.norm() + cov.s11.norm() + cov.s10.norm(), 0.0);
  EXPECT_S5ID_ERROR(cs_estimate(cov), ErrorCode::NotPositiveDefinite);
  EXPECT_S5ID_ERROR(ls_estimate(cov), ErrorCode::NotPositiveDefinite);
}

TEST(LagCovariances, MatchesLoopSums) {
  s5id::testing::Generator g(4);
  const Matrix series = g.gaussian(3, 40);
  const auto cov = lag_covariances(series, 5, 30);
  Matrix s00, s11, s10;
  s5id::testing::lag_sums(series, 5, 30, s00, s11, s10);
  EXPECT_LE((cov.s00 - s00).norm(), 1e-13);
  EXPECT_LE((cov.s11 - s11).norm(), 1e-13);
  EXPECT_LE((cov.s10 - s10).norm(), 1e-13);
}

TEST(LagCovariances, InsufficientSamples) {
  EXPECT_S5ID_ERROR(lag_covariances(Matrix::Ones(1, 5), 2, 3), ErrorCode::InsufficientSamples);
}

TEST(LagCovariances, LargeStationaryDrawNearLyapunov) {
  const auto law = lowdim_input_law();
  const auto traj = simulate_var1(law, 400'001, 99);
  const auto cov = lag_covariances(traj.series, 0, 400'000);
  const Matrix pi = law.stationary_covariance();
  EXPECT_LE((cov.s00 - pi).norm() / pi.norm(), 0.03);
  EXPECT_LE((cov.s11 - pi).norm() / pi.norm(), 0.03);
}

TEST(LsEstimate, ZeroCrossCovariance) {
  LagCovTriple cov{Matrix::Identity(2, 2), Matrix::Identity(2, 2), Matrix::Zero(2, 2), 10};
  EXPECT_EQ(ls_estimate(cov).norm(), 0.0);
  EXPECT_EQ(cs_estimate(cov).norm(), 0.0);
}

TEST(LsEstimate, ScalarIsUnstable) { EXPECT_NEAR(ls_estimate(scalar_triple())(0, 0), 1.6, 1e-15); }

TEST(LsEstimate, ErrorShrinksWithSampleSize) {
  const auto law = lowdim_input_law();
  double err_small = 0.0, err_large = 0.0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto small = simulate_var1(law, 1001, seed);
    const auto large = simulate_var1(law, 100'001, seed + 1000);
    err_small += (ls_estimate(lag_covariances(small.series, 0, 1000)) - law.transition).norm();
    err_large += (ls_estimate(lag_covariances(large.series, 0, 100'000)) - law.transition).norm();
  }
  EXPECT_LT(err_large, err_small);
}

TEST(CsEstimate, ScalarStabilizesLs) {
  const double expect = 4.0 / std::sqrt(16.25);
  EXPECT_NEAR(cs_estimate(scalar_triple())(0, 0), expect, 1e-15);
  EXPECT_NEAR(expect, 0.99228, 1e-5);
  EXPECT_LT(expect, 1.0);
}

TEST(CsEstimate, ThreeDimensionalConsistency) {
  Var1Model law;
  law.transition.resize(3, 3);
  law.transition << 0.6, 0.2, 0.0, -0.1, 0.5, 0.3, 0.0, 0.1, 0.7;
  law.noise_cov = Matrix::Identity(3, 3);
  const auto traj = simulate_var1(law, 100'001, 17);
  const Matrix est = cs_estimate(lag_covariances(traj.series, 0, 100'000));
  EXPECT_LT(linalg::spectral_radius(est), 1.0);
  EXPECT_LE((est - law.transition).norm(), 0.05);
}

TEST(CsEstimateGeneral, WeightS11GivesCs) {
  s5id::testing::Generator g(9);
  const auto traj = simulate_var1(lowdim_input_law(), 300, 5);
  const auto cov = lag_covariances(traj.series, 0, 299);
  EXPECT_LE((cs_estimate_general(cov, cov.s11) - cs_estimate(cov)).norm(), 1e-12);
}

TEST(CsEstimateGeneral, IdentityWeightGivesCorrelation) {
  const auto traj = simulate_var1(lowdim_input_law(), 300, 6);
  const auto cov = lag_covariances(traj.series, 0, 299);
  EXPECT_LE((cs_estimate_general(cov, Matrix::Identity(2, 2)) - correlation_matrix(cov)).norm(), 1e-14);
}

TEST(CsEstimateGeneral, SpectrumIndependentOfWeight) {
  s5id::testing::Generator g(10);
  const auto traj = simulate_var1(lowdim_input_law(), 300, 7);
  const auto cov = lag_covariances(traj.series, 0, 299);
  const Spectrum base = linalg::eigenvalues(cs_estimate_general(cov, Matrix::Identity(2, 2)));
  for (int trial = 0; trial < 10; ++trial) {
    const Spectrum other = linalg::eigenvalues(cs_estimate_general(cov, g.spd(2)));
    EXPECT_LE(s5id::testing::spectrum_mismatch(base, other), 1e-10);
  }
}

TEST(CsEstimateGeneral, WeightDimensionChecked) {
  const auto cov = scalar_triple();
  EXPECT_S5ID_ERROR(cs_estimate_general(cov, Matrix::Identity(2, 2)), ErrorCode::DimensionMismatch);
}
