#include "s5id/cva.hpp"
#include "s5id/eval.hpp"
#include "s5id/linalg.hpp"
#include "s5id/s5.hpp"
#include "s5id/var1.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>

using namespace s5id;
using s5id::testing::Generator;

namespace {

// Random trajectory of a random VAR(1), occasionally explosive or unit-root.
Matrix random_trajectory(Generator& g, Index dim, Index length) {
  const double radius = g.uniform(0.0, 1.02);
  const Matrix F = g.stable(dim, radius);
  const Matrix L = g.gaussian(dim, dim);
  Matrix x = Matrix::Zero(dim, length);
  x.col(0) = g.gaussian(dim, 1);
  for (Index t = 1; t < length; ++t) x.col(t) = F * x.col(t - 1) + L * g.gaussian(dim, 1);
  return x;
}

StateSpaceModel random_system(Generator& g, Index n, Index m, Index d) {
  return StateSpaceModel{g.stable(n, 0.97), g.gaussian(n, m), g.gaussian(d, n), g.gaussian(n, d),
                         Matrix::Identity(d, d)};
}

StateSpaceModel similar(const StateSpaceModel& s, const Matrix& T) {
  const Matrix Ti = T.inverse();
  return StateSpaceModel{T * s.A * Ti, T * s.B, s.C * Ti, T * s.K, s.innovation_cov};
}

double min_eigenvalue(const Matrix& S) {
  return Eigen::SelfAdjointEigenSolver<Matrix>(S, Eigen::EigenvaluesOnly).eigenvalues().minCoeff();
}

}  // namespace

TEST(Property, CsEstimateAlwaysStable) {
  Generator g(101);
  int checked = 0;
  for (int trial = 0; trial < 10'000; ++trial) {
    const Index dim = g.integer(1, 4);
    const Index length = g.integer(3 * dim + 5, 200);
    const Matrix x = random_trajectory(g, dim, length);
    const auto cov = lag_covariances(x, 0, length - 1);
    if (min_eigenvalue(cov.s00) <= 1e-8 * cov.s00.norm() || min_eigenvalue(cov.s11) <= 1e-8 * cov.s11.norm()) {
      continue;
    }
    ++checked;
    const double sigma = linalg::largest_singular_value(correlation_matrix(cov));
    const double rho = linalg::spectral_radius(cs_estimate(cov));
    ASSERT_LT(sigma, 1.0) << "trial " << trial;
    ASSERT_LT(rho, 1.0) << "trial " << trial;
  }
  EXPECT_GE(checked, 9'900);
}

TEST(Property, GeneralWeightSpectrumIndependentOfWeight) {
  Generator g(102);
  for (int trial = 0; trial < 200; ++trial) {
    const Index dim = g.integer(1, 5);
    const Matrix x = random_trajectory(g, dim, 300);
    const auto cov = lag_covariances(x, 0, 299);
    const Spectrum ref = linalg::eigenvalues(cs_estimate_general(cov, Matrix::Identity(dim, dim)));
    const Spectrum other = linalg::eigenvalues(cs_estimate_general(cov, g.spd(dim)));
    EXPECT_LE(s5id::testing::spectrum_mismatch(ref, other), 1e-9);
  }
}

TEST(Property, SimilarityPreservesSpectralRadius) {
  Generator g(103);
  for (int trial = 0; trial < 200; ++trial) {
    const Index dim = g.integer(1, 6);
    const Matrix X = g.gaussian(dim, dim);
    const Matrix P = g.spd(dim);
    const Matrix Y = linalg::sym_sqrt(P) * X * linalg::sym_inv_sqrt(P);
    const double rho = linalg::spectral_radius(X);
    EXPECT_NEAR(linalg::spectral_radius(Y), rho, 1e-9 * std::max(1.0, rho));
  }
}

TEST(Property, SquareRootsCompose) {
  Generator g(104);
  for (int trial = 0; trial < 500; ++trial) {
    const Index dim = g.integer(1, 8);
    const Matrix S = g.spd(dim, g.uniform(0.01, 1.0));
    const Matrix I = linalg::sym_sqrt(S) * linalg::sym_inv_sqrt(S);
    EXPECT_LE((I - Matrix::Identity(dim, dim)).norm(), 1e-9);
  }
}

TEST(Property, SylvesterMatchesVecOracle) {
  Generator g(105);
  for (int trial = 0; trial < 300; ++trial) {
    const Index n = g.integer(1, 8);
    const Index m = g.integer(1, 3);
    const Matrix A = g.stable(n, g.uniform(0.1, 1.5));
    const Matrix Au = g.stable(m, g.uniform(0.1, 0.99));
    if (linalg::spectral_gap(linalg::eigenvalues(A), linalg::eigenvalues(Au)) < 1e-3) continue;
    const Matrix B = g.gaussian(n, m);
    const Matrix M = linalg::solve_sylvester(A, Au, B);
    const Matrix ref = s5id::testing::sylvester_by_vec(A, Au, B);
    EXPECT_LE((M - ref).norm(), 1e-9 * std::max(1.0, ref.norm()));
  }
}

TEST(Property, LyapunovSolutionPositiveDefinite) {
  Generator g(106);
  for (int trial = 0; trial < 300; ++trial) {
    const Index n = g.integer(1, 8);
    const Matrix P = linalg::solve_dlyap(g.stable(n, g.uniform(0.0, 0.999)), g.spd(n));
    EXPECT_GT(min_eigenvalue(P), 0.0);
  }
}

TEST(Property, ProjectOutIdempotentAndAnnihilating) {
  Generator g(107);
  for (int trial = 0; trial < 100; ++trial) {
    const Index cols = g.integer(10, 60);
    const Index k = g.integer(1, 4);
    const Matrix U = g.gaussian(k, cols);
    const Matrix Y = g.gaussian(g.integer(1, 5), cols);
    const Matrix P1 = project_out(Y, U);
    EXPECT_LE((project_out(P1, U) - P1).norm(), 1e-10 * std::max(1.0, P1.norm()));
    EXPECT_LE((P1 * U.transpose()).norm(), 1e-10 * Y.norm() * U.norm());
    EXPECT_LE(project_out(U, U).norm(), 1e-10 * U.norm());
  }
}

TEST(Property, TransformStatesInverts) {
  Generator g(108);
  for (int trial = 0; trial < 100; ++trial) {
    const Index n = g.integer(1, 6), m = g.integer(1, 3), cols = g.integer(2, 40);
    const Matrix X = g.gaussian(n, cols), U = g.gaussian(m, cols), M = g.gaussian(n, m);
    EXPECT_LE((transform_states(transform_states(X, U, M), U, -M) - X).norm(), 1e-12 * std::max(1.0, X.norm()));
  }
}

TEST(Property, ResponseInvariantUnderStateSimilarity) {
  Generator g(109);
  for (int trial = 0; trial < 50; ++trial) {
    const Index n = g.integer(1, 8), m = g.integer(1, 3), d = g.integer(1, 2);
    const auto sys = random_system(g, n, m, d);
    const auto moved = similar(sys, g.well_conditioned(n));
    for (double w : frequency_grid(kHardOmegaMax, 25)) {
      const ComplexMatrix a = frequency_response(sys, w);
      EXPECT_LE((frequency_response(moved, w) - a).norm(), 1e-9 * std::max(1.0, a.norm()));
    }
    const auto other = random_system(g, n, m, d);
    const auto r0 = hinf_report(other, sys, 100);
    const auto r1 = hinf_report(other, moved, 100);
    EXPECT_LE(std::abs(r1.hard_error - r0.hard_error), 1e-9 * std::max(1.0, r0.hard_error));
    EXPECT_LE(std::abs(r1.soft_error - r0.soft_error), 1e-9 * std::max(1.0, r0.soft_error));
  }
}

TEST(Property, InputTransitionErrorShrinks) {
  const auto sys = build_lowdim_example();
  std::vector<double> medians;
  for (Index Tbar : {1'000, 10'000, 100'000}) {
    std::vector<double> err;
    for (std::uint64_t seed = 1; seed <= 200; ++seed) {
      Dataset d;
      d.inputs = simulate_var1(sys.input_law, Tbar + 1, seed * 7919 + static_cast<std::uint64_t>(Tbar)).series;
      d.outputs = Matrix::Zero(1, d.inputs.cols());
      err.push_back(linalg::largest_singular_value(estimate_input_transition(d) - sys.input_law.transition));
    }
    std::nth_element(err.begin(), err.begin() + 99, err.end());
    medians.push_back(err[99]);
  }
  EXPECT_LT(medians[1], medians[0]);
  EXPECT_LT(medians[2], medians[1]);
}
