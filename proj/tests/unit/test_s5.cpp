#include "s5id/s5.hpp"

#include "expect_error.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <string>
#include <vector>

using namespace s5id;
using s5id::testing::Generator;

namespace {

Dataset lowdim_record(Index Tbar, std::uint64_t seed) {
  const auto sys = build_lowdim_example();
  const SystemSimulator sim(sys.model, sys.input_law);
  return sim.simulate(Tbar + 1, seed);
}

}  // namespace

TEST(EstimateInputTransition, WhiteInput) {
  Var1Model law{Matrix::Zero(2, 2), Matrix::Identity(2, 2)};
  Dataset d;
  d.inputs = simulate_var1(law, 100'001, 4).series;
  d.outputs = Matrix::Zero(1, d.inputs.cols());
  EXPECT_LE(linalg::largest_singular_value(estimate_input_transition(d)), 0.05);
}

TEST(EstimateInputTransition, ConsistentForExampleLaw) {
  const auto sys = build_lowdim_example();
  Dataset d;
  d.inputs = simulate_var1(sys.input_law, 100'001, 5).series;
  d.outputs = Matrix::Zero(1, d.inputs.cols());
  const Matrix est = estimate_input_transition(d);
  EXPECT_LE(linalg::largest_singular_value(est - sys.input_law.transition), 0.02);
  EXPECT_LT(linalg::spectral_radius(est), 1.0);
}

TEST(TransformStates, ZeroGainOrZeroInputs) {
  Generator g(1);
  const Matrix X = g.gaussian(3, 20);
  const Matrix U = g.gaussian(2, 20);
  EXPECT_EQ(transform_states(X, U, Matrix::Zero(3, 2)), X);
  EXPECT_EQ(transform_states(X, Matrix::Zero(2, 20), g.gaussian(3, 2)), X);
}

TEST(TransformStates, Inverse) {
  Generator g(2);
  const Matrix X = g.gaussian(3, 20);
  const Matrix U = g.gaussian(2, 20);
  const Matrix M = g.gaussian(3, 2);
  EXPECT_LE((transform_states(transform_states(X, U, M), U, -M) - X).norm(), 1e-13);
}

TEST(TransformStates, Misaligned) {
  Generator g(3);
  EXPECT_S5ID_ERROR(transform_states(g.gaussian(3, 20), g.gaussian(2, 19), g.gaussian(3, 2)),
                    ErrorCode::DimensionMismatch);
}

TEST(StableTransition, ScalarHandArithmetic) {
  Matrix z(1, 3);
  z << 1, 2, 3;
  EXPECT_NEAR(stable_transition_from_states(z)(0, 0), 4.0 / std::sqrt(16.25), 1e-15);
}

TEST(StableTransition, TrueMarkovStates) {
  const auto sys = build_lowdim_example();
  const SystemSimulator sim(sys.model, sys.input_law);
  const auto data = sim.simulate(200'001, 6);
  const auto ms = markov_transform(sys.model, sys.input_law, data);
  const Matrix est = stable_transition_from_states(ms.states);
  EXPECT_LT(linalg::spectral_radius(est), 1.0);
  EXPECT_LE(s5id::testing::spectrum_mismatch(linalg::eigenvalues(est), linalg::eigenvalues(sys.model.A)), 0.02);
}

TEST(S5Identify, StableWhenLeastSquaresIsNot) {
  const SubspaceConfig cfg{10, 36, 5};
  const auto sys = build_lowdim_example();
  const SystemSimulator sim(sys.model, sys.input_law);
  bool found = false;
  for (std::uint64_t seed = 1; seed <= 8000 && !found; ++seed) {
    const auto data = sim.simulate(1281, seed);
    auto fit = subspace_identify(data, cfg);
    if (fit.rho_A_star < 1.0) continue;
    found = true;
    const auto r = s5_from_subspace(data, std::move(fit));
    EXPECT_GE(r.diagnostics.rho_A_star, 1.0);
    EXPECT_LT(r.diagnostics.rho_A_hat, 1.0);
    EXPECT_LT(r.diagnostics.rho_Au_hat, 1.0);
    EXPECT_LT(r.diagnostics.sigma_R, 1.0);
  }
  EXPECT_TRUE(found);
}

TEST(S5Identify, StageOrderAndDiagnostics) {
  const auto data = lowdim_record(1280, 7);
  const auto r = s5_identify(data, SubspaceConfig{10, 36, 5});
  const std::vector<std::string> expect = {stage::kEstimateAu, stage::kBuildHankel,     stage::kPartialCovariances,
                                           stage::kCvaStates,  stage::kLsEstimates,     stage::kSylvester,
                                           stage::kTransformStates, stage::kStableA};
  ASSERT_EQ(r.diagnostics.stages.size(), expect.size());
  for (std::size_t i = 0; i < expect.size(); ++i) EXPECT_EQ(r.diagnostics.stages[i].name, expect[i]);
  EXPECT_LE(r.diagnostics.sylvester_residual, 1e-8);
  EXPECT_LT(r.diagnostics.rho_A_hat, 1.0);
  EXPECT_NEAR(r.diagnostics.rho_A_hat, linalg::spectral_radius(r.A_hat), 1e-15);
  EXPECT_GT(r.diagnostics.total_factorizations, 0u);
  EXPECT_EQ(r.model().A, r.A_hat);
  EXPECT_EQ(r.ls_model().A, r.ls.A_star);
}

TEST(S5Identify, MatchesComposedStages) {
  const auto data = lowdim_record(640, 8);
  const SubspaceConfig cfg{10, 33, 5};
  const auto r = s5_identify(data, cfg);
  const auto fit = subspace_identify(data, cfg);
  const Matrix Au = estimate_input_transition(data);
  const Matrix M = linalg::solve_sylvester(fit.ls.A_star, Au, fit.ls.B_hat);
  const Matrix A = stable_transition_from_states(transform_states(fit.X_hat, fit.U_window, M));
  EXPECT_EQ(r.A_u_hat, Au);
  EXPECT_EQ(r.M_hat, M);
  EXPECT_EQ(r.A_hat, A);
}

TEST(S5Identify, Deterministic) {
  const auto data = lowdim_record(640, 9);
  const SubspaceConfig cfg{10, 33, 5};
  const auto a = s5_identify(data, cfg);
  const auto b = s5_identify(data, cfg);
  EXPECT_EQ(a.A_hat, b.A_hat);
  EXPECT_EQ(a.A_u_hat, b.A_u_hat);
  EXPECT_EQ(a.M_hat, b.M_hat);
  EXPECT_EQ(a.ls.K_hat, b.ls.K_hat);
  EXPECT_EQ(a.singular_values, b.singular_values);
}

TEST(S5Identify, HighdimSixteenIsFast) {
  const Index n = 16, p = 26;
  const auto sys = build_highdim_example(n, p);
  const SystemSimulator sim(sys.model, sys.input_law);
  const Index Tbar = static_cast<Index>(std::ceil(5.0 * 4.0 * 26.0 + 500.0));
  const auto r = s5_identify(sim.simulate(Tbar + 1, 10), SubspaceConfig{p, p, n});
  EXPECT_LT(r.diagnostics.rho_A_hat, 1.0);
  EXPECT_GT(r.diagnostics.total_seconds, 0.0);
  EXPECT_LT(r.diagnostics.total_seconds, 5.0);
}

TEST(S5Identify, FailingStageIsNamed) {
  auto data = lowdim_record(320, 11);
  data.inputs.setZero();
  try {
    s5_identify(data, SubspaceConfig{10, 29, 5});
    ADD_FAILURE() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NotPositiveDefinite);
    EXPECT_EQ(e.stage(), stage::kEstimateAu);
  }
}

TEST(S5Identify, InsufficientSamplesNamed) {
  const auto data = lowdim_record(60, 12);
  try {
    s5_identify(data, SubspaceConfig{10, 29, 5});
    ADD_FAILURE() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InsufficientSamples);
    EXPECT_EQ(e.stage(), stage::kBuildHankel);
  }
}
