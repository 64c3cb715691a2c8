#include "s5id/s5.hpp"

#include "s5id/error.hpp"
#include "s5id/var1.hpp"

#include <chrono>
#include <utility>

namespace s5id {

namespace {

template <class F>
auto run_stage(std::vector<StageRecord>& log, const char* name, F&& body) {
  linalg::FactorizationCounter counter;
  const auto start = std::chrono::steady_clock::now();
  auto finish = [&] {
    const std::chrono::duration<double> dt = std::chrono::steady_clock::now() - start;
    log.push_back({name, dt.count(), counter.count()});
  };
  try {
    if constexpr (std::is_void_v<decltype(body())>) {
      body();
      finish();
    } else {
      auto out = body();
      finish();
      return out;
    }
  } catch (const Error& e) {
    throw e.at_stage(name);
  }
}

}  // namespace

Matrix estimate_input_transition(const Dataset& data) {
  return cs_estimate(lag_covariances(data.inputs, 0, data.horizon()));
}

Matrix transform_states(const Matrix& X_hat, const Matrix& U_window, const Matrix& M_hat) {
  if (M_hat.rows() != X_hat.rows() || M_hat.cols() != U_window.rows() || U_window.cols() != X_hat.cols()) {
    throw Error(ErrorCode::DimensionMismatch, "states, inputs and M are not aligned");
  }
  Matrix Z = X_hat;
  Z.noalias() -= M_hat * U_window;
  return Z;
}

Matrix stable_transition_from_states(const Matrix& Z_check) {
  return cs_estimate(lag_covariances(Z_check, 0, Z_check.cols() - 1));
}

SubspaceFit subspace_identify(const Dataset& data, const SubspaceConfig& cfg, bool keep_decomposition) {
  try {
    cfg.validate();
    data.validate();
  } catch (const Error& e) {
    throw e.at_stage("validate");
  }
  SubspaceFit fit;
  fit.config = cfg;
  auto& log = fit.stages;

  HankelBlocks blocks = run_stage(log, stage::kBuildHankel, [&] { return build_hankel(data, cfg); });
  PartialCovariances covs = run_stage(log, stage::kPartialCovariances, [&] { return partial_covariances(blocks); });
  CvaDecomposition cva =
      run_stage(log, stage::kCvaStates, [&] { return cva_states(blocks, std::move(covs), cfg); });
  fit.ls = run_stage(log, stage::kLsEstimates,
                     [&] { return ls_system_estimates(cva.X_hat, blocks.U0, blocks.Y0); });

  fit.sample_count = blocks.sample_count;
  fit.U_window = data.inputs.middleCols(blocks.first_time, blocks.sample_count + 1);
  fit.singular_values = cva.singular_values;
  fit.rho_A_star = linalg::spectral_radius(fit.ls.A_star);
  if (keep_decomposition) {
    fit.X_hat = cva.X_hat;
    fit.cva = std::move(cva);
  } else {
    fit.X_hat = std::move(cva.X_hat);
  }
  return fit;
}

namespace {

struct InputEstimate {
  Matrix A_u_hat;
  LagCovTriple cov;
};

InputEstimate input_stage(const Dataset& data, std::vector<StageRecord>& log) {
  InputEstimate in;
  in.A_u_hat = run_stage(log, stage::kEstimateAu, [&] {
    in.cov = lag_covariances(data.inputs, 0, data.horizon());
    return cs_estimate(in.cov);
  });
  return in;
}

S5Result complete(SubspaceFit fit, InputEstimate input, std::vector<StageRecord> log) {
  S5Result r;
  r.config = fit.config;
  r.A_u_hat = std::move(input.A_u_hat);
  r.M_hat = run_stage(log, stage::kSylvester,
                      [&] { return linalg::solve_sylvester(fit.ls.A_star, r.A_u_hat, fit.ls.B_hat); });
  const Matrix Z = run_stage(log, stage::kTransformStates,
                             [&] { return transform_states(fit.X_hat, fit.U_window, r.M_hat); });
  LagCovTriple state_cov;
  r.A_hat = run_stage(log, stage::kStableA, [&] {
    state_cov = lag_covariances(Z, 0, Z.cols() - 1);
    return cs_estimate(state_cov);
  });

  auto& dg = r.diagnostics;
  dg.rho_A_star = fit.rho_A_star;
  dg.rho_A_hat = linalg::spectral_radius(r.A_hat);
  dg.rho_Au_hat = linalg::spectral_radius(r.A_u_hat);
  dg.sigma_R = linalg::largest_singular_value(correlation_matrix(state_cov));
  dg.sigma_R_input = linalg::largest_singular_value(correlation_matrix(input.cov));
  dg.sylvester_residual = linalg::sylvester_residual(fit.ls.A_star, r.A_u_hat, fit.ls.B_hat, r.M_hat);
  for (const auto& s : log) {
    dg.total_seconds += s.seconds;
    dg.total_factorizations += s.factorizations;
  }
  dg.stages = std::move(log);
  r.ls = std::move(fit.ls);
  r.singular_values = std::move(fit.singular_values);
  return r;
}

}  // namespace

S5Result s5_from_subspace(const Dataset& data, SubspaceFit fit) {
  std::vector<StageRecord> log = std::move(fit.stages);
  InputEstimate input = input_stage(data, log);
  return complete(std::move(fit), std::move(input), std::move(log));
}

S5Result s5_identify(const Dataset& data, const SubspaceConfig& cfg) {
  try {
    cfg.validate();
    data.validate();
  } catch (const Error& e) {
    throw e.at_stage("validate");
  }
  std::vector<StageRecord> log;
  InputEstimate input = input_stage(data, log);
  SubspaceFit fit = subspace_identify(data, cfg);
  for (auto& s : fit.stages) log.push_back(std::move(s));
  return complete(std::move(fit), std::move(input), std::move(log));
}

StateSpaceModel S5Result::model() const {
  return StateSpaceModel{A_hat, ls.B_hat, ls.C_hat, ls.K_hat, ls.Q_eps_hat};
}

StateSpaceModel S5Result::ls_model() const {
  return StateSpaceModel{ls.A_star, ls.B_hat, ls.C_hat, ls.K_hat, ls.Q_eps_hat};
}

}  // namespace s5id
