#pragma once

#include "s5id/cva.hpp"
#include "s5id/linalg.hpp"
#include "s5id/ss_model.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace s5id {

/// Stage labels, in execution order.
namespace stage {
inline constexpr const char* kEstimateAu = "estimate_Au";
inline constexpr const char* kBuildHankel = "build_hankel";
inline constexpr const char* kPartialCovariances = "partial_covariances";
inline constexpr const char* kCvaStates = "cva_states";
inline constexpr const char* kLsEstimates = "ls_system_estimates";
inline constexpr const char* kSylvester = "solve_sylvester";
inline constexpr const char* kTransformStates = "transform_states";
inline constexpr const char* kStableA = "stable_A_from_states";
}  // namespace stage

struct StageRecord {
  std::string name;
  double seconds = 0.0;
  std::uint64_t factorizations = 0;
};

/// CS estimate of the input transition from the whole input record u_0..u_Tbar.
Matrix estimate_input_transition(const Dataset& data);

/// Columnwise x_hat_t - M u_t.
Matrix transform_states(const Matrix& X_hat, const Matrix& U_window, const Matrix& M_hat);

/// CS estimate of the transition from a state sequence (all columns).
Matrix stable_transition_from_states(const Matrix& Z_check);

/// Output of the CVA + least-squares front end.
struct SubspaceFit {
  SubspaceConfig config;
  Index sample_count = 0;
  Vector singular_values;
  Matrix X_hat;     // n_hat x (T+1)
  Matrix U_window;  // m x (T+1), u_t for t = p .. p+T
  LsEstimates ls;
  double rho_A_star = 0.0;
  std::vector<StageRecord> stages;
  /// Full decomposition, kept only on request.
  std::optional<CvaDecomposition> cva;
};

SubspaceFit subspace_identify(const Dataset& data, const SubspaceConfig& cfg, bool keep_decomposition = false);

struct S5Diagnostics {
  double rho_A_star = 0.0;
  double rho_A_hat = 0.0;
  double rho_Au_hat = 0.0;
  /// Largest singular value of the correlation matrix behind A_hat.
  double sigma_R = 0.0;
  /// Same for the input estimate.
  double sigma_R_input = 0.0;
  double sylvester_residual = 0.0;
  std::vector<StageRecord> stages;
  double total_seconds = 0.0;
  std::uint64_t total_factorizations = 0;
};

struct S5Result {
  SubspaceConfig config;
  Matrix A_u_hat;
  LsEstimates ls;
  Matrix M_hat;
  Matrix A_hat;
  Vector singular_values;
  S5Diagnostics diagnostics;

  /// (A_hat, B_hat, C_hat, K_hat, Q_eps_hat).
  StateSpaceModel model() const;
  /// Same with the least-squares A_star.
  StateSpaceModel ls_model() const;
};

/// Completes the stable pipeline from a front-end fit of the same data.
S5Result s5_from_subspace(const Dataset& data, SubspaceFit fit);

/// Full pipeline. Errors are rethrown with the failing stage attached.
S5Result s5_identify(const Dataset& data, const SubspaceConfig& cfg);

}  // namespace s5id
