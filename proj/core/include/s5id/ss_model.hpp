#pragma once

#include "s5id/linalg.hpp"
#include "s5id/rng.hpp"
#include "s5id/var1.hpp"

#include <cstdint>
#include <optional>
#include <string>

namespace s5id {

/// Innovations-form state-space model
///
///   x_{t+1} = A x_t + B u_t + K e_t
///   y_t     = C x_t + e_t,          E[e_t e_t'] = innovation_cov.
struct StateSpaceModel {
  Matrix A;  // n x n
  Matrix B;  // n x m
  Matrix C;  // d x n
  Matrix K;  // n x d
  Matrix innovation_cov;  // d x d

  Index order() const { return A.rows(); }
  Index inputs() const { return B.cols(); }
  Index outputs() const { return C.rows(); }

  /// Shape and finiteness checks only; see check_assumptions for stability, observability and reachability.
  void validate_dimensions() const;
};

/// Aligned input/output record for t = 0 .. horizon().
struct Dataset {
  Matrix inputs;   // m x (Tbar + 1)
  Matrix outputs;  // d x (Tbar + 1)
  /// Simulation-only extras.
  std::optional<Matrix> states;              // n x (Tbar + 1)
  std::optional<Matrix> output_innovations;  // d x (Tbar + 1)
  std::optional<Matrix> input_innovations;   // m x Tbar
  std::uint64_t seed = 0;
  std::string provenance;

  Index length() const { return inputs.cols(); }
  /// Tbar: index of the last sample.
  Index horizon() const { return inputs.cols() - 1; }
  void validate() const;
};

struct AssumptionReport {
  double rho_A = 0.0;
  double rho_closed_loop = 0.0;  // rho(A - K C)
  double rho_input = 0.0;        // rho of the VAR(1) transition
  double spectral_gap = 0.0;     // min |eig(A) - eig(A_u)|
  /// Krylov ranks are only computed for n <= kRankTestMaxOrder; beyond that
  /// the PBH eigenvector margins decide.
  std::optional<Index> observability_rank;
  std::optional<Index> reachability_rank;
  double observability_margin = 0.0;  // min_i |C v_i| / ||C||
  double reachability_margin = 0.0;   // min_i |w_i' [K B]| / (||w_i|| ||[K B]||)
  bool innovation_cov_pd = false;
  bool input_noise_pd = false;

  bool stable = false;
  bool minimum_phase = false;
  bool observable = false;
  bool reachable = false;
  bool input_stable = false;
  bool spectra_disjoint = false;

  bool all_pass() const {
    return stable && minimum_phase && observable && reachable && input_stable && spectra_disjoint &&
           innovation_cov_pd && input_noise_pd;
  }
};

inline constexpr Index kRankTestMaxOrder = 32;

AssumptionReport check_assumptions(const StateSpaceModel& model, const Var1Model& input_law);

struct SimulationOptions {
  InitMode init = InitMode::Stationary;
  NoiseDistribution noise = NoiseDistribution::Gaussian;
  /// Forces e_t = 0 (diagnostic mode for noise-free oracles).
  bool zero_innovations = false;
};

/// Simulates the model driven by a given input record. Stationary
/// initialization draws x_0 | u_0 from the joint stationary law and therefore
/// needs `input_law`; BurnIn runs 1000 noise-only steps from zero.
Dataset simulate_ss(const StateSpaceModel& model, const Matrix& inputs, std::uint64_t seed,
                    const SimulationOptions& options = {}, const Var1Model* input_law = nullptr);

/// Joint (model, input law) simulator that factors the stationary law once,
/// for repeated Monte Carlo draws.
class SystemSimulator {
 public:
  SystemSimulator(StateSpaceModel model, Var1Model input_law, SimulationOptions options = {});

  /// Draws u via the VAR(1) law and y via the model; length = Tbar + 1.
  Dataset simulate(Index length, std::uint64_t seed) const;

  const StateSpaceModel& model() const { return model_; }
  const Var1Model& input_law() const { return input_law_; }
  /// Stationary covariance of [x; u].
  const Matrix& joint_covariance() const { return joint_cov_; }

 private:
  Dataset run(const Matrix& inputs, std::uint64_t seed, const Matrix* input_innovations) const;

  StateSpaceModel model_;
  Var1Model input_law_;
  SimulationOptions options_;
  Matrix joint_cov_;
  Matrix conditional_gain_;    // E[x0 | u0] = gain * u0
  Matrix conditional_factor_;  // L L' = Cov[x0 | u0]
};

struct ExampleSystem {
  StateSpaceModel model;
  Var1Model input_law;
};

/// Fifth-order, two-input, one-output reference system.
ExampleSystem build_lowdim_example();

/// Order-n system with all poles at radius 0.9999, equally spaced in angle
/// over (0, pi) with their conjugates, and K placing |eig((A-KC)^p)| = 0.1.
/// Requires even n >= 4 and p >= 1.
ExampleSystem build_highdim_example(Index order, Index past_lag);

/// xi_t = x_t - M u_t with A M - M A_u + B = 0 turns the state into a VAR(1)
/// driven by w_t = K e_t - M v_t.
struct MarkovState {
  Matrix sylvester_solution;  // M, n x m
  Matrix states;              // xi, n x (Tbar + 1)
  Matrix noise_cov;           // Q_w = K Q_e K' + M Q_v M'
};

MarkovState markov_transform(const StateSpaceModel& model, const Var1Model& input_law,
                             const Dataset& data);

/// max_t || xi_{t+1} - A xi_t - (K e_t - M v_t) ||, from the stored noises.
double markov_residual(const MarkovState& state, const StateSpaceModel& model, const Dataset& data);

}  // namespace s5id
