#pragma once

#include "s5id/linalg.hpp"
#include "s5id/rng.hpp"

#include <cstdint>

namespace s5id {

/// How a simulated process is started.
enum class InitMode {
  /// Draw the initial value from the stationary distribution.
  Stationary,
  /// Start exactly at zero.
  Zero,
  /// Start at zero and discard `kBurnInSteps` steps first.
  BurnIn,
};

inline constexpr Index kBurnInSteps = 1000;

/// u_{t+1} = transition * u_t + v_t,  v_t iid with covariance noise_cov.
struct Var1Model {
  Matrix transition;
  Matrix noise_cov;

  Index dim() const { return transition.rows(); }
  /// Throws UnstableModel / NotPositiveDefinite / DimensionMismatch.
  void validate() const;
  /// Solution of Pi = A Pi A' + Q.
  Matrix stationary_covariance() const;
};

struct Var1Trajectory {
  Matrix series;       // m x length
  Matrix innovations;  // m x (length - 1); column t drives series(:, t+1)
};

Var1Trajectory simulate_var1(const Var1Model& model, Index length, std::uint64_t seed,
                             InitMode init = InitMode::Stationary,
                             NoiseDistribution dist = NoiseDistribution::Gaussian);

/// Sample lag-0/lag-1 covariances of a window of a series.
struct LagCovTriple {
  Matrix s00;  // (1/T) Z0 Z0'
  Matrix s11;  // (1/T) Z1 Z1'
  Matrix s10;  // (1/T) Z1 Z0'
  Index sample_count = 0;
};

/// Z = series(:, start .. start+span); Z0 drops the last column, Z1 the
/// first. Throws InsufficientSamples when the series is too short.
LagCovTriple lag_covariances(const Matrix& series, Index start, Index span);

/// Least-squares transition S10 S00^{-1}. Not stability-guaranteed.
Matrix ls_estimate(const LagCovTriple& cov);

/// S11^{-1/2} S10 S00^{-1/2}; its largest singular value is below one for any
/// covariance triple taken from a single trajectory.
Matrix correlation_matrix(const LagCovTriple& cov);

/// Correlation-stable transition S10 S00^{-1/2} S11^{-1/2}.
Matrix cs_estimate(const LagCovTriple& cov);

/// Weighted family P^{1/2} R P^{-1/2}, R = correlation_matrix(cov). Every
/// member is similar to R, so the spectrum does not depend on P.
Matrix cs_estimate_general(const LagCovTriple& cov, const Matrix& weight);

}  // namespace s5id
