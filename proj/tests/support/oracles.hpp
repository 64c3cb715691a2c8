#pragma once

#include "s5id/linalg.hpp"

#include <complex>
#include <cstdint>
#include <random>

// Reference computations used only by tests. Each one takes a different
// route from the library kernel it checks.
namespace s5id::testing {

Matrix kron_product(const Matrix& a, const Matrix& b);

/// Solves (I_m (x) A - Au' (x) I_n) vec(M) = -vec(B) densely.
Matrix sylvester_by_vec(const Matrix& A, const Matrix& Au, const Matrix& B);

/// sum_k A^k Q A'^k, truncated once rho(A)^(2k) ||Q|| <= tol.
Matrix lyapunov_by_series(const Matrix& A, const Matrix& Q, double tol = 1e-12);

/// sum_k C A^k [B K] e^{-j(k+1)w} + [0 I].
ComplexMatrix response_by_impulses(const Matrix& A, const Matrix& B, const Matrix& C, const Matrix& K,
                                   double omega, double tol = 1e-12);

/// Y (I - U'(UU')^{-1} U) with the projector formed explicitly.
Matrix project_out_explicit(const Matrix& Y, const Matrix& U);

/// y_t = sum_{k<t} C A^{t-1-k} B u_k.
Matrix convolution_output(const Matrix& A, const Matrix& B, const Matrix& C, const Matrix& inputs);

/// Loop-based (1/T) sums over a window of a series.
void lag_sums(const Matrix& series, Index start, Index span, Matrix& s00, Matrix& s11, Matrix& s10);

/// sqrt(lambda_max(A'A)).
double gram_norm(const Matrix& A);

/// Maximum distance between two spectra after greedy nearest matching.
double spectrum_mismatch(const Spectrum& a, const Spectrum& b);

class Generator {
 public:
  explicit Generator(std::uint64_t seed) : engine_(seed) {}

  double uniform(double lo, double hi);
  Index integer(Index lo, Index hi);
  Matrix gaussian(Index rows, Index cols);
  /// Random matrix rescaled to spectral radius `radius`.
  Matrix stable(Index n, double radius);
  Matrix spd(Index n, double floor = 0.1);
  /// Orthogonal times a diagonal with entries in [lo, hi].
  Matrix well_conditioned(Index n, double lo = 0.5, double hi = 2.0);

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace s5id::testing
