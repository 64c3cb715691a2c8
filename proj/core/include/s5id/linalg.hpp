#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <string_view>

namespace s5id {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;
/// Eigenvalue list of a square matrix, with multiplicity.
using Spectrum = Eigen::VectorXcd;
using Index = Eigen::Index;

}  // namespace s5id

/// Dense kernels shared by every other module. All functions are pure and
/// reject non-finite input with ErrorCode::NonFiniteInput.
namespace s5id::linalg {

struct Tolerances {
  /// Relative asymmetry accepted for matrices that must be symmetric.
  static constexpr double symmetry = 1e-10;
  /// Eigenvalues at or below psd * ||S|| count as non-positive.
  static constexpr double psd = 1e-12;
  /// Minimum separation between spectra in a Sylvester equation.
  static constexpr double eigen_gap = 1e-9;
};

void require_finite(const Matrix& m, std::string_view what);
void require_square(const Matrix& m, std::string_view what);
void require_symmetric(const Matrix& m, std::string_view what);

/// Symmetric square root and its inverse from a single eigendecomposition.
struct SymmetricRoots {
  Matrix root;
  Matrix inverse_root;
  Vector eigenvalues;  // ascending
};

/// Throws NotPositiveDefinite when any eigenvalue is <= psd * ||S||.
/// Eigenvalues are never clamped.
SymmetricRoots symmetric_roots(const Matrix& spd);
Matrix sym_sqrt(const Matrix& spd);
Matrix sym_inv_sqrt(const Matrix& spd);

/// X * G^{-1} for symmetric positive definite G via Cholesky. Throws
/// RankDeficientRegressors when G is numerically singular.
Matrix solve_spd_right(const Matrix& rhs, const Matrix& gram);

/// Solves A M - M Au + B = 0 (A n x n, Au m x m, B n x m).
///
/// Au is reduced to complex Schur form Au = Q T Q^H, after which the columns
/// of M Q follow one n x n shifted solve each: (A - T_kk I) y_k = ...
/// Cost is O(m n^3 + m^3), which keeps n = 1024 cheap for the small m used
/// here. Throws CommonEigenvalues when eig(A) and eig(Au) come within
/// Tolerances::eigen_gap (scaled by max(1, |lambda|)).
Matrix solve_sylvester(const Matrix& A, const Matrix& Au, const Matrix& B);
/// Same, reusing a precomputed spectrum of A for the disjointness check.
Matrix solve_sylvester(const Matrix& A, const Matrix& Au, const Matrix& B,
                       const Spectrum& spectrum_of_A);
/// ||A M - M Au + B|| / (||A|| ||M|| + ||M|| ||Au|| + ||B||), Frobenius.
double sylvester_residual(const Matrix& A, const Matrix& Au, const Matrix& B, const Matrix& M);

/// Solves P = A P A' + Q for stable A by complex Schur reduction of A and
/// column-wise back substitution (no iteration). Throws UnstableMatrix when
/// rho(A) >= 1.
Matrix solve_dlyap(const Matrix& A, const Matrix& Q);

Spectrum eigenvalues(const Matrix& A);
double spectral_radius(const Matrix& A);
double spectral_radius(const Spectrum& spectrum);
double largest_singular_value(const Matrix& A);
/// Smallest distance |lambda_i - mu_j| between two spectra.
double spectral_gap(const Spectrum& a, const Spectrum& b);

/// Observer gain K (n x 1) such that eig(A - K C) equals `targets`.
///
/// Single-output only. For diagonalizable A with distinct eigenvalues the gain
/// comes from the residues of phi(z)/a(z) in modal coordinates, which stays
/// well conditioned at n in the thousands; otherwise the observer form of
/// Ackermann's formula is used.
Matrix place_observer_poles(const Matrix& A, const Matrix& C, const Spectrum& targets);

Index numerical_rank(const Matrix& m, double relative_tolerance = 1e-10);
/// [C; CA; ...; CA^{n-1}]
Matrix observability_matrix(const Matrix& A, const Matrix& C);
/// [B, AB, ..., A^{n-1}B]
Matrix reachability_matrix(const Matrix& A, const Matrix& B);

/// Kronecker product, used by tests and small-scale diagnostics.
Matrix kron(const Matrix& a, const Matrix& b);

/// Counts matrix factorizations (eigen, Schur, SVD, LU, Cholesky) performed
/// by this library on the calling thread since construction.
class FactorizationCounter {
 public:
  FactorizationCounter();
  std::uint64_t count() const;

 private:
  std::uint64_t start_;
};

namespace detail {
void note_factorization(std::uint64_t n = 1);
}

}  // namespace s5id::linalg
