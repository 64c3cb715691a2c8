#pragma once

#include "s5id/linalg.hpp"
#include "s5id/ss_model.hpp"

namespace s5id {

/// Lags and order for the subspace front end.
struct SubspaceConfig {
  Index future_lag = 0;  // f
  Index past_lag = 0;    // p
  Index order = 0;       // n_hat

  /// T = Tbar - f - p + 1 for a record whose last index is `horizon`.
  Index sample_count(Index horizon) const { return horizon - future_lag - past_lag + 1; }
  /// f >= n_hat, p >= n_hat, all positive.
  void validate() const;
};

/// Data blocks with columns t = p .. p+T.
struct HankelBlocks {
  Matrix Zp;  // (d+m)p x (T+1): [y_{t-1}; ..; y_{t-p}; u_{t-1}; ..; u_{t-p}]
  Matrix Yf;  // d f x (T+1): [y_t; ..; y_{t+f-1}]
  Matrix Uf;  // m f x (T+1)
  Matrix U0;  // m x T: u_t for t = p .. p+T-1
  Matrix Y0;  // d x T
  Index first_time = 0;    // p
  Index sample_count = 0;  // T
};

/// Throws InsufficientSamples unless T > (d+m) p.
HankelBlocks build_hankel(const Dataset& data, const SubspaceConfig& cfg);

/// Y - (Y U')(U U')^{-1} U, i.e. Y times the projector onto the complement of
/// the row space of U, without forming that projector. Throws
/// RankDeficientRegressors when U U' is singular.
Matrix project_out(const Matrix& Y, const Matrix& U);

struct PartialCovariances {
  Matrix Sff;  // (1/T) Yf P Yf'
  Matrix Sfp;  // (1/T) Yf P Zp'
  Matrix Spp;  // (1/T) Zp P Zp'
};

/// P projects out the future inputs Uf. Scaling is 1/T.
PartialCovariances partial_covariances(const HankelBlocks& blocks);

struct CvaDecomposition {
  Matrix Sff;
  Matrix Sfp;
  Matrix Spp;
  /// All canonical correlations, descending.
  Vector singular_values;
  Matrix Kp_hat;   // n_hat x (d+m)p
  Matrix Of_hat;   // d f x n_hat
  Matrix Of_pinv;  // Lambda^{-1/2} U' Sff^{-1/2}
  Matrix beta_z;   // Sfp Spp^{-1}
  Matrix X_hat;    // n_hat x (T+1), Kp_hat * Zp
};

/// CVA-weighted SVD of Sff^{-1/2} Sfp Spp^{-1/2}. Each singular pair is
/// sign-normalized so the largest-magnitude entry of the left vector is
/// positive. Throws OrderTooLarge when n_hat exceeds min(d f, (d+m) p).
CvaDecomposition cva_states(const HankelBlocks& blocks, PartialCovariances covs, const SubspaceConfig& cfg);

struct LsEstimates {
  Matrix A_star;  // not stability-guaranteed
  Matrix B_hat;
  Matrix C_hat;
  Matrix K_hat;
  Matrix Q_eps_hat;
};

/// Least squares on the state sequence: X0 = X_hat without its last column,
/// X1 without its first. Throws RankDeficientRegressors. K_hat uses the
/// pseudo-inverse of E E', which is zero for noise-free records.
LsEstimates ls_system_estimates(const Matrix& X_hat, const Matrix& U0, const Matrix& Y0);
LsEstimates ls_system_estimates(const Matrix& X0, const Matrix& X1, const Matrix& U0, const Matrix& Y0);

/// A_star by partial regression on the complement of U0:
/// X1 P X0' (X0 P X0')^{-1}.
Matrix partial_regression_transition(const Matrix& X0, const Matrix& X1, const Matrix& U0);

}  // namespace s5id
