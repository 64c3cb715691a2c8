#include "s5id/var1.hpp"

#include "s5id/error.hpp"

#include <string>

namespace s5id {

namespace {

Matrix cholesky_factor(const Matrix& spd, const char* what) {
  linalg::require_symmetric(spd, what);
  Eigen::LLT<Matrix> llt(spd);
  linalg::detail::note_factorization();
  if (llt.info() != Eigen::Success) {
    throw Error(ErrorCode::NotPositiveDefinite, std::string(what) + " is not positive definite");
  }
  return llt.matrixL();
}

}  // namespace

void Var1Model::validate() const {
  linalg::require_square(transition, "VAR(1) transition");
  if (noise_cov.rows() != transition.rows() || noise_cov.cols() != transition.rows()) {
    throw Error(ErrorCode::DimensionMismatch, "VAR(1) noise covariance must match the transition");
  }
  linalg::require_finite(transition, "VAR(1) transition");
  linalg::require_finite(noise_cov, "VAR(1) noise covariance");
  cholesky_factor(noise_cov, "VAR(1) noise covariance");
  const double rho = linalg::spectral_radius(transition);
  if (rho >= 1.0) {
    throw Error(ErrorCode::UnstableModel, "VAR(1) spectral radius " + std::to_string(rho) + " >= 1");
  }
}

Matrix Var1Model::stationary_covariance() const { return linalg::solve_dlyap(transition, noise_cov); }

Var1Trajectory simulate_var1(const Var1Model& model, Index length, std::uint64_t seed, InitMode init,
                             NoiseDistribution dist) {
  model.validate();
  if (length < 2) throw Error(ErrorCode::InvalidArgument, "VAR(1) simulation needs at least 2 samples");
  const Index m = model.dim();
  const Matrix noise_factor = cholesky_factor(model.noise_cov, "VAR(1) noise covariance");

  Var1Trajectory out;
  rng::WhiteNoise innovations(seed, rng::Stream::InputInnovations, dist);
  out.innovations = noise_factor * innovations.matrix(m, length - 1);
  out.series.resize(m, length);

  rng::WhiteNoise initial(seed, rng::Stream::InputInitial, NoiseDistribution::Gaussian);
  switch (init) {
    case InitMode::Stationary: {
      const Matrix factor = cholesky_factor(model.stationary_covariance(), "stationary covariance");
      out.series.col(0) = factor * initial.matrix(m, 1);
      break;
    }
    case InitMode::Zero:
      out.series.col(0).setZero();
      break;
    case InitMode::BurnIn: {
      Vector u = Vector::Zero(m);
      for (Index k = 0; k < kBurnInSteps; ++k) {
        u = model.transition * u + noise_factor * initial.matrix(m, 1);
      }
      out.series.col(0) = u;
      break;
    }
  }
  for (Index t = 0; t + 1 < length; ++t) {
    out.series.col(t + 1) = model.transition * out.series.col(t) + out.innovations.col(t);
  }
  return out;
}

LagCovTriple lag_covariances(const Matrix& series, Index start, Index span) {
  if (start < 0 || span < 1) {
    throw Error(ErrorCode::InvalidArgument, "lag covariance window needs start >= 0 and span >= 1");
  }
  if (series.cols() < start + span + 1) {
    throw Error(ErrorCode::InsufficientSamples,
                "series has " + std::to_string(series.cols()) + " samples, window needs " +
                    std::to_string(start + span + 1));
  }
  linalg::require_finite(series, "series");
  const auto Z0 = series.middleCols(start, span);
  const auto Z1 = series.middleCols(start + 1, span);
  const double inv = 1.0 / static_cast<double>(span);
  LagCovTriple cov;
  cov.s00 = inv * (Z0 * Z0.transpose());
  cov.s11 = inv * (Z1 * Z1.transpose());
  cov.s10 = inv * (Z1 * Z0.transpose());
  cov.s00 = 0.5 * (cov.s00 + cov.s00.transpose()).eval();
  cov.s11 = 0.5 * (cov.s11 + cov.s11.transpose()).eval();
  cov.sample_count = span;
  return cov;
}

Matrix ls_estimate(const LagCovTriple& cov) {
  linalg::require_symmetric(cov.s00, "S00");
  Eigen::LLT<Matrix> llt(cov.s00);
  linalg::detail::note_factorization();
  if (llt.info() != Eigen::Success) {
    throw Error(ErrorCode::NotPositiveDefinite, "S00 is not positive definite");
  }
  return llt.solve(cov.s10.transpose()).transpose();
}

Matrix correlation_matrix(const LagCovTriple& cov) {
  const Matrix w0 = linalg::sym_inv_sqrt(cov.s00);
  const Matrix w1 = linalg::sym_inv_sqrt(cov.s11);
  return w1 * cov.s10 * w0;
}

Matrix cs_estimate(const LagCovTriple& cov) {
  const Matrix w0 = linalg::sym_inv_sqrt(cov.s00);
  const Matrix w1 = linalg::sym_inv_sqrt(cov.s11);
  return cov.s10 * w0 * w1;
}

Matrix cs_estimate_general(const LagCovTriple& cov, const Matrix& weight) {
  if (weight.rows() != cov.s00.rows()) {
    throw Error(ErrorCode::DimensionMismatch, "weight must match the covariance dimension");
  }
  const auto roots = linalg::symmetric_roots(weight);
  return roots.root * correlation_matrix(cov) * roots.inverse_root;
}

}  // namespace s5id
