#include "s5id/cva.hpp"

#include "s5id/error.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <algorithm>
#include <numeric>
#include <string>
#include <vector>

namespace s5id {

namespace {

/// X X' with an exactly symmetric result.
Matrix gram(const Matrix& X) {
  Matrix G = Matrix::Zero(X.rows(), X.rows());
  G.selfadjointView<Eigen::Lower>().rankUpdate(X);
  return G.selfadjointView<Eigen::Lower>();
}

/// Flips singular pairs so the largest-magnitude entry of each left vector is
/// positive, then orders exact ties by the leading nonzero entry.
void canonicalize(Vector& s, Matrix& U, Matrix& V) {
  const Index k = s.size();
  for (Index j = 0; j < k; ++j) {
    Index arg = 0;
    U.col(j).cwiseAbs().maxCoeff(&arg);
    if (U(arg, j) < 0.0) {
      U.col(j) *= -1.0;
      V.col(j) *= -1.0;
    }
  }
  auto leading = [&](Index j) {
    for (Index i = 0; i < U.rows(); ++i) {
      if (U(i, j) != 0.0) return U(i, j);
    }
    return 0.0;
  };
  std::vector<Index> order(static_cast<std::size_t>(k));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) {
    if (s(a) != s(b)) return s(a) > s(b);
    return leading(a) > leading(b);
  });
  if (std::is_sorted(order.begin(), order.end())) return;
  Vector s2(k);
  Matrix U2(U.rows(), k);
  Matrix V2(V.rows(), k);
  for (Index j = 0; j < k; ++j) {
    const Index src = order[static_cast<std::size_t>(j)];
    s2(j) = s(src);
    U2.col(j) = U.col(src);
    V2.col(j) = V.col(src);
  }
  s = std::move(s2);
  U = std::move(U2);
  V = std::move(V2);
}

/// X E' (E E')^+ from one symmetric eigendecomposition. Eigenvalues at or
/// below `floor` are treated as zero, so noise-free records give K = 0.
Matrix solve_psd_right_pinv(const Matrix& rhs, const Matrix& gram_matrix, double floor) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(gram_matrix);
  linalg::detail::note_factorization();
  if (es.info() != Eigen::Success) {
    throw Error(ErrorCode::ConvergenceFailure, "symmetric eigensolver did not converge");
  }
  const Vector& lam = es.eigenvalues();
  const double cut = std::max(floor, 1e-12 * (lam.size() ? lam.cwiseAbs().maxCoeff() : 0.0));
  Vector inv = Vector::Zero(lam.size());
  for (Index i = 0; i < lam.size(); ++i) {
    if (lam(i) > cut) inv(i) = 1.0 / lam(i);
  }
  const Matrix& V = es.eigenvectors();
  return rhs * V * inv.asDiagonal() * V.transpose();
}

}  // namespace

void SubspaceConfig::validate() const {
  if (future_lag < 1 || past_lag < 1 || order < 1) {
    throw Error(ErrorCode::InvalidArgument, "lags and order must be positive");
  }
  if (future_lag < order || past_lag < order) {
    throw Error(ErrorCode::InvalidArgument, "lags must be at least the model order (f = " +
                                                std::to_string(future_lag) + ", p = " + std::to_string(past_lag) +
                                                ", n = " + std::to_string(order) + ")");
  }
}

HankelBlocks build_hankel(const Dataset& data, const SubspaceConfig& cfg) {
  data.validate();
  const Index f = cfg.future_lag;
  const Index p = cfg.past_lag;
  if (f < 1 || p < 1) throw Error(ErrorCode::InvalidArgument, "lags must be positive");
  const Index m = data.inputs.rows();
  const Index d = data.outputs.rows();
  const Index T = cfg.sample_count(data.horizon());
  if (T <= (d + m) * p) {
    throw Error(ErrorCode::InsufficientSamples,
                "T = " + std::to_string(T) + " must exceed (d+m)p = " + std::to_string((d + m) * p) +
                    " (Tbar = " + std::to_string(data.horizon()) + ")");
  }
  const Index cols = T + 1;
  HankelBlocks b;
  b.first_time = p;
  b.sample_count = T;
  b.Zp.resize((d + m) * p, cols);
  b.Yf.resize(d * f, cols);
  b.Uf.resize(m * f, cols);
  for (Index lag = 1; lag <= p; ++lag) {
    b.Zp.middleRows((lag - 1) * d, d) = data.outputs.middleCols(p - lag, cols);
    b.Zp.middleRows(d * p + (lag - 1) * m, m) = data.inputs.middleCols(p - lag, cols);
  }
  for (Index lead = 0; lead < f; ++lead) {
    b.Yf.middleRows(lead * d, d) = data.outputs.middleCols(p + lead, cols);
    b.Uf.middleRows(lead * m, m) = data.inputs.middleCols(p + lead, cols);
  }
  b.U0 = data.inputs.middleCols(p, T);
  b.Y0 = data.outputs.middleCols(p, T);
  return b;
}

Matrix project_out(const Matrix& Y, const Matrix& U) {
  if (Y.cols() != U.cols()) {
    throw Error(ErrorCode::DimensionMismatch, "project_out: Y and U need the same number of columns");
  }
  const Matrix coef = linalg::solve_spd_right(Y * U.transpose(), gram(U));
  Matrix out = Y;
  out.noalias() -= coef * U;
  return out;
}

PartialCovariances partial_covariances(const HankelBlocks& blocks) {
  const double inv_T = 1.0 / static_cast<double>(blocks.sample_count);
  const Matrix Ufg = gram(blocks.Uf);
  auto project = [&](const Matrix& Y) {
    const Matrix coef = linalg::solve_spd_right(Y * blocks.Uf.transpose(), Ufg);
    Matrix out = Y;
    out.noalias() -= coef * blocks.Uf;
    return out;
  };
  PartialCovariances c;
  const Matrix Yp = project(blocks.Yf);
  const Matrix Zpp = project(blocks.Zp);
  c.Sff = gram(Yp) * inv_T;
  c.Spp = gram(Zpp) * inv_T;
  c.Sfp.noalias() = Yp * Zpp.transpose();
  c.Sfp *= inv_T;
  return c;
}

CvaDecomposition cva_states(const HankelBlocks& blocks, PartialCovariances covs, const SubspaceConfig& cfg) {
  const Index n = cfg.order;
  const Index rows_f = covs.Sff.rows();
  const Index rows_p = covs.Spp.rows();
  if (n < 1) throw Error(ErrorCode::InvalidArgument, "order must be positive");
  if (n > std::min(rows_f, rows_p)) {
    throw Error(ErrorCode::OrderTooLarge, "order " + std::to_string(n) + " exceeds min(d f, (d+m) p) = " +
                                              std::to_string(std::min(rows_f, rows_p)));
  }
  if (blocks.Zp.rows() != rows_p) throw Error(ErrorCode::DimensionMismatch, "Zp does not match Spp");

  const linalg::SymmetricRoots rf = linalg::symmetric_roots(covs.Sff);
  const linalg::SymmetricRoots rp = linalg::symmetric_roots(covs.Spp);
  const Matrix weighted = rf.inverse_root * covs.Sfp * rp.inverse_root;

  Eigen::BDCSVD<Matrix> svd(weighted, Eigen::ComputeThinU | Eigen::ComputeThinV);
  linalg::detail::note_factorization();
  Vector s = svd.singularValues();
  Matrix U = svd.matrixU();
  Matrix V = svd.matrixV();
  canonicalize(s, U, V);

  const Vector lam = s.head(n);
  if (lam.minCoeff() <= 0.0) {
    throw Error(ErrorCode::OrderTooLarge, "canonical correlation " + std::to_string(n) + " is zero");
  }
  const Vector root = lam.cwiseSqrt();

  CvaDecomposition out;
  out.singular_values = s;
  out.Kp_hat = root.asDiagonal() * V.leftCols(n).transpose() * rp.inverse_root;
  out.Of_hat = rf.root * U.leftCols(n) * root.asDiagonal();
  out.Of_pinv = root.cwiseInverse().asDiagonal() * U.leftCols(n).transpose() * rf.inverse_root;
  out.beta_z = covs.Sfp * rp.inverse_root * rp.inverse_root;
  out.X_hat.noalias() = out.Kp_hat * blocks.Zp;
  out.Sff = std::move(covs.Sff);
  out.Sfp = std::move(covs.Sfp);
  out.Spp = std::move(covs.Spp);
  return out;
}

LsEstimates ls_system_estimates(const Matrix& X_hat, const Matrix& U0, const Matrix& Y0) {
  const Index T = X_hat.cols() - 1;
  if (T < 1) throw Error(ErrorCode::InsufficientSamples, "state sequence needs at least two columns");
  return ls_system_estimates(X_hat.leftCols(T), X_hat.rightCols(T), U0, Y0);
}

LsEstimates ls_system_estimates(const Matrix& X0, const Matrix& X1, const Matrix& U0, const Matrix& Y0) {
  const Index n = X0.rows();
  const Index m = U0.rows();
  const Index T = X0.cols();
  if (X1.rows() != n || X1.cols() != T || U0.cols() != T || Y0.cols() != T) {
    throw Error(ErrorCode::DimensionMismatch, "LS regressors are not aligned");
  }
  Matrix R(n + m, T);
  R << X0, U0;
  const Matrix AB = linalg::solve_spd_right(X1 * R.transpose(), gram(R));

  LsEstimates ls;
  ls.A_star = AB.leftCols(n);
  ls.B_hat = AB.rightCols(m);
  ls.C_hat = linalg::solve_spd_right(Y0 * X0.transpose(), gram(X0));
  Matrix E = Y0;
  E.noalias() -= ls.C_hat * X0;
  const Matrix EE = gram(E);
  ls.K_hat = solve_psd_right_pinv(X1 * E.transpose(), EE, 1e-24 * gram(Y0).norm());
  ls.Q_eps_hat = EE / static_cast<double>(T);
  return ls;
}

Matrix partial_regression_transition(const Matrix& X0, const Matrix& X1, const Matrix& U0) {
  const Matrix X0p = project_out(X0, U0);
  return linalg::solve_spd_right(X1 * X0p.transpose(), gram(X0p));
}

}  // namespace s5id
