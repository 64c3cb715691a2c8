#include "s5id/eval.hpp"

#include "s5id/error.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <string>

namespace s5id {

namespace {

using Complex = std::complex<double>;

constexpr double kSingularPivot = 1e-13;

void add_feedthrough(ComplexMatrix& F, Index inputs) {
  for (Index i = 0; i < F.rows(); ++i) F(i, inputs + i) += 1.0;
}

double largest_sv(const ComplexMatrix& M) {
  if (M.size() == 0) return 0.0;
  Eigen::JacobiSVD<ComplexMatrix> svd(M);
  return svd.singularValues()(0);
}

[[noreturn]] void singular_at(double omega) {
  throw Error(ErrorCode::SingularResolvent,
              "e^{j w} is numerically an eigenvalue of A at w = " + std::to_string(omega));
}

}  // namespace

ComplexMatrix frequency_response(const Matrix& A, const Matrix& B, const Matrix& C, const Matrix& K,
                                 double omega) {
  StateSpaceModel model{A, B, C, K, Matrix::Identity(C.rows(), C.rows())};
  return frequency_response(model, omega);
}

ComplexMatrix frequency_response(const StateSpaceModel& model, double omega) {
  model.validate_dimensions();
  const Index n = model.order();
  const Index m = model.inputs();
  const Index d = model.outputs();
  Matrix BK(n, m + d);
  BK << model.B, model.K;
  const Complex z = std::polar(1.0, omega);
  ComplexMatrix F = ComplexMatrix::Zero(d, m + d);
  if (n > 0) {
    ComplexMatrix R = -model.A.cast<Complex>();
    R.diagonal().array() += z;
    Eigen::PartialPivLU<ComplexMatrix> lu(R);
    linalg::detail::note_factorization();
    if (!(lu.rcond() > kSingularPivot)) singular_at(omega);
    F = model.C.cast<Complex>() * lu.solve(BK.cast<Complex>());
  }
  add_feedthrough(F, m);
  return F;
}

FrequencyResponseEvaluator::FrequencyResponseEvaluator(const StateSpaceModel& model) {
  model.validate_dimensions();
  const Index n = model.order();
  inputs_ = model.inputs();
  Matrix BK(n, model.inputs() + model.outputs());
  BK << model.B, model.K;
  if (n == 0) {
    H_ = Matrix(0, 0);
    CQ_ = Matrix(model.outputs(), 0);
    QtBK_ = BK;
    return;
  }
  Eigen::HessenbergDecomposition<Matrix> hd(model.A);
  linalg::detail::note_factorization();
  H_ = hd.matrixH();
  const Matrix Q = hd.matrixQ();
  CQ_ = model.C * Q;
  QtBK_ = Q.transpose() * BK;
}

ComplexMatrix FrequencyResponseEvaluator::operator()(double omega) const {
  const Index n = H_.rows();
  const Index cols = QtBK_.cols();
  ComplexMatrix F;
  if (n == 0) {
    F = ComplexMatrix::Zero(CQ_.rows(), cols);
    add_feedthrough(F, inputs_);
    return F;
  }
  const Complex z = std::polar(1.0, omega);
  // Gaussian elimination with adjacent-row pivoting on z I - H.
  ComplexMatrix M = -H_.cast<Complex>();
  M.diagonal().array() += z;
  ComplexMatrix X = QtBK_.cast<Complex>();
  const double scale = std::max(1.0, H_.cwiseAbs().maxCoeff());
  for (Index k = 0; k + 1 < n; ++k) {
    if (std::abs(M(k + 1, k)) > std::abs(M(k, k))) {
      M.row(k).tail(n - k).swap(M.row(k + 1).tail(n - k));
      X.row(k).swap(X.row(k + 1));
    }
    if (M(k + 1, k) == 0.0) continue;
    if (std::abs(M(k, k)) <= kSingularPivot * scale) singular_at(omega);
    const Complex l = M(k + 1, k) / M(k, k);
    M(k + 1, k) = 0.0;
    M.row(k + 1).tail(n - k - 1) -= l * M.row(k).tail(n - k - 1);
    X.row(k + 1) -= l * X.row(k);
  }
  for (Index i = n - 1; i >= 0; --i) {
    if (std::abs(M(i, i)) <= kSingularPivot * scale) singular_at(omega);
    if (i + 1 < n) X.row(i) -= M.row(i).tail(n - i - 1) * X.bottomRows(n - i - 1);
    X.row(i) /= M(i, i);
  }
  F = CQ_.cast<Complex>() * X;
  add_feedthrough(F, inputs_);
  return F;
}

std::vector<double> frequency_grid(double omega_max, Index points) {
  if (points < 2) throw Error(ErrorCode::InvalidArgument, "frequency grid needs at least 2 points");
  if (!(omega_max > 0.0)) throw Error(ErrorCode::InvalidArgument, "omega_max must be positive");
  std::vector<double> grid(static_cast<std::size_t>(points));
  for (Index i = 0; i < points; ++i) {
    grid[static_cast<std::size_t>(i)] = omega_max * static_cast<double>(i) / static_cast<double>(points - 1);
  }
  grid.back() = omega_max;
  return grid;
}

HinfEntry hinf_error(const FrequencyResponseEvaluator& truth, const FrequencyResponseEvaluator& estimate,
                     double omega_max, Index grid_points) {
  if (truth.outputs() != estimate.outputs() || truth.columns() != estimate.columns()) {
    throw Error(ErrorCode::DimensionMismatch, "systems have different input/output dimensions");
  }
  HinfEntry best;
  best.error = -1.0;
  for (double w : frequency_grid(omega_max, grid_points)) {
    const double e = largest_sv(estimate(w) - truth(w));
    if (e > best.error) best = {e, w};
  }
  return best;
}

HinfEntry hinf_error(const StateSpaceModel& truth, const StateSpaceModel& estimate, double omega_max,
                     Index grid_points) {
  return hinf_error(FrequencyResponseEvaluator(truth), FrequencyResponseEvaluator(estimate), omega_max,
                    grid_points);
}

HinfReport hinf_report(const FrequencyResponseEvaluator& truth, const FrequencyResponseEvaluator& estimate,
                       Index grid_points) {
  const HinfEntry hard = hinf_error(truth, estimate, kHardOmegaMax, grid_points);
  const HinfEntry soft = hinf_error(truth, estimate, kSoftOmegaMax, grid_points);
  HinfReport r;
  r.grid_points = grid_points;
  r.soft_error = soft.error;
  r.soft_argmax_omega = soft.argmax_omega;
  if (soft.error > hard.error) {
    r.hard_error = soft.error;
    r.argmax_omega = soft.argmax_omega;
  } else {
    r.hard_error = hard.error;
    r.argmax_omega = hard.argmax_omega;
  }
  return r;
}

HinfReport hinf_report(const StateSpaceModel& truth, const StateSpaceModel& estimate, Index grid_points) {
  return hinf_report(FrequencyResponseEvaluator(truth), FrequencyResponseEvaluator(estimate), grid_points);
}

std::vector<double> pole_magnitudes(const Matrix& A) {
  const Spectrum eig = linalg::eigenvalues(A);
  std::vector<double> mags(static_cast<std::size_t>(eig.size()));
  for (Index i = 0; i < eig.size(); ++i) mags[static_cast<std::size_t>(i)] = std::abs(eig(i));
  std::sort(mags.begin(), mags.end(), std::greater<>());
  return mags;
}

double fraction_above(const std::vector<double>& values, double threshold) {
  if (values.empty()) return 0.0;
  const auto hits = std::count_if(values.begin(), values.end(), [&](double v) { return v > threshold; });
  return static_cast<double>(hits) / static_cast<double>(values.size());
}

Matrix response_magnitudes(const FrequencyResponseEvaluator& eval, const std::vector<double>& omegas) {
  const Index entries = eval.outputs() * eval.columns();
  Matrix out(static_cast<Index>(omegas.size()), entries);
  for (std::size_t k = 0; k < omegas.size(); ++k) {
    const ComplexMatrix F = eval(omegas[k]);
    for (Index i = 0; i < F.rows(); ++i) {
      for (Index j = 0; j < F.cols(); ++j) out(static_cast<Index>(k), i * F.cols() + j) = std::abs(F(i, j));
    }
  }
  return out;
}

}  // namespace s5id
