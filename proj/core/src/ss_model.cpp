#include "s5id/ss_model.hpp"

#include "s5id/error.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SparseCore>

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <string>

namespace s5id {

namespace {

void require_shape(const Matrix& m, Index rows, Index cols, const char* what) {
  if (m.rows() != rows || m.cols() != cols) {
    throw Error(ErrorCode::DimensionMismatch, std::string(what) + " must be " + std::to_string(rows) +
                                                  "x" + std::to_string(cols) + ", got " +
                                                  std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
  }
}

/// Factor L with L L' = S for a symmetric PSD S (tiny negative eigenvalues
/// from round-off are treated as zero; used for sampling only).
Matrix psd_factor(const Matrix& S) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (S + S.transpose()));
  linalg::detail::note_factorization();
  if (es.info() != Eigen::Success) {
    throw Error(ErrorCode::ConvergenceFailure, "eigensolver failed on a covariance matrix");
  }
  const Vector s = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * s.asDiagonal();
}

Matrix cholesky(const Matrix& spd, const char* what) {
  Eigen::LLT<Matrix> llt(spd);
  linalg::detail::note_factorization();
  if (llt.info() != Eigen::Success) {
    throw Error(ErrorCode::NotPositiveDefinite, std::string(what) + " is not positive definite");
  }
  return llt.matrixL();
}

bool is_positive_definite(const Matrix& m) {
  if (m.rows() != m.cols() || !m.allFinite()) return false;
  if ((m - m.transpose()).norm() > linalg::Tolerances::symmetry * std::max(m.norm(), 1e-300)) return false;
  Eigen::LLT<Matrix> llt(m);
  return llt.info() == Eigen::Success;
}

Matrix joint_transition(const StateSpaceModel& model, const Var1Model& law) {
  const Index n = model.order();
  const Index m = model.inputs();
  Matrix F = Matrix::Zero(n + m, n + m);
  F.topLeftCorner(n, n) = model.A;
  F.topRightCorner(n, m) = model.B;
  F.bottomRightCorner(m, m) = law.transition;
  return F;
}

Matrix joint_noise(const StateSpaceModel& model, const Var1Model& law) {
  const Index n = model.order();
  const Index m = model.inputs();
  Matrix Q = Matrix::Zero(n + m, n + m);
  Q.topLeftCorner(n, n) = model.K * model.innovation_cov * model.K.transpose();
  Q.bottomRightCorner(m, m) = law.noise_cov;
  return 0.5 * (Q + Q.transpose());
}

struct StationaryConditional {
  Matrix joint;
  Matrix gain;
  Matrix factor;
};

StationaryConditional stationary_conditional(const StateSpaceModel& model, const Var1Model& law) {
  const Index n = model.order();
  const Index m = model.inputs();
  StationaryConditional out;
  out.joint = linalg::solve_dlyap(joint_transition(model, law), joint_noise(model, law));
  const Matrix Pxx = out.joint.topLeftCorner(n, n);
  const Matrix Pxu = out.joint.topRightCorner(n, m);
  const Matrix Puu = out.joint.bottomRightCorner(m, m);
  out.gain = linalg::solve_spd_right(Pxu, Puu);
  out.factor = psd_factor(Pxx - out.gain * Pxu.transpose());
  return out;
}

/// x_{t+1} = A x_t + drive_t, using a sparse A when it is mostly zeros.
Matrix propagate_states(const Matrix& A, const Vector& x0, const Matrix& drive) {
  const Index n = A.rows();
  const Index length = drive.cols() + 1;
  Matrix X(n, length);
  X.col(0) = x0;
  const Index nnz = (A.array() != 0.0).count();
  if (n > 32 && nnz < (n * n) / 10) {
    const Eigen::SparseMatrix<double> As = A.sparseView();
    for (Index t = 0; t + 1 < length; ++t) X.col(t + 1) = As * X.col(t) + drive.col(t);
  } else {
    for (Index t = 0; t + 1 < length; ++t) X.col(t + 1).noalias() = A * X.col(t) + drive.col(t);
  }
  return X;
}

Dataset assemble(const StateSpaceModel& model, const Matrix& inputs, const Vector& x0,
                 const Matrix& innovations, std::uint64_t seed) {
  const Index length = inputs.cols();
  Matrix drive = model.B * inputs.leftCols(length - 1) + model.K * innovations.leftCols(length - 1);
  Dataset data;
  data.states = propagate_states(model.A, x0, drive);
  data.outputs = model.C * *data.states + innovations;
  data.inputs = inputs;
  data.output_innovations = innovations;
  data.seed = seed;
  return data;
}

Matrix draw_innovations(const StateSpaceModel& model, Index length, std::uint64_t seed,
                        const SimulationOptions& options) {
  const Index d = model.outputs();
  if (options.zero_innovations) return Matrix::Zero(d, length);
  const Matrix factor = cholesky(model.innovation_cov, "innovation covariance");
  rng::WhiteNoise noise(seed, rng::Stream::OutputInnovations, options.noise);
  return factor * noise.matrix(d, length);
}

void require_runnable(const StateSpaceModel& model) {
  model.validate_dimensions();
  const double rho = linalg::spectral_radius(model.A);
  if (rho >= 1.0) {
    throw Error(ErrorCode::UnstableModel, "rho(A) = " + std::to_string(rho) + " >= 1");
  }
}

}  // namespace

void StateSpaceModel::validate_dimensions() const {
  const Index n = A.rows();
  linalg::require_square(A, "A");
  const Index m = B.cols();
  const Index d = C.rows();
  require_shape(B, n, m, "B");
  require_shape(C, d, n, "C");
  require_shape(K, n, d, "K");
  require_shape(innovation_cov, d, d, "innovation covariance");
  for (const Matrix* mat : {&A, &B, &C, &K, &innovation_cov}) linalg::require_finite(*mat, "model matrix");
}

void Dataset::validate() const {
  if (outputs.cols() != inputs.cols()) {
    throw Error(ErrorCode::DimensionMismatch, "inputs and outputs have different lengths");
  }
  if (states && states->cols() != inputs.cols()) {
    throw Error(ErrorCode::DimensionMismatch, "states and inputs have different lengths");
  }
  linalg::require_finite(inputs, "inputs");
  linalg::require_finite(outputs, "outputs");
}

AssumptionReport check_assumptions(const StateSpaceModel& model, const Var1Model& input_law) {
  model.validate_dimensions();
  if (input_law.transition.rows() != model.inputs()) {
    throw Error(ErrorCode::DimensionMismatch, "input law dimension does not match B");
  }
  AssumptionReport r;
  const Index n = model.order();

  Eigen::EigenSolver<Matrix> es(model.A, true);
  linalg::detail::note_factorization();
  const Spectrum eig_A = es.eigenvalues();
  const Spectrum eig_u = linalg::eigenvalues(input_law.transition);
  r.rho_A = linalg::spectral_radius(eig_A);
  r.rho_closed_loop = linalg::spectral_radius(Matrix(model.A - model.K * model.C));
  r.rho_input = linalg::spectral_radius(eig_u);
  r.spectral_gap = linalg::spectral_gap(eig_A, eig_u);

  Matrix KB(n, model.K.cols() + model.B.cols());
  KB << model.K, model.B;

  if (n > 0) {
    const ComplexMatrix V = es.eigenvectors();
    const ComplexMatrix W = V.inverse();  // rows are left eigenvectors
    const double c_norm = model.C.norm();
    const double kb_norm = KB.norm();
    double obs = std::numeric_limits<double>::infinity();
    double reach = std::numeric_limits<double>::infinity();
    for (Index i = 0; i < n; ++i) {
      obs = std::min(obs, c_norm > 0 ? (model.C.cast<std::complex<double>>() * V.col(i)).norm() /
                                           (c_norm * V.col(i).norm())
                                     : 0.0);
      reach = std::min(reach, kb_norm > 0 ? (W.row(i) * KB.cast<std::complex<double>>()).norm() /
                                                (W.row(i).norm() * kb_norm)
                                          : 0.0);
    }
    r.observability_margin = obs;
    r.reachability_margin = reach;
  }

  if (n <= kRankTestMaxOrder) {
    r.observability_rank = linalg::numerical_rank(linalg::observability_matrix(model.A, model.C));
    r.reachability_rank = linalg::numerical_rank(linalg::reachability_matrix(model.A, KB));
    r.observable = *r.observability_rank == n;
    r.reachable = *r.reachability_rank == n;
  } else {
    r.observable = r.observability_margin > 1e-10;
    r.reachable = r.reachability_margin > 1e-10;
  }

  r.stable = r.rho_A < 1.0;
  r.minimum_phase = r.rho_closed_loop < 1.0;
  r.input_stable = r.rho_input < 1.0;
  r.spectra_disjoint = r.spectral_gap > linalg::Tolerances::eigen_gap;
  r.innovation_cov_pd = is_positive_definite(model.innovation_cov);
  r.input_noise_pd = is_positive_definite(input_law.noise_cov);
  return r;
}

Dataset simulate_ss(const StateSpaceModel& model, const Matrix& inputs, std::uint64_t seed,
                    const SimulationOptions& options, const Var1Model* input_law) {
  require_runnable(model);
  if (inputs.rows() != model.inputs()) {
    throw Error(ErrorCode::DimensionMismatch, "input record has the wrong number of channels");
  }
  if (inputs.cols() < 2) throw Error(ErrorCode::InvalidArgument, "need at least 2 samples");
  linalg::require_finite(inputs, "inputs");
  const Index n = model.order();

  Vector x0 = Vector::Zero(n);
  rng::WhiteNoise initial(seed, rng::Stream::StateInitial, NoiseDistribution::Gaussian);
  switch (options.init) {
    case InitMode::Stationary: {
      if (input_law == nullptr) {
        throw Error(ErrorCode::InvalidArgument, "stationary initialization needs the input law");
      }
      const auto cond = stationary_conditional(model, *input_law);
      x0 = cond.gain * inputs.col(0) + cond.factor * initial.matrix(n, 1);
      break;
    }
    case InitMode::Zero:
      break;
    case InitMode::BurnIn: {
      const Matrix factor = options.zero_innovations
                                ? Matrix::Zero(model.outputs(), model.outputs())
                                : cholesky(model.innovation_cov, "innovation covariance");
      for (Index k = 0; k < kBurnInSteps; ++k) {
        x0 = model.A * x0 + model.K * (factor * initial.matrix(model.outputs(), 1));
      }
      break;
    }
  }
  const Matrix innovations = draw_innovations(model, inputs.cols(), seed, options);
  return assemble(model, inputs, x0, innovations, seed);
}

SystemSimulator::SystemSimulator(StateSpaceModel model, Var1Model input_law, SimulationOptions options)
    : model_(std::move(model)), input_law_(std::move(input_law)), options_(options) {
  require_runnable(model_);
  input_law_.validate();
  if (input_law_.dim() != model_.inputs()) {
    throw Error(ErrorCode::DimensionMismatch, "input law dimension does not match B");
  }
  if (options_.init == InitMode::Stationary) {
    auto cond = stationary_conditional(model_, input_law_);
    joint_cov_ = std::move(cond.joint);
    conditional_gain_ = std::move(cond.gain);
    conditional_factor_ = std::move(cond.factor);
  }
}

Dataset SystemSimulator::simulate(Index length, std::uint64_t seed) const {
  if (options_.init == InitMode::BurnIn) {
    // Run the joint system from zero and drop the burn-in prefix.
    const Index total = length + kBurnInSteps;
    auto u = simulate_var1(input_law_, total, seed, InitMode::Zero, options_.noise);
    Dataset full = run(u.series, seed, &u.innovations);
    Dataset out;
    out.inputs = full.inputs.rightCols(length);
    out.outputs = full.outputs.rightCols(length);
    out.states = full.states->rightCols(length);
    out.output_innovations = full.output_innovations->rightCols(length);
    out.input_innovations = full.input_innovations->rightCols(length - 1);
    out.seed = seed;
    out.provenance = full.provenance;
    return out;
  }
  auto u = simulate_var1(input_law_, length, seed, options_.init, options_.noise);
  return run(u.series, seed, &u.innovations);
}

Dataset SystemSimulator::run(const Matrix& inputs, std::uint64_t seed, const Matrix* input_innovations) const {
  const Index n = model_.order();
  Vector x0 = Vector::Zero(n);
  if (options_.init == InitMode::Stationary) {
    rng::WhiteNoise initial(seed, rng::Stream::StateInitial, NoiseDistribution::Gaussian);
    x0 = conditional_gain_ * inputs.col(0) + conditional_factor_ * initial.matrix(n, 1);
  }
  const Matrix innovations = draw_innovations(model_, inputs.cols(), seed, options_);
  Dataset data = assemble(model_, inputs, x0, innovations, seed);
  if (input_innovations) data.input_innovations = *input_innovations;
  data.provenance = "simulated";
  return data;
}

ExampleSystem build_lowdim_example() {
  ExampleSystem sys;
  auto& m = sys.model;
  m.A = Matrix::Zero(5, 5);
  m.A.block(0, 0, 2, 2) << 0.7, 0.642, -0.642, 0.7;
  m.A.block(2, 2, 2, 2) << -0.5, 0.775, -0.775, -0.5;
  m.A(4, 4) = -0.995;
  m.B = Matrix::Constant(5, 2, 0.2);
  m.C = Matrix::Constant(1, 5, 0.3);
  m.K.resize(5, 1);
  m.K << 0.5, 0.5, -0.3, -0.3, -0.9;
  m.innovation_cov = Matrix::Identity(1, 1);

  sys.input_law.transition.resize(2, 2);
  sys.input_law.transition << 0.9, 0.2, -0.2, 0.9;
  sys.input_law.noise_cov.resize(2, 2);
  sys.input_law.noise_cov << 1.0, 0.5, 0.5, 2.0;
  return sys;
}

ExampleSystem build_highdim_example(Index order, Index past_lag) {
  if (order < 4 || order % 2 != 0) {
    throw Error(ErrorCode::InvalidArgument, "high-dimensional example needs an even order >= 4");
  }
  if (past_lag < 1) throw Error(ErrorCode::InvalidArgument, "past lag must be positive");
  constexpr double kPoleRadius = 0.9999;
  constexpr double kTargetPowerMagnitude = 0.1;

  ExampleSystem sys = build_lowdim_example();
  auto& m = sys.model;
  const Index pairs = order / 2;
  const double target_radius = std::pow(kTargetPowerMagnitude, 1.0 / static_cast<double>(past_lag));

  m.A = Matrix::Zero(order, order);
  Spectrum targets(order);
  for (Index k = 0; k < pairs; ++k) {
    const double angle = std::numbers::pi * static_cast<double>(k + 1) / static_cast<double>(pairs + 1);
    const double re = kPoleRadius * std::cos(angle);
    const double im = kPoleRadius * std::sin(angle);
    m.A.block(2 * k, 2 * k, 2, 2) << re, im, -im, re;
    targets(2 * k) = std::polar(target_radius, angle);
    targets(2 * k + 1) = std::polar(target_radius, -angle);
  }
  m.B = Matrix::Constant(order, 2, 0.2);
  m.C = Matrix::Constant(1, order, 0.3);
  m.K = linalg::place_observer_poles(m.A, m.C, targets);
  m.innovation_cov = Matrix::Identity(1, 1);
  return sys;
}

MarkovState markov_transform(const StateSpaceModel& model, const Var1Model& input_law, const Dataset& data) {
  model.validate_dimensions();
  if (!data.states) throw Error(ErrorCode::InvalidArgument, "Markov transform needs the true states");
  MarkovState out;
  out.sylvester_solution = linalg::solve_sylvester(model.A, input_law.transition, model.B);
  out.states = *data.states - out.sylvester_solution * data.inputs;
  const Matrix& M = out.sylvester_solution;
  out.noise_cov = model.K * model.innovation_cov * model.K.transpose() +
                  M * input_law.noise_cov * M.transpose();
  out.noise_cov = 0.5 * (out.noise_cov + out.noise_cov.transpose()).eval();
  return out;
}

double markov_residual(const MarkovState& state, const StateSpaceModel& model, const Dataset& data) {
  if (!data.output_innovations || !data.input_innovations) {
    throw Error(ErrorCode::InvalidArgument, "residual check needs the stored innovations");
  }
  const Index steps = state.states.cols() - 1;
  const Matrix& Xi = state.states;
  const Matrix w = model.K * data.output_innovations->leftCols(steps) -
                   state.sylvester_solution * data.input_innovations->leftCols(steps);
  const Matrix r = Xi.rightCols(steps) - model.A * Xi.leftCols(steps) - w;
  return r.colwise().norm().maxCoeff();
}

}  // namespace s5id
