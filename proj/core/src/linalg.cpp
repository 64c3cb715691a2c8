#include "s5id/linalg.hpp"

#include "s5id/error.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <complex>
#include <numeric>
#include <string>
#include <vector>

namespace s5id::linalg {

using Complex = std::complex<double>;

namespace {

thread_local std::uint64_t factorizations = 0;

std::string label(std::string_view what) { return std::string(what); }

}  // namespace

namespace detail {
void note_factorization(std::uint64_t n) { factorizations += n; }
}  // namespace detail

FactorizationCounter::FactorizationCounter() : start_(factorizations) {}
std::uint64_t FactorizationCounter::count() const { return factorizations - start_; }

void require_finite(const Matrix& m, std::string_view what) {
  if (!m.allFinite()) {
    throw Error(ErrorCode::NonFiniteInput, label(what) + " contains NaN or Inf");
  }
}

void require_square(const Matrix& m, std::string_view what) {
  if (m.rows() != m.cols()) {
    throw Error(ErrorCode::DimensionMismatch,
                label(what) + " must be square, got " + std::to_string(m.rows()) + "x" +
                    std::to_string(m.cols()));
  }
}

void require_symmetric(const Matrix& m, std::string_view what) {
  require_square(m, what);
  const double scale = m.norm();
  if ((m - m.transpose()).norm() > Tolerances::symmetry * std::max(scale, 1e-300)) {
    throw Error(ErrorCode::InvalidArgument, label(what) + " is not symmetric");
  }
}

SymmetricRoots symmetric_roots(const Matrix& spd) {
  require_finite(spd, "symmetric matrix");
  require_symmetric(spd, "symmetric matrix");
  const Matrix sym = 0.5 * (spd + spd.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> es(sym);
  detail::note_factorization();
  if (es.info() != Eigen::Success) {
    throw Error(ErrorCode::ConvergenceFailure, "symmetric eigensolver did not converge");
  }
  const Vector& lambda = es.eigenvalues();
  const double scale = lambda.size() ? lambda.cwiseAbs().maxCoeff() : 0.0;
  const double floor = Tolerances::psd * scale;
  if (lambda.size() && lambda.minCoeff() <= floor) {
    throw Error(ErrorCode::NotPositiveDefinite,
                "smallest eigenvalue " + std::to_string(lambda.minCoeff()) +
                    " is not above the positivity floor " + std::to_string(floor));
  }
  const Matrix& V = es.eigenvectors();
  SymmetricRoots out;
  out.eigenvalues = lambda;
  const Vector s = lambda.cwiseSqrt();
  out.root = V * s.asDiagonal() * V.transpose();
  out.inverse_root = V * s.cwiseInverse().asDiagonal() * V.transpose();
  out.root = 0.5 * (out.root + out.root.transpose()).eval();
  out.inverse_root = 0.5 * (out.inverse_root + out.inverse_root.transpose()).eval();
  return out;
}

Matrix sym_sqrt(const Matrix& spd) { return symmetric_roots(spd).root; }

Matrix sym_inv_sqrt(const Matrix& spd) { return symmetric_roots(spd).inverse_root; }

Matrix solve_spd_right(const Matrix& rhs, const Matrix& gram) {
  require_square(gram, "Gram matrix");
  if (rhs.cols() != gram.rows()) {
    throw Error(ErrorCode::DimensionMismatch, "right-hand side does not match Gram matrix");
  }
  require_finite(gram, "Gram matrix");
  require_finite(rhs, "right-hand side");
  if (gram.rows() == 0) return Matrix(rhs.rows(), 0);
  Eigen::LLT<Matrix> llt(gram);
  detail::note_factorization();
  if (llt.info() != Eigen::Success) {
    throw Error(ErrorCode::RankDeficientRegressors, "regressor Gram matrix is not positive definite");
  }
  const Vector diag = Matrix(llt.matrixL()).diagonal().cwiseAbs2();
  if (diag.minCoeff() <= 1e-14 * diag.maxCoeff()) {
    throw Error(ErrorCode::RankDeficientRegressors, "regressor Gram matrix is numerically singular");
  }
  return llt.solve(rhs.transpose()).transpose();
}

Spectrum eigenvalues(const Matrix& A) {
  require_square(A, "matrix");
  require_finite(A, "matrix");
  if (A.rows() == 0) return Spectrum(0);
  Eigen::EigenSolver<Matrix> es(A, /*computeEigenvectors=*/false);
  detail::note_factorization();
  if (es.info() != Eigen::Success) {
    throw Error(ErrorCode::ConvergenceFailure, "eigenvalue iteration did not converge");
  }
  return es.eigenvalues();
}

double spectral_radius(const Spectrum& spectrum) {
  return spectrum.size() ? spectrum.cwiseAbs().maxCoeff() : 0.0;
}

double spectral_radius(const Matrix& A) { return spectral_radius(eigenvalues(A)); }

double largest_singular_value(const Matrix& A) {
  require_finite(A, "matrix");
  if (A.size() == 0) return 0.0;
  Eigen::BDCSVD<Matrix> svd(A);
  detail::note_factorization();
  return svd.singularValues()(0);
}

double spectral_gap(const Spectrum& a, const Spectrum& b) {
  double gap = std::numeric_limits<double>::infinity();
  for (Index i = 0; i < a.size(); ++i) {
    for (Index j = 0; j < b.size(); ++j) gap = std::min(gap, std::abs(a(i) - b(j)));
  }
  return gap;
}

namespace {

void require_disjoint(const Spectrum& of_A, const Spectrum& of_Au) {
  for (Index i = 0; i < of_A.size(); ++i) {
    for (Index j = 0; j < of_Au.size(); ++j) {
      const double scale = std::max({1.0, std::abs(of_A(i)), std::abs(of_Au(j))});
      if (std::abs(of_A(i) - of_Au(j)) <= Tolerances::eigen_gap * scale) {
        throw Error(ErrorCode::CommonEigenvalues,
                    "Sylvester operands share the eigenvalue " + std::to_string(of_Au(j).real()) +
                        (of_Au(j).imag() >= 0 ? "+" : "") + std::to_string(of_Au(j).imag()) + "i");
      }
    }
  }
}

void check_sylvester_operands(const Matrix& A, const Matrix& Au, const Matrix& B) {
  require_square(A, "A");
  require_square(Au, "Au");
  if (B.rows() != A.rows() || B.cols() != Au.rows()) {
    throw Error(ErrorCode::DimensionMismatch, "B must be n x m for A n x n and Au m x m");
  }
  require_finite(A, "A");
  require_finite(Au, "Au");
  require_finite(B, "B");
}

}  // namespace

Matrix solve_sylvester(const Matrix& A, const Matrix& Au, const Matrix& B) {
  check_sylvester_operands(A, Au, B);
  return solve_sylvester(A, Au, B, eigenvalues(A));
}

Matrix solve_sylvester(const Matrix& A, const Matrix& Au, const Matrix& B,
                       const Spectrum& spectrum_of_A) {
  check_sylvester_operands(A, Au, B);
  const Index n = A.rows();
  const Index m = Au.rows();
  if (n == 0 || m == 0) return Matrix::Zero(n, m);

  Eigen::ComplexSchur<Matrix> schur(Au);
  detail::note_factorization();
  if (schur.info() != Eigen::Success) {
    throw Error(ErrorCode::ConvergenceFailure, "Schur reduction of Au did not converge");
  }
  const ComplexMatrix& T = schur.matrixT();
  const ComplexMatrix& Q = schur.matrixU();
  require_disjoint(spectrum_of_A, T.diagonal());

  const ComplexMatrix Bq = B.cast<Complex>() * Q;
  const ComplexMatrix Ac = A.cast<Complex>();
  ComplexMatrix Y(n, m);
  for (Index k = 0; k < m; ++k) {
    ComplexVector rhs = -Bq.col(k);
    for (Index i = 0; i < k; ++i) rhs += Y.col(i) * T(i, k);
    ComplexMatrix shifted = Ac;
    shifted.diagonal().array() -= T(k, k);
    Eigen::PartialPivLU<ComplexMatrix> lu(shifted);
    detail::note_factorization();
    Y.col(k) = lu.solve(rhs);
  }
  return (Y * Q.adjoint()).real();
}

double sylvester_residual(const Matrix& A, const Matrix& Au, const Matrix& B, const Matrix& M) {
  const double num = (A * M - M * Au + B).norm();
  const double den = A.norm() * M.norm() + M.norm() * Au.norm() + B.norm();
  return den > 0 ? num / den : num;
}

Matrix solve_dlyap(const Matrix& A, const Matrix& Q) {
  require_square(A, "A");
  require_finite(A, "A");
  require_finite(Q, "Q");
  if (Q.rows() != A.rows() || Q.cols() != A.cols()) {
    throw Error(ErrorCode::DimensionMismatch, "Q must match A");
  }
  require_symmetric(Q, "Q");
  const Index n = A.rows();
  if (n == 0) return Matrix(0, 0);

  Eigen::ComplexSchur<Matrix> schur(A);
  detail::note_factorization();
  if (schur.info() != Eigen::Success) {
    throw Error(ErrorCode::ConvergenceFailure, "Schur reduction of A did not converge");
  }
  const ComplexMatrix& T = schur.matrixT();
  const ComplexMatrix& U = schur.matrixU();
  const double rho = T.diagonal().cwiseAbs().maxCoeff();
  if (rho >= 1.0) {
    throw Error(ErrorCode::UnstableMatrix, "spectral radius " + std::to_string(rho) + " >= 1");
  }

  // P~ - T P~ T^H = U^H Q U, solved one column at a time from the right.
  const ComplexMatrix Qt = U.adjoint() * Q.cast<Complex>() * U;
  ComplexMatrix P = ComplexMatrix::Zero(n, n);
  ComplexVector rhs(n);
  ComplexVector p(n);
  for (Index j = n - 1; j >= 0; --j) {
    rhs = Qt.col(j);
    const Index tail = n - 1 - j;
    if (tail > 0) {
      const ComplexVector w = P.rightCols(tail) * T.row(j).tail(tail).adjoint();
      rhs.noalias() += T.triangularView<Eigen::Upper>() * w;
    }
    const Complex c = std::conj(T(j, j));
    for (Index i = n - 1; i >= 0; --i) {
      const Index len = n - 1 - i;
      Complex acc = rhs(i);
      if (len > 0) acc += c * (T.row(i).tail(len) * p.tail(len))(0);
      p(i) = acc / (1.0 - c * T(i, i));
    }
    P.col(j) = p;
  }
  Matrix out = (U * P * U.adjoint()).real();
  return 0.5 * (out + out.transpose());
}

namespace {

Matrix polynomial_of_matrix(const Matrix& A, const Spectrum& roots) {
  // Monic polynomial coefficients, lowest degree first.
  std::vector<Complex> coef{Complex(1.0)};
  for (Index i = 0; i < roots.size(); ++i) {
    std::vector<Complex> next(coef.size() + 1, Complex(0.0));
    for (std::size_t k = 0; k < coef.size(); ++k) {
      next[k + 1] += coef[k];
      next[k] -= roots(i) * coef[k];
    }
    coef = std::move(next);
  }
  const Index n = A.rows();
  Matrix acc = Matrix::Zero(n, n);
  for (auto it = coef.rbegin(); it != coef.rend(); ++it) {
    acc = acc * A;
    acc.diagonal().array() += it->real();
  }
  return acc;
}

Matrix ackermann_observer(const Matrix& A, const Matrix& C, const Spectrum& targets) {
  const Index n = A.rows();
  const Matrix O = observability_matrix(A, C);
  if (numerical_rank(O) < n) {
    throw Error(ErrorCode::NotObservable, "(A, C) is not observable");
  }
  Vector last = Vector::Zero(n);
  last(n - 1) = 1.0;
  Eigen::FullPivLU<Matrix> lu(O);
  detail::note_factorization();
  return polynomial_of_matrix(A, targets) * lu.solve(last);
}

void require_conjugate_closed(const Spectrum& targets) {
  std::vector<bool> used(static_cast<std::size_t>(targets.size()), false);
  for (Index i = 0; i < targets.size(); ++i) {
    const double tol = 1e-8 * std::max(1.0, std::abs(targets(i)));
    if (std::abs(targets(i).imag()) <= tol || used[i]) continue;
    bool found = false;
    for (Index j = 0; j < targets.size() && !found; ++j) {
      if (j == i || used[j]) continue;
      if (std::abs(targets(j) - std::conj(targets(i))) <= tol) {
        used[i] = used[j] = true;
        found = true;
      }
    }
    if (!found) {
      throw Error(ErrorCode::InvalidArgument, "target poles are not closed under conjugation");
    }
  }
}

std::vector<Index> order_by_angle(const Spectrum& s) {
  std::vector<Index> idx(static_cast<std::size_t>(s.size()));
  std::iota(idx.begin(), idx.end(), Index{0});
  std::stable_sort(idx.begin(), idx.end(), [&](Index a, Index b) {
    const double aa = std::arg(s(a)), ab = std::arg(s(b));
    if (aa != ab) return aa < ab;
    return std::abs(s(a)) < std::abs(s(b));
  });
  return idx;
}

}  // namespace

Matrix place_observer_poles(const Matrix& A, const Matrix& C, const Spectrum& targets) {
  require_square(A, "A");
  require_finite(A, "A");
  require_finite(C, "C");
  const Index n = A.rows();
  if (C.cols() != n) throw Error(ErrorCode::DimensionMismatch, "C must have n columns");
  if (C.rows() != 1) {
    throw Error(ErrorCode::UnsupportedDimension, "pole placement supports single-output systems only");
  }
  if (targets.size() != n) {
    throw Error(ErrorCode::DimensionMismatch, "need exactly n target poles");
  }
  require_conjugate_closed(targets);
  if (n == 0) return Matrix(0, 1);

  Eigen::EigenSolver<Matrix> es(A, /*computeEigenvectors=*/true);
  detail::note_factorization();
  if (es.info() != Eigen::Success) {
    throw Error(ErrorCode::ConvergenceFailure, "eigen decomposition of A did not converge");
  }
  const Spectrum lambda = es.eigenvalues();
  const double scale = std::max(1.0, spectral_radius(lambda));
  bool distinct = true;
  for (Index i = 0; i < n && distinct; ++i) {
    for (Index j = i + 1; j < n; ++j) {
      if (std::abs(lambda(i) - lambda(j)) <= 1e-8 * scale) {
        distinct = false;
        break;
      }
    }
  }
  if (!distinct) return ackermann_observer(A, C, targets);

  const ComplexMatrix V = es.eigenvectors();
  const ComplexVector c_modal = (C.cast<Complex>() * V).transpose();
  const double c_scale = C.norm();

  // Pair each eigenvalue with a target by angular rank; the pairing only
  // balances the running product, the result does not depend on it.
  const auto li = order_by_angle(lambda);
  const auto ti = order_by_angle(targets);
  std::vector<Index> partner(static_cast<std::size_t>(n));
  for (std::size_t k = 0; k < li.size(); ++k) partner[li[k]] = ti[k];

  ComplexVector k_modal(n);
  for (Index i = 0; i < n; ++i) {
    if (std::abs(c_modal(i)) <= 1e-12 * c_scale * V.col(i).norm() || c_scale == 0.0) {
      throw Error(ErrorCode::NotObservable, "mode " + std::to_string(i) + " is unobservable from C");
    }
    Complex residue = lambda(i) - targets(partner[i]);
    for (Index j = 0; j < n; ++j) {
      if (j == i) continue;
      residue *= (lambda(i) - targets(partner[j])) / (lambda(i) - lambda(j));
    }
    k_modal(i) = residue / c_modal(i);
  }
  return (V * k_modal).real();
}

Index numerical_rank(const Matrix& m, double relative_tolerance) {
  if (m.size() == 0) return 0;
  Eigen::BDCSVD<Matrix> svd(m);
  detail::note_factorization();
  const Vector& s = svd.singularValues();
  if (s(0) == 0.0) return 0;
  Index rank = 0;
  for (Index i = 0; i < s.size(); ++i) {
    if (s(i) > relative_tolerance * s(0)) ++rank;
  }
  return rank;
}

Matrix observability_matrix(const Matrix& A, const Matrix& C) {
  const Index n = A.rows();
  const Index d = C.rows();
  Matrix O(n * d, n);
  Matrix block = C;
  for (Index k = 0; k < n; ++k) {
    O.middleRows(k * d, d) = block;
    block = block * A;
  }
  return O;
}

Matrix reachability_matrix(const Matrix& A, const Matrix& B) {
  const Index n = A.rows();
  const Index m = B.cols();
  Matrix R(n, n * m);
  Matrix block = B;
  for (Index k = 0; k < n; ++k) {
    R.middleCols(k * m, m) = block;
    block = A * block;
  }
  return R;
}

Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Index i = 0; i < a.rows(); ++i) {
    for (Index j = 0; j < a.cols(); ++j) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

}  // namespace s5id::linalg
