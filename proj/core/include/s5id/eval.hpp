#pragma once

#include "s5id/linalg.hpp"
#include "s5id/ss_model.hpp"

#include <chrono>
#include <string>
#include <utility>
#include <vector>

namespace s5id {

/// F(w) = C (e^{jw} I - A)^{-1} [B, K] + [0, I_d], a d x (m+d) complex matrix.
/// Direct dense LU per call. Throws SingularResolvent when e^{jw} is
/// numerically an eigenvalue of A.
ComplexMatrix frequency_response(const Matrix& A, const Matrix& B, const Matrix& C, const Matrix& K, double omega);
ComplexMatrix frequency_response(const StateSpaceModel& model, double omega);

/// Reduces A to Hessenberg form once so that each frequency costs O(n^2).
class FrequencyResponseEvaluator {
 public:
  explicit FrequencyResponseEvaluator(const StateSpaceModel& model);

  ComplexMatrix operator()(double omega) const;

  Index outputs() const { return CQ_.rows(); }
  Index columns() const { return QtBK_.cols(); }

 private:
  Matrix H_;     // Q' A Q, upper Hessenberg
  Matrix CQ_;    // C Q
  Matrix QtBK_;  // Q' [B, K]
  Index inputs_ = 0;
};

/// Equally spaced inclusive grid {0, .., omega_max}.
std::vector<double> frequency_grid(double omega_max, Index points);

inline constexpr Index kDefaultGridPoints = 1000;
inline constexpr double kHardOmegaMax = 3.14159265358979323846;
inline constexpr double kSoftOmegaMax = 3.0;

struct HinfEntry {
  double error = 0.0;
  double argmax_omega = 0.0;
};

/// max over the grid of the largest singular value of F_est(w) - F_true(w).
HinfEntry hinf_error(const FrequencyResponseEvaluator& truth, const FrequencyResponseEvaluator& estimate,
                     double omega_max, Index grid_points = kDefaultGridPoints);
HinfEntry hinf_error(const StateSpaceModel& truth, const StateSpaceModel& estimate, double omega_max,
                     Index grid_points = kDefaultGridPoints);

struct HinfReport {
  double hard_error = 0.0;  // over [0, pi]
  double soft_error = 0.0;  // over [0, 3]
  Index grid_points = 0;
  double argmax_omega = 0.0;
  double soft_argmax_omega = 0.0;
};

/// The hard error is taken over the union of both grids, so soft <= hard.
HinfReport hinf_report(const FrequencyResponseEvaluator& truth, const FrequencyResponseEvaluator& estimate,
                       Index grid_points = kDefaultGridPoints);
HinfReport hinf_report(const StateSpaceModel& truth, const StateSpaceModel& estimate,
                       Index grid_points = kDefaultGridPoints);

/// |eig(A)|, descending.
std::vector<double> pole_magnitudes(const Matrix& A);

/// Share of entries strictly above `threshold`.
double fraction_above(const std::vector<double>& values, double threshold);

/// |F(w)_{ij}| for each grid frequency; row per frequency, entries row-major.
Matrix response_magnitudes(const FrequencyResponseEvaluator& eval, const std::vector<double>& omegas);

template <class R>
struct Timed {
  std::string label;
  R value;
  double seconds = 0.0;
};

template <class F>
auto timed(std::string label, F&& thunk) -> Timed<decltype(thunk())> {
  const auto start = std::chrono::steady_clock::now();
  auto value = thunk();
  const std::chrono::duration<double> dt = std::chrono::steady_clock::now() - start;
  return {std::move(label), std::move(value), dt.count()};
}

}  // namespace s5id
