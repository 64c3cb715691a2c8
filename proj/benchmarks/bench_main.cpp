#include "s5id/eval.hpp"
#include "s5id/linalg.hpp"
#include "s5id/s5.hpp"

#include <benchmark/benchmark.h>

#include <cmath>
#include <random>

using namespace s5id;

namespace {

Matrix random_matrix(Index rows, Index cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n01;
  Matrix m(rows, cols);
  for (Index j = 0; j < cols; ++j) {
    for (Index i = 0; i < rows; ++i) m(i, j) = n01(rng);
  }
  return m;
}

Matrix scaled(const Matrix& a, double radius) { return a * (radius / linalg::spectral_radius(a)); }

Dataset highdim_data(Index n) {
  const Index p = n + 10;
  const auto sys = build_highdim_example(n, p);
  const SystemSimulator sim(sys.model, sys.input_law);
  const Index Tbar = static_cast<Index>(std::ceil(20.0 * static_cast<double>(p) + 500.0));
  return sim.simulate(Tbar + 1, 1);
}

void BM_S5Identify(benchmark::State& state) {
  const Index n = state.range(0);
  const Dataset data = highdim_data(n);
  const SubspaceConfig cfg{n + 10, n + 10, n};
  for (auto _ : state) benchmark::DoNotOptimize(s5_identify(data, cfg).A_hat.data());
}
BENCHMARK(BM_S5Identify)->Arg(16)->Arg(64)->Unit(benchmark::kMillisecond);

void BM_Sylvester(benchmark::State& state) {
  const Index n = state.range(0);
  const Matrix A = scaled(random_matrix(n, n, 1), 1.2);
  const Matrix Au = scaled(random_matrix(2, 2, 2), 0.7);
  const Matrix B = random_matrix(n, 2, 3);
  for (auto _ : state) benchmark::DoNotOptimize(linalg::solve_sylvester(A, Au, B).data());
}
BENCHMARK(BM_Sylvester)->Arg(16)->Arg(64)->Arg(256)->Unit(benchmark::kMicrosecond);

void BM_Dlyap(benchmark::State& state) {
  const Index n = state.range(0);
  const Matrix A = scaled(random_matrix(n, n, 4), 0.9);
  const Matrix Q = Matrix::Identity(n, n);
  for (auto _ : state) benchmark::DoNotOptimize(linalg::solve_dlyap(A, Q).data());
}
BENCHMARK(BM_Dlyap)->Arg(16)->Arg(64)->Unit(benchmark::kMicrosecond);

void BM_HinfReport(benchmark::State& state) {
  const Index n = state.range(0);
  const auto sys = build_highdim_example(n, n + 10);
  StateSpaceModel other = sys.model;
  other.A = scaled(sys.model.A + 1e-3 * random_matrix(n, n, 5), 0.99);
  const FrequencyResponseEvaluator truth(sys.model), est(other);
  for (auto _ : state) benchmark::DoNotOptimize(hinf_report(truth, est).hard_error);
}
BENCHMARK(BM_HinfReport)->Arg(16)->Arg(64)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
