#include <benchmark/benchmark.h>

#include <random>

#include "csbp/linalg.hpp"
#include "csbp/semigroup.hpp"
#include "csbp/simulator.hpp"
#include "csbp/spectral.hpp"

namespace {

csbp::ModelConfig reference() {
  csbp::ModelConfig cfg;
  cfg.a = csbp::Vector(2);
  cfg.a << -0.5, -0.2;
  cfg.b = csbp::Vector::Constant(2, 0.3);
  cfg.eta = csbp::Matrix(2, 2);
  cfg.eta << 0.0, 0.3, 0.1, 0.0;
  csbp::Vector y(2);
  y << 0.4, 0.4;
  cfg.gamma = {csbp::JumpMeasure(csbp::FiniteAtoms{{{0.5, y}}}), csbp::JumpMeasure(csbp::FiniteAtoms{{{0.2, y}}})};
  cfg.mu0 = csbp::Vector::Ones(2);
  return cfg;
}

void BM_Expm(benchmark::State& state) {
  const auto n = static_cast<Eigen::Index>(state.range(0));
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  csbp::Matrix A(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) A(i, j) = U(rng);
  }
  for (auto _ : state) benchmark::DoNotOptimize(csbp::expm(A));
}
BENCHMARK(BM_Expm)->Arg(2)->Arg(8)->Arg(32)->Arg(64);

void BM_PerronFrobenius(benchmark::State& state) {
  const auto n = static_cast<Eigen::Index>(state.range(0));
  csbp::Matrix A = csbp::Matrix::Constant(n, n, 0.1);
  A.diagonal().setConstant(0.5);
  for (auto _ : state) benchmark::DoNotOptimize(csbp::perron_frobenius(A));
}
BENCHMARK(BM_PerronFrobenius)->Arg(2)->Arg(8)->Arg(64);

void BM_SimulatePath(benchmark::State& state) {
  const csbp::ModelConfig cfg = reference();
  const double T = static_cast<double>(state.range(0));
  std::uint64_t seed = 0;
  for (auto _ : state) benchmark::DoNotOptimize(csbp::simulate_path(cfg, T, 0.005, seed++, {20, false}));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(T / 0.005));
}
BENCHMARK(BM_SimulatePath)->Arg(1)->Arg(20);

void BM_LogLaplace(benchmark::State& state) {
  const csbp::ModelConfig cfg = reference();
  csbp::Vector f(2);
  f << 1.0, 2.0;
  for (auto _ : state) benchmark::DoNotOptimize(csbp::solve_log_laplace(cfg, f, 1.0, 0.01));
}
BENCHMARK(BM_LogLaplace);

void BM_SecondMoment(benchmark::State& state) {
  const csbp::ModelConfig cfg = reference();
  csbp::Vector f(2);
  f << 1.0, 2.0;
  for (auto _ : state) benchmark::DoNotOptimize(csbp::second_moment(cfg, f, 1.0, cfg.mu0));
}
BENCHMARK(BM_SecondMoment);

}  // namespace

BENCHMARK_MAIN();
