// Serial reference kernels against their OpenMP versions.
#include <random>

#include <benchmark/benchmark.h>

#include "kkl/kernels.hpp"
#include "kkl/model.hpp"
#include "kkl/transform.hpp"

namespace {

using kkl::kernels::Exec;

Eigen::MatrixXd random_columns(Eigen::Index rows, Eigen::Index cols, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m(i) = g(rng);
  return m;
}

void BM_AllPairs(benchmark::State& state, Exec exec) {
  const auto n = static_cast<Eigen::Index>(state.range(0));
  const Eigen::MatrixXd X = random_columns(2, n, 1), Y = random_columns(6, n, 2);
  for (auto _ : state) benchmark::DoNotOptimize(kkl::kernels::all_pairs(exec, X, Y));
  state.SetItemsProcessed(state.iterations() * n * (n - 1) / 2);
}

void BM_NearestColumn(benchmark::State& state, Exec exec) {
  const auto n = static_cast<Eigen::Index>(state.range(0));
  const Eigen::MatrixXd Y = random_columns(6, n, 3);
  const Eigen::VectorXd q = random_columns(6, 1, 4).col(0);
  for (auto _ : state) benchmark::DoNotOptimize(kkl::kernels::nearest_column(exec, Y, q));
  state.SetItemsProcessed(state.iterations() * n);
}

void BM_Tabulate(benchmark::State& state, Exec exec) {
  const kkl::SaturatedSystem sys{
      kkl::benchmark("van_der_pol"),
      kkl::DomainSpec::box(Eigen::Vector2d(-3, -3), Eigen::Vector2d(3, 3))};
  kkl::ObserverDesign d;
  d.eigenvalues = kkl::ComplexVector(3);
  d.eigenvalues << kkl::Complex(-1.5, 1.0), kkl::Complex(-1.5, -1.0), kkl::Complex(-2.0, 0.0);
  const auto grid = kkl::GridSpec::uniform(sys.domain, static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(kkl::tabulate(sys, d, grid, 20.0, 1e-8, exec));
  state.SetItemsProcessed(state.iterations() * static_cast<long>(grid.size()));
}

}  // namespace

BENCHMARK_CAPTURE(BM_AllPairs, serial, Exec::serial)->Arg(400)->Arg(1600);
BENCHMARK_CAPTURE(BM_AllPairs, omp, Exec::parallel)->Arg(400)->Arg(1600);
BENCHMARK_CAPTURE(BM_NearestColumn, serial, Exec::serial)->Arg(441)->Arg(10000);
BENCHMARK_CAPTURE(BM_NearestColumn, omp, Exec::parallel)->Arg(441)->Arg(10000);
BENCHMARK_CAPTURE(BM_Tabulate, serial, Exec::serial)->Arg(7)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_Tabulate, omp, Exec::parallel)->Arg(7)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
