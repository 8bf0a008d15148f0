// Serial reference vs OpenMP kernels.
#include "repden/kernels.hpp"

#include <benchmark/benchmark.h>

#include <algorithm>
#include <random>
#include <vector>

using namespace repden;

namespace {

std::vector<double> draws(std::size_t n)
{
  std::mt19937_64 rng(42);
  std::normal_distribution<double> z(0.0, 1.0);
  std::vector<double> out(n);
  for (auto& v : out)
    v = std::clamp(z(rng), -3.0, 3.0);
  return out;
}

Eigen::MatrixXd random_rows(Eigen::Index n, Eigen::Index m)
{
  std::srand(7);
  return Eigen::MatrixXd::Random(n, m);
}

template <bool Omp>
void BM_kernel_sum(benchmark::State& state)
{
  const auto obs = draws(static_cast<std::size_t>(state.range(0)));
  const Eigen::VectorXd grid = Eigen::VectorXd::LinSpaced(512, -3.0, 3.0);
  for (auto _ : state) {
    auto v = Omp ? kernels::omp::weighted_kernel_sum(obs, 0.3, grid, -3.0, 3.0)
                 : kernels::serial::weighted_kernel_sum(obs, 0.3, grid, -3.0, 3.0);
    benchmark::DoNotOptimize(v.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0) * 512);
}

template <bool Omp>
void BM_centered_gram(benchmark::State& state)
{
  const Eigen::MatrixXd rows = random_rows(state.range(0), 512);
  const Eigen::VectorXd w = Eigen::VectorXd::Constant(512, 6.0 / 511.0);
  for (auto _ : state) {
    auto g = Omp ? kernels::omp::centered_gram(rows, w) : kernels::serial::centered_gram(rows, w);
    benchmark::DoNotOptimize(g.data());
  }
}

template <bool Omp>
void BM_grid_covariance(benchmark::State& state)
{
  const Eigen::MatrixXd rows = random_rows(50, state.range(0));
  for (auto _ : state) {
    auto c = Omp ? kernels::omp::grid_covariance(rows) : kernels::serial::grid_covariance(rows);
    benchmark::DoNotOptimize(c.data());
  }
}

} // namespace

BENCHMARK(BM_kernel_sum<false>)->Name("kernel_sum/serial")->Arg(50)->Arg(200)->Arg(2000);
BENCHMARK(BM_kernel_sum<true>)->Name("kernel_sum/omp")->Arg(50)->Arg(200)->Arg(2000);
BENCHMARK(BM_centered_gram<false>)->Name("centered_gram/serial")->Arg(50)->Arg(200);
BENCHMARK(BM_centered_gram<true>)->Name("centered_gram/omp")->Arg(50)->Arg(200);
BENCHMARK(BM_grid_covariance<false>)->Name("grid_covariance/serial")->Arg(128)->Arg(512);
BENCHMARK(BM_grid_covariance<true>)->Name("grid_covariance/omp")->Arg(128)->Arg(512);

BENCHMARK_MAIN();
