// Serial reference vs OpenMP-parallel paths.

#include <benchmark/benchmark.h>

#include <vector>

#include <Eigen/LU>

#include "netinf/eval.hpp"
#include "netinf/kernel.hpp"
#include "netinf/netsim.hpp"
#include "netinf/topology.hpp"

namespace {

using namespace netinf;

std::vector<Experiment> fixture(int points) {
  const StateSpaceModel model = generate_random_network(8, 5, 0.2, 11);
  return {simulate(model, points, SnrSetting::finite(20.0), 12)};
}

InferenceConfig small_config() {
  InferenceConfig c;
  c.trunc = 10;
  c.vi.n_mh_samples = 200;
  c.vi.n_burn_in = 50;
  c.vi.max_iter = 20;
  return c;
}

void BM_InferSerial(benchmark::State& state) {
  const auto data = fixture(static_cast<int>(state.range(0)));
  const auto cfg = small_config();
  for (auto _ : state) benchmark::DoNotOptimize(infer_network_serial(data, cfg));
}

void BM_InferParallel(benchmark::State& state) {
  const auto data = fixture(static_cast<int>(state.range(0)));
  const auto cfg = small_config();
  for (auto _ : state) benchmark::DoNotOptimize(infer_network(data, cfg));
}

eval::BenchmarkConfig tiny_grid() {
  eval::BenchmarkConfig c;
  c.nodes = 6;
  c.observed = 4;
  c.density = 0.25;
  c.lengths = {40};
  c.trials = 4;
  c.validation_points = 40;
  c.inference = small_config();
  return c;
}

void BM_BenchmarkSerial(benchmark::State& state) {
  const auto cfg = tiny_grid();
  for (auto _ : state) benchmark::DoNotOptimize(eval::run_benchmark_serial(cfg));
}

void BM_BenchmarkParallel(benchmark::State& state) {
  const auto cfg = tiny_grid();
  for (auto _ : state) benchmark::DoNotOptimize(eval::run_benchmark(cfg));
}

void BM_ExpectedInverseShared(benchmark::State& state) {
  const int t = static_cast<int>(state.range(0));
  std::vector<kernel::TcKernelParam> samples;
  for (int k = 0; k < 500; ++k) samples.emplace_back(0.05 + 0.9 * k / 500.0);
  for (auto _ : state) benchmark::DoNotOptimize(kernel::expected_inverse_kernel(t, samples));
}

void BM_ExpectedInverseDense(benchmark::State& state) {
  const int t = static_cast<int>(state.range(0));
  std::vector<double> betas;
  for (int k = 0; k < 500; ++k) betas.push_back(0.05 + 0.9 * k / 500.0);
  for (auto _ : state) {
    Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(t, t);
    for (double b : betas) acc += kernel::tc_kernel_matrix(t, kernel::TcKernelParam(b)).inverse();
    benchmark::DoNotOptimize(acc);
  }
}

}  // namespace

BENCHMARK(BM_InferSerial)->Arg(60)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_InferParallel)->Arg(60)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_BenchmarkSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_BenchmarkParallel)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ExpectedInverseShared)->Arg(20);
BENCHMARK(BM_ExpectedInverseDense)->Arg(20)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
