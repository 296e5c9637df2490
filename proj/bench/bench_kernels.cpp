// Serial reference vs OpenMP loss/gradient kernels. The row count is the
// benchmark argument; run with OMP_NUM_THREADS to vary the thread count.

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "ahmkit/kernels.hpp"

using namespace ahmkit::kernels;

namespace {

constexpr std::size_t kFeatures = 16;
constexpr std::size_t kHidden = 32;
constexpr std::size_t kOutputs = 5;

struct Data {
  Matrix x, y;
  std::vector<double> y0, s, w, params;

  explicit Data(std::size_t n) : x(n, kFeatures), y(n, kOutputs), y0(n), s(n, 1.0), w(kFeatures) {
    std::mt19937_64 rng(n);
    std::normal_distribution<double> g(0.0, 1.0);
    for (auto& v : x.data) v = g(rng);
    for (auto& v : y.data) v = (rng() & 1u) ? 1.0 : 0.0;
    for (std::size_t i = 0; i < n; ++i) y0[i] = y(i, 0);
    for (auto& v : w) v = 0.3 * g(rng);
    params.resize(MlpShape{kFeatures, kHidden, kOutputs}.parameter_count());
    for (auto& v : params) v = 0.3 * g(rng);
  }
};

template <auto Kernel>
void lr_bench(benchmark::State& state) {
  const Data d(static_cast<std::size_t>(state.range(0)));
  const LrProblem p{d.x, d.y0, d.s, 1.0};
  std::vector<double> grad(kFeatures);
  double gb = 0;
  for (auto _ : state) benchmark::DoNotOptimize(Kernel(p, d.w, 0.1, grad, gb));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

template <auto Kernel>
void mlp_bench(benchmark::State& state) {
  const Data d(static_cast<std::size_t>(state.range(0)));
  const MlpShape shape{kFeatures, kHidden, kOutputs};
  std::vector<double> grad(d.params.size());
  for (auto _ : state) benchmark::DoNotOptimize(Kernel(shape, d.x, d.y, d.params, grad));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

}  // namespace

BENCHMARK(lr_bench<lr_loss_grad_serial>)->Name("lr/serial")->RangeMultiplier(8)->Range(128, 1 << 17);
BENCHMARK(lr_bench<lr_loss_grad_parallel>)->Name("lr/openmp")->RangeMultiplier(8)->Range(128, 1 << 17)->UseRealTime();
BENCHMARK(mlp_bench<mlp_loss_grad_serial>)->Name("mlp/serial")->RangeMultiplier(8)->Range(128, 1 << 17);
BENCHMARK(mlp_bench<mlp_loss_grad_parallel>)->Name("mlp/openmp")->RangeMultiplier(8)->Range(128, 1 << 17)->UseRealTime();

BENCHMARK_MAIN();
