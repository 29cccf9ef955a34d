// Serial reference against the OpenMP kernels on identification-sized
// problems: rows are residuals, columns are network parameters.

#include <benchmark/benchmark.h>

#include "hoverid/kernels.hpp"
#include "hoverid/nn.hpp"
#include "hoverid/random.hpp"

using namespace hoverid;

namespace {

Matrix random_jacobian(std::size_t rows, std::size_t cols) {
  Rng r(7);
  Matrix j(rows, cols);
  for (double& v : j.storage()) v = r.uniform(-1.0, 1.0);
  return j;
}

// A longitudinal view: 4 outputs on a 1400-sample training split, 12 inputs,
// 10 hidden units.
constexpr std::size_t kSamples = 1400;
constexpr std::size_t kOutputs = 4;

template <Matrix (*Gram)(const Matrix&)>
void BM_Gram(benchmark::State& state) {
  const Matrix j = random_jacobian(static_cast<std::size_t>(state.range(0)), static_cast<std::size_t>(state.range(1)));
  for (auto _ : state) benchmark::DoNotOptimize(Gram(j));
  state.SetItemsProcessed(state.iterations() * state.range(0) * state.range(1) * state.range(1));
}

template <Vector (*Tt)(const Matrix&, std::span<const double>)>
void BM_TransposeTimes(benchmark::State& state) {
  const Matrix j = random_jacobian(static_cast<std::size_t>(state.range(0)), static_cast<std::size_t>(state.range(1)));
  const Vector r(j.rows(), 0.5);
  for (auto _ : state) benchmark::DoNotOptimize(Tt(j, r));
}

// Per-sample parameter Jacobians written into disjoint row blocks.
template <void (*ForEach)(std::size_t, const std::function<void(std::size_t)>&)>
void BM_JacobianAssembly(benchmark::State& state) {
  const Mlp m = mlp_init({12, static_cast<std::size_t>(state.range(0)), kOutputs}, 3);
  Rng r(5);
  std::vector<Vector> phi(kSamples, Vector(12));
  for (auto& p : phi)
    for (double& v : p) v = r.uniform(-1.0, 1.0);
  const std::size_t np = flatten(m).size();
  Matrix jac(kSamples * kOutputs, np);
  for (auto _ : state) {
    ForEach(kSamples, [&](std::size_t t) {
      const MlpEvaluation ev = evaluate(m, phi[t], true, false);
      for (std::size_t o = 0; o < kOutputs; ++o)
        for (std::size_t k = 0; k < np; ++k) jac(t * kOutputs + o, k) = ev.d_params(o, k);
    });
    benchmark::DoNotOptimize(jac.storage().data());
  }
}

}  // namespace

BENCHMARK(BM_Gram<kernels::serial::gram>)->Name("gram/serial")->Args({5600, 174})->Args({400, 122});
BENCHMARK(BM_Gram<kernels::parallel::gram>)->Name("gram/parallel")->Args({5600, 174})->Args({400, 122})->UseRealTime();
BENCHMARK(BM_TransposeTimes<kernels::serial::transpose_times>)->Name("transpose_times/serial")->Args({5600, 174});
BENCHMARK(BM_TransposeTimes<kernels::parallel::transpose_times>)
    ->Name("transpose_times/parallel")
    ->Args({5600, 174})
    ->UseRealTime();
BENCHMARK(BM_JacobianAssembly<kernels::serial::for_each_index>)->Name("jacobian_assembly/serial")->Arg(10);
BENCHMARK(BM_JacobianAssembly<kernels::parallel::for_each_index>)
    ->Name("jacobian_assembly/parallel")
    ->Arg(10)
    ->UseRealTime();

BENCHMARK_MAIN();
