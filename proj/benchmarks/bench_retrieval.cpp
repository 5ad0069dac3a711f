#include <benchmark/benchmark.h>

#include "xlalign/eval.hpp"
#include "xlalign/mapping.hpp"
#include "xlalign/rng.hpp"

using namespace xlalign;

static void BM_Retrieval(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Rng rng(5);
  Tensor src = Tensor::normal(n, 64, 1.0, rng);
  Tensor tgt = Tensor::normal(n, 64, 1.0, rng);
  for (auto _ : state) benchmark::DoNotOptimize(eval::retrieval_accuracy(src, tgt));
  state.SetComplexityN(static_cast<std::int64_t>(n));
}
BENCHMARK(BM_Retrieval)->RangeMultiplier(4)->Range(64, 1024)->Complexity(benchmark::oNSquared);

static void BM_FitOrthogonalMap(benchmark::State& state) {
  const auto d = static_cast<std::size_t>(state.range(0));
  Rng rng(6);
  Tensor x = Tensor::normal(4 * d, d, 1.0, rng);
  Tensor y = Tensor::normal(4 * d, d, 1.0, rng);
  for (auto _ : state) benchmark::DoNotOptimize(mapping::fit_orthogonal_map(x, y));
}
BENCHMARK(BM_FitOrthogonalMap)->Arg(16)->Arg(32)->Arg(64);
