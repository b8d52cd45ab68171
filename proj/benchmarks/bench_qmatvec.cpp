// Packed matvec vs dense float matvec across bit widths. The packed kernel
// touches bits/16 of the bytes a dense f32 row costs, so memory-bound sizes
// should track that ratio.

#include <benchmark/benchmark.h>

#include <vector>

#include "quantkit/grid.hpp"
#include "quantkit/pack.hpp"
#include "quantkit/rng.hpp"

using namespace quantkit;

namespace {

PackedWeights make_packed(std::size_t dim, int bits) {
  SeededRng rng(42);
  return pack(rtn_quantize(normal_matrix(dim, dim, rng), bits, 0));
}

std::vector<float> make_input(std::size_t dim) {
  SeededRng rng(7);
  std::vector<float> x(dim);
  for (float& v : x) v = static_cast<float>(rng.next_normal());
  return x;
}

void BM_qmatvec(benchmark::State& state) {
  const std::size_t dim = static_cast<std::size_t>(state.range(0));
  const int bits = static_cast<int>(state.range(1));
  const PackedWeights p = make_packed(dim, bits);
  const std::vector<float> x = make_input(dim);
  for (auto _ : state) {
    benchmark::DoNotOptimize(qmatvec(p, x));
  }
  state.SetBytesProcessed(
      static_cast<int64_t>(state.iterations()) *
      static_cast<int64_t>(p.payload.size() + p.scales.size() * 5));
}

void BM_dense_matvec(benchmark::State& state) {
  const std::size_t dim = static_cast<std::size_t>(state.range(0));
  SeededRng rng(42);
  const DenseMatrix wd = normal_matrix(dim, dim, rng, Dtype::F32);
  const std::vector<float> x = make_input(dim);
  std::vector<float> y(dim);
  for (auto _ : state) {
    for (std::size_t r = 0; r < dim; ++r) {
      double acc = 0.0;
      const double* row = wd.row(r).data();
      for (std::size_t c = 0; c < dim; ++c) acc += row[c] * x[c];
      y[r] = static_cast<float>(acc);
    }
    benchmark::DoNotOptimize(y.data());
  }
  state.SetBytesProcessed(static_cast<int64_t>(state.iterations()) *
                          static_cast<int64_t>(dim * dim * sizeof(float)));
}

}  // namespace

BENCHMARK(BM_qmatvec)
    ->Args({512, 2})
    ->Args({512, 3})
    ->Args({512, 4})
    ->Args({512, 8})
    ->Args({2048, 2})
    ->Args({2048, 3})
    ->Args({2048, 4})
    ->Args({2048, 8});
BENCHMARK(BM_dense_matvec)->Arg(512)->Arg(2048);

BENCHMARK_MAIN();
