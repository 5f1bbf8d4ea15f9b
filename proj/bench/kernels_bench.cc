#include <benchmark/benchmark.h>

#include <vector>

#include "aeenc/encoder.h"
#include "aeenc/kernels.h"
#include "aeenc/random.h"

namespace aeenc {
namespace {

std::vector<double> Normals(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> v(n);
  for (auto& x : v) x = rng.Normal();
  return v;
}

// range(0) rows of width range(1).
template <bool kParallel>
void BM_ScoreDense(benchmark::State& state) {
  const auto rows = static_cast<std::size_t>(state.range(0));
  const auto dim = static_cast<std::size_t>(state.range(1));
  const auto block = Normals(rows * dim, 1);
  const auto query = Normals(dim, 2);
  std::vector<double> out(rows);
  for (auto _ : state) {
    if constexpr (kParallel) {
      kernels::ScoreDense(block, dim, query, out);
    } else {
      kernels::ScoreDenseSerial(block, dim, query, out);
    }
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(rows));
}

kernels::CsrRows RandomCsr(std::size_t rows, std::size_t dim, std::size_t nnz) {
  Rng rng(3);
  kernels::CsrRows csr;
  for (std::size_t r = 0; r < rows; ++r) {
    SparseVector v;
    std::uint32_t col = 0;
    for (std::size_t i = 0; i < nnz; ++i) {
      col += 1 + static_cast<std::uint32_t>(rng.Index(dim / nnz));
      v.index.push_back(col);
      v.value.push_back(rng.Uniform());
    }
    csr.Append(v);
  }
  return csr;
}

template <bool kParallel>
void BM_ScoreSparse(benchmark::State& state) {
  const auto rows = static_cast<std::size_t>(state.range(0));
  const std::size_t dim = 20000;
  const auto csr = RandomCsr(rows, dim, 12);
  const auto query = Normals(dim + 64, 4);
  std::vector<double> out(rows);
  for (auto _ : state) {
    if constexpr (kParallel) {
      kernels::ScoreSparse(csr, query, out);
    } else {
      kernels::ScoreSparseSerial(csr, query, out);
    }
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(rows));
}

// range(0) rank-one terms into a range(1) x range(1) gradient.
template <bool kParallel>
void BM_AccumulateOuter(benchmark::State& state) {
  const auto terms_n = static_cast<std::size_t>(state.range(0));
  const auto dim = static_cast<std::size_t>(state.range(1));
  const auto us = Normals(terms_n * dim, 5);
  const auto xs = Normals(terms_n * dim, 6);
  std::vector<kernels::OuterTerm> terms;
  for (std::size_t t = 0; t < terms_n; ++t) {
    terms.push_back({us.data() + t * dim, xs.data() + t * dim, 0.5});
  }
  Matrix grad(dim, dim);
  for (auto _ : state) {
    if constexpr (kParallel) {
      kernels::AccumulateOuter(grad, terms);
    } else {
      kernels::AccumulateOuterSerial(grad, terms);
    }
    benchmark::DoNotOptimize(grad.data().data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(terms_n));
}

BENCHMARK(BM_ScoreDense<false>)->Args({10000, 384})->Args({100000, 64})->UseRealTime();
BENCHMARK(BM_ScoreDense<true>)->Args({10000, 384})->Args({100000, 64})->UseRealTime();
BENCHMARK(BM_ScoreSparse<false>)->Arg(10000)->Arg(100000)->UseRealTime();
BENCHMARK(BM_ScoreSparse<true>)->Arg(10000)->Arg(100000)->UseRealTime();
BENCHMARK(BM_AccumulateOuter<false>)->Args({64, 384})->Args({256, 128})->UseRealTime();
BENCHMARK(BM_AccumulateOuter<true>)->Args({64, 384})->Args({256, 128})->UseRealTime();

}  // namespace
}  // namespace aeenc

BENCHMARK_MAIN();
