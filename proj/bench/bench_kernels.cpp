// Serial reference vs OpenMP kernels. Args: {rows, cols}.
#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "promissing/kernels.hpp"

namespace pk = promissing::kernels;
using promissing::MaskedMatrix;
using promissing::Matrix;

namespace {

struct Fixture {
  MaskedMatrix x;
  Matrix w;
  std::vector<double> b, wc;
  Matrix dpre;
};

constexpr std::size_t kUnits = 32;

Fixture make(std::size_t n, std::size_t p, double missing = 0.3) {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> g;
  std::bernoulli_distribution drop(missing);
  Matrix v(n, p);
  std::vector<std::uint8_t> m(n * p);
  for (std::size_t i = 0; i < n; ++i) {
    bool any = false;
    for (std::size_t j = 0; j < p; ++j) {
      v(i, j) = g(rng);
      m[i * p + j] = drop(rng);
      any |= !m[i * p + j];
    }
    if (!any) m[i * p] = 0;
  }
  Fixture f{MaskedMatrix(std::move(v), std::move(m)), Matrix(kUnits, p), {}, {}, Matrix(n, kUnits)};
  for (auto& e : f.w.flat()) e = g(rng);
  for (auto& e : f.dpre.flat()) e = g(rng);
  f.b.resize(kUnits);
  f.wc.resize(kUnits);
  for (auto& e : f.b) e = g(rng);
  for (auto& e : f.wc) e = g(rng);
  return f;
}

template <bool Parallel>
void BM_Preactivation(benchmark::State& st) {
  const auto f = make(st.range(0), st.range(1));
  Matrix pre(f.x.rows(), kUnits);
  for (auto _ : st) {
    if constexpr (Parallel) {
      pk::nan_dense_preactivation(f.x, f.w, f.b, f.wc, pre);
    } else {
      pk::nan_dense_preactivation_serial(f.x, f.w, f.b, f.wc, pre);
    }
    benchmark::DoNotOptimize(pre.flat().data());
  }
  st.SetItemsProcessed(st.iterations() * st.range(0));
}

template <bool Parallel>
void BM_ParamGrad(benchmark::State& st) {
  const auto f = make(st.range(0), st.range(1));
  Matrix dw(kUnits, f.x.cols());
  std::vector<double> db(kUnits), dwc(kUnits);
  for (auto _ : st) {
    if constexpr (Parallel) {
      pk::nan_dense_param_grad(f.x, f.dpre, dw, db, dwc);
    } else {
      pk::nan_dense_param_grad_serial(f.x, f.dpre, dw, db, dwc);
    }
    benchmark::DoNotOptimize(dw.flat().data());
  }
  st.SetItemsProcessed(st.iterations() * st.range(0));
}

template <bool Parallel>
void BM_KnnFill(benchmark::State& st) {
  const auto f = make(st.range(0), st.range(1));
  Matrix out(f.x.rows(), f.x.cols());
  for (auto _ : st) {
    if constexpr (Parallel) {
      pk::knn_fill(f.x, f.x, 5, out);
    } else {
      pk::knn_fill_serial(f.x, f.x, 5, out);
    }
    benchmark::DoNotOptimize(out.flat().data());
  }
  st.SetItemsProcessed(st.iterations() * st.range(0));
}

void dims(benchmark::internal::Benchmark* b) {
  b->Args({256, 16})->Args({4096, 16})->Args({4096, 128})->Unit(benchmark::kMicrosecond);
}

void knn_dims(benchmark::internal::Benchmark* b) {
  b->Args({256, 8})->Args({2048, 8})->Unit(benchmark::kMillisecond);
}

}  // namespace

BENCHMARK(BM_Preactivation<false>)->Apply(dims)->Name("preactivation/serial");
BENCHMARK(BM_Preactivation<true>)->Apply(dims)->Name("preactivation/omp");
BENCHMARK(BM_ParamGrad<false>)->Apply(dims)->Name("param_grad/serial");
BENCHMARK(BM_ParamGrad<true>)->Apply(dims)->Name("param_grad/omp");
BENCHMARK(BM_KnnFill<false>)->Apply(knn_dims)->Name("knn_fill/serial");
BENCHMARK(BM_KnnFill<true>)->Apply(knn_dims)->Name("knn_fill/omp");

BENCHMARK_MAIN();
