#include <benchmark/benchmark.h>

#include "gmc/embedding.hpp"
#include "gmc/omp.hpp"
#include "gmc/projection.hpp"
#include "gmc/rng.hpp"

using namespace gmc;

namespace {

Eigen::MatrixXd random_matrix(Eigen::Index rows, Eigen::Index cols,
                              std::uint64_t seed) {
  Rng rng(seed);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = rng.normal();
  return m;
}

WeightedDataset random_data(Eigen::Index n, std::size_t dim, int classes,
                            std::uint64_t seed) {
  Rng rng(seed);
  Eigen::MatrixXd x(n, static_cast<Eigen::Index>(dim));
  std::vector<int> y;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < x.cols(); ++j) x(i, j) = rng.normal();
    y.push_back(static_cast<int>(rng.below(static_cast<std::uint64_t>(classes))));
  }
  return WeightedDataset::unit_weights(std::move(x), std::move(y));
}

void BM_SparseProject(benchmark::State& state) {
  const std::size_t source = static_cast<std::size_t>(state.range(0));
  const SparseProjection p(source, 1000, default_density(source), 1);
  Rng rng(2);
  Eigen::VectorXd v(static_cast<Eigen::Index>(source));
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = rng.normal();
  for (auto _ : state) {
    benchmark::DoNotOptimize(p.apply(v));
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_SparseProject)->RangeMultiplier(4)->Range(1 << 12, 1 << 18)->Complexity();

void BM_BuildEmbeddings(benchmark::State& state) {
  const ArchSpec arch{16, {64, 64}, 5};
  const WeightedDataset data = random_data(256, 16, 5, 3);
  EmbeddingSpec spec;
  spec.samples = static_cast<std::size_t>(state.range(0));
  spec.dim = 200;
  for (auto _ : state) {
    benchmark::DoNotOptimize(build_embeddings(data, arch, spec));
  }
  state.SetItemsProcessed(state.iterations() * data.size() * state.range(0));
}
BENCHMARK(BM_BuildEmbeddings)->Arg(1)->Arg(3)->Arg(10);

void BM_OmpSelect(benchmark::State& state) {
  const Eigen::Index dim = 600, cols = 800;
  const Eigen::MatrixXd dict = random_matrix(dim, cols, 5);
  const Eigen::VectorXd target = dict * Eigen::VectorXd::Ones(cols);
  OmpConfig cfg;
  cfg.coreset_size = static_cast<std::size_t>(state.range(0));
  cfg.lambda = 0.5;
  for (auto _ : state) {
    benchmark::DoNotOptimize(omp_select(dict, target, cfg));
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_OmpSelect)->RangeMultiplier(2)->Range(25, 400)->Complexity();

void BM_CholAppend(benchmark::State& state) {
  const Eigen::Index dim = 512;
  const Eigen::Index count = state.range(0);
  const Eigen::MatrixXd cols = random_matrix(dim, count, 7);
  const Eigen::VectorXd target = cols.rowwise().sum();
  for (auto _ : state) {
    CholState chol(dim, 0.5);
    for (Eigen::Index j = 0; j < count; ++j)
      benchmark::DoNotOptimize(chol.try_append(cols.col(j), target));
    benchmark::DoNotOptimize(solve_weights(chol, target));
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_CholAppend)->RangeMultiplier(2)->Range(16, 256)->Complexity();

}  // namespace

BENCHMARK_MAIN();
