#include <benchmark/benchmark.h>

#include <Eigen/Dense>
#include <random>

#include "rna/harmonic.hpp"
#include "rna/seriation.hpp"

namespace {

Eigen::MatrixXd random_embeddings(int n, int d, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss;
  Eigen::MatrixXd z(n, d);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j) z(i, j) = gauss(rng);
  return z;
}

}  // namespace

static void BM_SimilarityMatrix(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const Eigen::MatrixXd z = random_embeddings(n, 128, 42);
  for (auto _ : state) {
    benchmark::DoNotOptimize(rna::similarity_matrix(z));
  }
  state.SetComplexityN(n);
}
BENCHMARK(BM_SimilarityMatrix)->Arg(250)->Arg(500)->Arg(1000)->Complexity(benchmark::oNSquared);

static void BM_FiedlerRanking(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const Eigen::MatrixXd s = rna::similarity_matrix(random_embeddings(n, 128, 7));
  const Eigen::MatrixXd l = rna::laplacian(s);
  for (auto _ : state) {
    benchmark::DoNotOptimize(rna::fiedler_ranking(l));
  }
  state.SetComplexityN(n);
}
BENCHMARK(BM_FiedlerRanking)->Arg(64)->Arg(128)->Arg(256)->Complexity();

static void BM_SpectralEmbed(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const Eigen::MatrixXd s = rna::similarity_matrix(random_embeddings(n, 128, 9));
  for (auto _ : state) {
    benchmark::DoNotOptimize(rna::spectral_embed(s, 2));
  }
  state.SetComplexityN(n);
}
BENCHMARK(BM_SpectralEmbed)->Arg(250)->Arg(500)->Arg(1000)->Complexity();

static void BM_Silhouette(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const Eigen::MatrixXd s = rna::similarity_matrix(random_embeddings(n, 16, 11));
  Eigen::MatrixXd dist = (1.0 - s.array()).matrix();
  dist.diagonal().setZero();
  std::vector<int> labels(n);
  for (int i = 0; i < n; ++i) labels[i] = i % 2;
  for (auto _ : state) {
    benchmark::DoNotOptimize(rna::silhouette(dist, labels));
  }
  state.SetComplexityN(n);
}
BENCHMARK(BM_Silhouette)->Arg(250)->Arg(500)->Arg(1000)->Complexity(benchmark::oNSquared);
