#include <benchmark/benchmark.h>

#include <random>
#include <set>

#include "rna/autodiff.hpp"
#include "rna/encoder.hpp"
#include "rna/graph_data.hpp"

namespace {

// one fixed-size graph with a controlled edge count
rna::GraphDataset dense_pair(int nodes, int edges, unsigned seed) {
  rna::GraphDataset ds;
  ds.num_classes = 2;
  ds.feature_dim = 8;
  rna::Graph g;
  g.node_count = nodes;
  g.label = 0;
  g.node_features = Eigen::MatrixXd::Ones(nodes, 8);
  std::set<std::pair<int, int>> set;
  for (int v = 0; v + 1 < nodes; ++v) set.insert({v, v + 1});
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> pick(0, nodes - 1);
  while (static_cast<int>(set.size()) < edges) {
    int u = pick(rng), v = pick(rng);
    if (u == v) continue;
    if (u > v) std::swap(u, v);
    set.insert({u, v});
  }
  g.edges.assign(set.begin(), set.end());
  ds.graphs.push_back(g);
  ds.graphs.push_back(g);
  return ds;
}

}  // namespace

// forward + backward cost of the encoder at a fixed node count, edge count on
// the x axis (the per-sample complexity driver)
static void BM_EncoderStepByEdges(benchmark::State& state) {
  const int edges = static_cast<int>(state.range(0));
  rna::AdaptConfig cfg;
  cfg.hidden_dim = 64;
  cfg.seed = 3;
  rna::GraphDataset ds = dense_pair(800, edges, 17);
  rna::ModelState model = rna::init_model(cfg, ds.feature_dim, 2);
  rna::GraphBatch batch = rna::assemble_batch(ds, {0, 1});
  for (auto _ : state) {
    model.params.zero_grads();
    auto h = rna::message_pass(batch, model.encoder);
    auto loss = rna::ad::mean(rna::readout(h, batch));
    rna::ad::backward(loss);
    benchmark::DoNotOptimize(loss->value);
  }
  state.SetComplexityN(edges);
}
BENCHMARK(BM_EncoderStepByEdges)->Arg(2000)->Arg(4000)->Arg(8000)->Arg(16000)->Complexity(benchmark::oN);

// hidden-width cost at a fixed topology
static void BM_EncoderStepByWidth(benchmark::State& state) {
  const int width = static_cast<int>(state.range(0));
  rna::AdaptConfig cfg;
  cfg.hidden_dim = width;
  cfg.seed = 5;
  rna::GraphDataset ds = dense_pair(400, 3000, 23);
  rna::ModelState model = rna::init_model(cfg, ds.feature_dim, 2);
  rna::GraphBatch batch = rna::assemble_batch(ds, {0, 1});
  for (auto _ : state) {
    model.params.zero_grads();
    auto h = rna::message_pass(batch, model.encoder);
    auto loss = rna::ad::mean(rna::readout(h, batch));
    rna::ad::backward(loss);
    benchmark::DoNotOptimize(loss->value);
  }
  state.SetComplexityN(width);
}
BENCHMARK(BM_EncoderStepByWidth)->Arg(32)->Arg(64)->Arg(128);

BENCHMARK_MAIN();
