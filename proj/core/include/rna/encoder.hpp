#pragma once

#include <Eigen/Dense>
#include <random>
#include <vector>

#include "rna/autodiff.hpp"
#include "rna/graph_data.hpp"
#include "rna/model.hpp"

namespace rna {

/// Symmetric-normalized aggregation coefficients with unit self-loops.
/// Degrees count every stored edge once per endpoint plus the self-loop.
ad::AggregationPlan build_aggregation_plan(const GraphBatch& batch);

/// Same, but degrees count only the edges kept by `keep` (self-loops stay).
/// Dropped edges still appear in the plan so a weight vector can line up
/// with the batch edge list.
ad::AggregationPlan build_masked_plan(const GraphBatch& batch,
                                      const std::vector<std::uint8_t>& keep);

struct DropoutContext {
  double rate = 0.0;
  std::mt19937_64* rng = nullptr;
};

/// K rounds of normalized aggregation + linear transform, rectifier between
/// rounds but not after the last. Returns node embeddings (nodes x hidden).
/// A non-null `features` Var replaces the batch feature matrix, so gradients
/// can flow into the inputs as well as the weights.
ad::Var message_pass(const GraphBatch& batch, const EncoderParams& params,
                     const DropoutContext* dropout = nullptr,
                     const ad::Var& features = nullptr);

/// message_pass over a caller-supplied plan and per-edge weights (the
/// subgraph path). A null edge_weight means unit weights.
ad::Var message_pass_weighted(const GraphBatch& batch, const EncoderParams& params,
                              const ad::AggregationPlan& plan,
                              const ad::Var& edge_weight,
                              const DropoutContext* dropout = nullptr,
                              const ad::Var& features = nullptr);

/// Per-graph mean of final-layer node embeddings.
ad::Var readout(const ad::Var& node_embeddings, const GraphBatch& batch);

ad::Var classify_logits(const ad::Var& graph_embeddings, const EncoderParams& params);

/// Softmax label distribution, one row per graph.
ad::Var classify(const ad::Var& graph_embeddings, const EncoderParams& params);

/// Forward-only embedding of every graph in the dataset, in dataset order.
Eigen::MatrixXd embed_dataset(const GraphDataset& dataset, const ModelState& model);

/// Forward-only class probabilities for every graph, in dataset order.
Eigen::MatrixXd predict_dataset(const GraphDataset& dataset, const ModelState& model);

/// Cross-entropy pretraining on a fully labeled source dataset. Trains the
/// encoder and classifier; extractor and discriminator stay at their fresh
/// initialization. Returns the trained model; optionally records the mean
/// training loss per epoch.
ModelState pretrain_source(const GraphDataset& source, const AdaptConfig& config,
                           std::vector<double>* epoch_loss = nullptr);

}  // namespace rna
