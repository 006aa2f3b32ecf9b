#include "rna/encoder.hpp"

#include <cmath>

#include "rna/common.hpp"

namespace rna {

namespace {

ad::AggregationPlan plan_from_degrees(const GraphBatch& batch,
                                      const Eigen::VectorXd& degree) {
  ad::AggregationPlan plan;
  plan.edges = batch.edges;
  plan.edge_coeff.resize(static_cast<Eigen::Index>(batch.edges.size()));
  plan.self_coeff.resize(batch.node_count());
  for (int i = 0; i < batch.node_count(); ++i) plan.self_coeff[i] = 1.0 / degree[i];
  for (size_t e = 0; e < batch.edges.size(); ++e) {
    const auto [u, v] = batch.edges[e];
    plan.edge_coeff[static_cast<Eigen::Index>(e)] =
        1.0 / std::sqrt(degree[u] * degree[v]);
  }
  return plan;
}

ad::Var apply_dropout(ad::Var x, const DropoutContext* dropout) {
  if (!dropout || dropout->rate <= 0.0) return x;
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const double keep = 1.0 - dropout->rate;
  Eigen::MatrixXd mask(x->value.rows(), x->value.cols());
  for (Eigen::Index i = 0; i < mask.rows(); ++i)
    for (Eigen::Index j = 0; j < mask.cols(); ++j)
      mask(i, j) = unif(*dropout->rng) < keep ? 1.0 / keep : 0.0;
  return ad::mul(x, ad::constant(std::move(mask)));
}

}  // namespace

ad::AggregationPlan build_aggregation_plan(const GraphBatch& batch) {
  Eigen::VectorXd degree = Eigen::VectorXd::Ones(batch.node_count());  // self-loop
  for (const auto& [u, v] : batch.edges) {
    degree[u] += 1.0;
    degree[v] += 1.0;
  }
  return plan_from_degrees(batch, degree);
}

ad::AggregationPlan build_masked_plan(const GraphBatch& batch,
                                      const std::vector<std::uint8_t>& keep) {
  if (keep.size() != batch.edges.size())
    throw ConfigError("build_masked_plan: mask size != edge count");
  Eigen::VectorXd degree = Eigen::VectorXd::Ones(batch.node_count());
  for (size_t e = 0; e < batch.edges.size(); ++e) {
    if (!keep[e]) continue;
    degree[batch.edges[e].first] += 1.0;
    degree[batch.edges[e].second] += 1.0;
  }
  return plan_from_degrees(batch, degree);
}

ad::Var message_pass_weighted(const GraphBatch& batch, const EncoderParams& params,
                              const ad::AggregationPlan& plan,
                              const ad::Var& edge_weight,
                              const DropoutContext* dropout,
                              const ad::Var& features) {
  ad::Var h = features ? features : ad::constant(batch.features);
  if (h->value.cols() != params.in_dim)
    throw ConfigError("message_pass: feature dim " + std::to_string(h->value.cols()) +
                      " does not match encoder input dim " +
                      std::to_string(params.in_dim));
  if (h->value.rows() != batch.node_count())
    throw ConfigError("message_pass: feature rows do not match the batch");
  for (size_t l = 0; l < params.layers.size(); ++l) {
    h = ad::neighborhood_aggregate(h, plan, edge_weight);
    h = ad::add_rowvec(ad::matmul(h, params.layers[l].W), params.layers[l].b);
    if (l + 1 < params.layers.size()) {
      h = ad::relu(h);
      h = apply_dropout(h, dropout);
    }
  }
  return h;
}

ad::Var message_pass(const GraphBatch& batch, const EncoderParams& params,
                     const DropoutContext* dropout, const ad::Var& features) {
  return message_pass_weighted(batch, params, build_aggregation_plan(batch), nullptr,
                               dropout, features);
}

ad::Var readout(const ad::Var& node_embeddings, const GraphBatch& batch) {
  return ad::segment_mean(node_embeddings, batch.node_graph, batch.graph_count());
}

ad::Var classify_logits(const ad::Var& graph_embeddings, const EncoderParams& params) {
  return ad::add_rowvec(ad::matmul(graph_embeddings, params.head.W), params.head.b);
}

ad::Var classify(const ad::Var& graph_embeddings, const EncoderParams& params) {
  return ad::softmax_rows(classify_logits(graph_embeddings, params));
}

namespace {

// Forward over the dataset in fixed-size chunks, collecting one row per graph.
template <typename Fn>
Eigen::MatrixXd forward_rows(const GraphDataset& dataset, const ModelState& model,
                             int out_cols, Fn&& per_batch) {
  Eigen::MatrixXd out(dataset.graphs.size(), out_cols);
  const int chunk = std::max(1, model.config.batch_size);
  std::vector<int> indices;
  for (size_t start = 0; start < dataset.graphs.size(); start += chunk) {
    const size_t end = std::min(dataset.graphs.size(), start + chunk);
    indices.clear();
    for (size_t i = start; i < end; ++i) indices.push_back(static_cast<int>(i));
    GraphBatch batch = assemble_batch(dataset, indices);
    Eigen::MatrixXd rows = per_batch(batch);
    out.middleRows(static_cast<Eigen::Index>(start), rows.rows()) = rows;
  }
  return out;
}

}  // namespace

Eigen::MatrixXd embed_dataset(const GraphDataset& dataset, const ModelState& model) {
  return forward_rows(dataset, model, model.config.hidden_dim,
                      [&](const GraphBatch& batch) {
                        auto h = message_pass(batch, model.encoder);
                        return readout(h, batch)->value;
                      });
}

Eigen::MatrixXd predict_dataset(const GraphDataset& dataset, const ModelState& model) {
  return forward_rows(dataset, model, model.num_classes,
                      [&](const GraphBatch& batch) {
                        auto h = message_pass(batch, model.encoder);
                        return classify(readout(h, batch), model.encoder)->value;
                      });
}

ModelState pretrain_source(const GraphDataset& source, const AdaptConfig& config,
                           std::vector<double>* epoch_loss) {
  if (source.graphs.size() < 2)
    throw ArgumentError("pretrain_source: source must contain at least 2 graphs");
  if (!source.fully_labeled())
    throw ArgumentError("pretrain_source: every source graph must be labeled");
  for (const auto& g : source.graphs)
    if (*g.label < 0 || *g.label >= source.num_classes)
      throw ArgumentError("pretrain_source: label outside {0..C-1}");

  ModelState model = init_model(config, source.feature_dim, source.num_classes);
  model.node_label_values = source.node_label_values;
  if (epoch_loss) epoch_loss->clear();

  for (int epoch = 0; epoch < config.pretrain_epochs; ++epoch) {
    auto batches = make_batches(
        source, config.batch_size,
        splitmix64(config.seed ^ splitmix64(0x70726574ULL ^ splitmix64(epoch))));
    double loss_sum = 0.0;
    long graphs_seen = 0;
    for (const auto& batch : batches) {
      model.params.zero_grads();
      auto rng = substream(config.seed, Stream::kDropout, epoch, graphs_seen);
      DropoutContext dropout{config.dropout, &rng};
      auto h = message_pass(batch, model.encoder,
                            config.dropout > 0 ? &dropout : nullptr);
      auto logits = classify_logits(readout(h, batch), model.encoder);
      std::vector<int> rows, labels;
      rows.reserve(batch.graph_count());
      for (int i = 0; i < batch.graph_count(); ++i) {
        rows.push_back(i);
        labels.push_back(*batch.labels[i]);
      }
      auto loss = ad::cross_entropy(logits, rows, labels,
                                    static_cast<double>(batch.graph_count()));
      ad::backward(loss);
      model.params.adam_step(model.encoder_group, config.learning_rate,
                             config.weight_decay);
      loss_sum += loss->scalar() * batch.graph_count();
      graphs_seen += batch.graph_count();
    }
    if (epoch_loss) epoch_loss->push_back(loss_sum / static_cast<double>(graphs_seen));
  }
  model.pretrained = true;
  return model;
}

}  // namespace rna
