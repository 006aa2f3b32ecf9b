#include "rna/align.hpp"

#include <cmath>
#include <limits>

#include "rna/common.hpp"
#include "rna/encoder.hpp"

namespace rna {

namespace {

ad::Var dense2(const ad::Var& x, const DenseLayer& l1, const DenseLayer& l2) {
  auto h = ad::relu(ad::add_rowvec(ad::matmul(x, l1.W), l1.b));
  return ad::add_rowvec(ad::matmul(h, l2.W), l2.b);
}

// straight-through with an explicit (possibly guard-adjusted) hard mask
ad::Var straight_through_mask(const ad::Var& soft,
                              const std::vector<std::uint8_t>& hard) {
  Eigen::MatrixXd v(soft->value.rows(), 1);
  for (Eigen::Index e = 0; e < v.rows(); ++e) v(e, 0) = hard[e] ? 1.0 : 0.0;
  auto node = std::make_shared<ad::Node>(std::move(v), soft->requires_grad);
  if (soft->requires_grad) {
    node->parents = {soft};
    node->backprop = [soft](ad::Node& n) { soft->ensure_grad() += n.grad; };
  }
  return node;
}

// per-graph degeneracy guard: a graph whose every edge was dropped keeps its
// highest-soft edge
void guard_hard_mask(const GraphBatch& batch, const Eigen::MatrixXd& soft,
                     std::vector<std::uint8_t>& hard) {
  for (int g = 0; g + 1 < static_cast<int>(batch.graph_edge_offset.size()); ++g) {
    const int begin = batch.graph_edge_offset[g];
    const int end = batch.graph_edge_offset[g + 1];
    if (begin == end) continue;
    bool any = false;
    for (int e = begin; e < end; ++e) any = any || hard[e];
    if (any) continue;
    int best = begin;
    for (int e = begin + 1; e < end; ++e)
      if (soft(e, 0) > soft(best, 0)) best = e;
    hard[best] = 1;
  }
}

}  // namespace

ad::Var edge_logits(const GraphBatch& batch, const ad::Var& node_embeddings,
                    const ExtractorParams& extractor) {
  const size_t m = batch.edges.size();
  std::vector<int> us(m), vs(m);
  for (size_t e = 0; e < m; ++e) {
    us[e] = batch.edges[e].first;
    vs[e] = batch.edges[e].second;
  }
  if (m == 0)
    return ad::constant(Eigen::MatrixXd::Zero(0, 1));
  auto hu = ad::gather_rows(node_embeddings, us);
  auto hv = ad::gather_rows(node_embeddings, vs);
  auto fwd = dense2(ad::concat_cols(hu, hv), extractor.l1, extractor.l2);
  auto bwd = dense2(ad::concat_cols(hv, hu), extractor.l1, extractor.l2);
  return ad::scale(ad::add(fwd, bwd), 0.5);
}

Eigen::VectorXd gumbel_sigmoid_soft(const Eigen::VectorXd& logits,
                                    const Eigen::VectorXd& noise,
                                    double temperature) {
  if (temperature <= 0.0)
    throw ArgumentError("gumbel_sigmoid: temperature must be > 0");
  if (logits.size() != noise.size())
    throw ArgumentError("gumbel_sigmoid: noise size mismatch");
  Eigen::VectorXd out(logits.size());
  for (Eigen::Index e = 0; e < logits.size(); ++e) {
    const double x = (logits[e] + noise[e]) / temperature;
    out[e] = x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
  }
  return out;
}

Eigen::MatrixXd draw_gumbel_noise(Eigen::Index count, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unif(std::numeric_limits<double>::min(), 1.0);
  Eigen::MatrixXd noise(count, 1);
  for (Eigen::Index e = 0; e < count; ++e) {
    const double g1 = -std::log(-std::log(unif(rng)));
    const double g2 = -std::log(-std::log(unif(rng)));
    noise(e, 0) = g1 - g2;
  }
  return noise;
}

SampledAdjacency gumbel_sigmoid_with_noise(const ad::Var& logits,
                                           const Eigen::MatrixXd& noise,
                                           double temperature) {
  if (temperature <= 0.0)
    throw ArgumentError("gumbel_sigmoid: temperature must be > 0");
  const Eigen::Index m = logits->value.rows();
  if (noise.rows() != m || noise.cols() != 1)
    throw ArgumentError("gumbel_sigmoid: noise shape mismatch");
  SampledAdjacency sample;
  sample.soft = ad::sigmoid(ad::scale(ad::add_const(logits, noise), 1.0 / temperature));
  sample.hard.resize(m);
  for (Eigen::Index e = 0; e < m; ++e) sample.hard[e] = sample.soft->value(e, 0) > 0.5;
  return sample;
}

SampledAdjacency gumbel_sigmoid_sample(const ad::Var& logits, double temperature,
                                       std::mt19937_64& rng) {
  if (temperature <= 0.0)
    throw ArgumentError("gumbel_sigmoid: temperature must be > 0");
  return gumbel_sigmoid_with_noise(
      logits, draw_gumbel_noise(logits->value.rows(), rng), temperature);
}

SampledAdjacency gumbel_sigmoid_sample(const ad::Var& logits, double temperature,
                                       std::uint64_t seed) {
  auto rng = substream(seed, Stream::kGumbel);
  return gumbel_sigmoid_sample(logits, temperature, rng);
}

Graph extract_subgraph(const Graph& graph, const std::vector<std::uint8_t>& hard,
                       const Eigen::VectorXd& soft) {
  if (hard.size() != graph.edges.size() ||
      soft.size() != static_cast<Eigen::Index>(graph.edges.size()))
    throw ArgumentError("extract_subgraph: mask size != edge count");
  Graph sub;
  sub.node_count = graph.node_count;
  sub.node_features = graph.node_features;
  sub.label = graph.label;
  bool any = false;
  for (std::uint8_t h : hard) any = any || h;
  if (!any && !graph.edges.empty()) {
    Eigen::Index best = 0;
    soft.maxCoeff(&best);
    sub.edges.push_back(graph.edges[static_cast<size_t>(best)]);
    return sub;
  }
  for (size_t e = 0; e < graph.edges.size(); ++e)
    if (hard[e]) sub.edges.push_back(graph.edges[e]);
  return sub;
}

namespace {

EncoderParams frozen_encoder(const EncoderParams& params) {
  EncoderParams frozen = params;
  for (auto& layer : frozen.layers) {
    layer.W = ad::detach(layer.W);
    layer.b = ad::detach(layer.b);
  }
  frozen.head.W = ad::detach(frozen.head.W);
  frozen.head.b = ad::detach(frozen.head.b);
  return frozen;
}

}  // namespace

SubgraphPath subgraph_forward(const GraphBatch& inharmonic, const ModelState& model,
                              std::mt19937_64& gumbel_rng) {
  const double temperature = model.config.gumbel_temperature;
  SubgraphPath path;
  path.full_node_embeddings = message_pass(inharmonic, model.encoder);
  path.full_graph_embeddings = readout(path.full_node_embeddings, inharmonic);
  path.logits = edge_logits(inharmonic, path.full_node_embeddings, model.extractor);
  const Eigen::MatrixXd noise =
      draw_gumbel_noise(path.logits->value.rows(), gumbel_rng);
  path.mask = gumbel_sigmoid_with_noise(path.logits, noise, temperature);
  guard_hard_mask(inharmonic, path.mask.soft->value, path.mask.hard);

  const bool relaxed = model.config.soft_subgraph;
  const ad::AggregationPlan plan = relaxed
                                       ? build_aggregation_plan(inharmonic)
                                       : build_masked_plan(inharmonic, path.mask.hard);
  auto view_weight = [&](const SampledAdjacency& mask) {
    // relaxed: soft multipliers over the full-graph normalization;
    // otherwise the discrete subgraph with straight-through gradients
    return relaxed ? mask.soft : straight_through_mask(mask.soft, path.mask.hard);
  };

  auto sub_nodes = message_pass_weighted(inharmonic, model.encoder, plan,
                                         view_weight(path.mask));
  path.sub_graph_embeddings = readout(sub_nodes, inharmonic);

  if (model.config.adv_train_encoder) {
    path.adv_sub_graph_embeddings = path.sub_graph_embeddings;
  } else {
    // adversarial view: same sampled mask, but the extractor reads detached
    // features and the encoder weights are frozen, so the fooling objective
    // trains the edge extractor (and the discriminator) only
    auto adv_logits = edge_logits(inharmonic, ad::detach(path.full_node_embeddings),
                                  model.extractor);
    SampledAdjacency adv_mask = gumbel_sigmoid_with_noise(adv_logits, noise, temperature);
    adv_mask.hard = path.mask.hard;
    auto adv_nodes = message_pass_weighted(inharmonic, frozen_encoder(model.encoder),
                                           plan, view_weight(adv_mask));
    path.adv_sub_graph_embeddings = readout(adv_nodes, inharmonic);
  }
  return path;
}

ad::Var discriminator_logit(const ad::Var& graph_embeddings,
                            const DiscriminatorParams& discriminator) {
  return dense2(graph_embeddings, discriminator.l1, discriminator.l2);
}

AdversarialObjectives adversarial_objectives_from(const ad::Var& harmonic_embeddings,
                                                  const SubgraphPath& path,
                                                  const ModelState& model) {
  AdversarialObjectives obj;
  {
    // discriminator view: inputs detached so its step leaves the rest alone
    auto d_real = discriminator_logit(ad::detach(harmonic_embeddings),
                                      model.discriminator);
    auto d_fake = discriminator_logit(ad::detach(path.sub_graph_embeddings),
                                      model.discriminator);
    obj.discriminator = ad::add(ad::mean(ad::log_sigmoid(d_real)),
                                ad::mean(ad::log_sigmoid(ad::scale(d_fake, -1.0))));
  }
  {
    auto d_fake =
        discriminator_logit(path.adv_sub_graph_embeddings, model.discriminator);
    if (model.config.non_saturating_gan)
      obj.extractor = ad::scale(ad::mean(ad::log_sigmoid(d_fake)), -1.0);
    else
      obj.extractor = ad::mean(ad::log_sigmoid(ad::scale(d_fake, -1.0)));
  }
  return obj;
}

ad::Var invariant_loss_from(const SubgraphPath& path, const ModelState& model,
                            bool stop_teacher) {
  auto p_sub = classify(path.sub_graph_embeddings, model.encoder);
  auto p_full = classify(path.full_graph_embeddings, model.encoder);
  if (stop_teacher) p_full = ad::detach(p_full);
  return ad::kl_divergence_mean(p_sub, p_full);
}

AdversarialObjectives adversarial_loss(const GraphBatch& harmonic,
                                       const GraphBatch& inharmonic,
                                       const ModelState& model,
                                       std::mt19937_64& gumbel_rng) {
  if (harmonic.graph_count() == 0)
    throw ArgumentError("adversarial_loss: empty harmonic batch");
  if (inharmonic.graph_count() == 0)
    throw ArgumentError("adversarial_loss: empty inharmonic batch");
  auto z_h = readout(message_pass(harmonic, model.encoder), harmonic);
  SubgraphPath path = subgraph_forward(inharmonic, model, gumbel_rng);
  return adversarial_objectives_from(z_h, path, model);
}

ad::Var invariant_loss(const GraphBatch& inharmonic, const ModelState& model,
                       std::mt19937_64& gumbel_rng) {
  if (inharmonic.graph_count() == 0)
    throw ArgumentError("invariant_loss: empty batch");
  SubgraphPath path = subgraph_forward(inharmonic, model, gumbel_rng);
  // both prediction branches stay differentiable here; the training loop
  // freezes the teacher side unless configured otherwise
  return invariant_loss_from(path, model, /*stop_teacher=*/false);
}

ad::Var align_loss(const GraphBatch& harmonic, const GraphBatch& inharmonic,
                   const ModelState& model, std::mt19937_64& gumbel_rng,
                   double adv_weight, double inv_weight) {
  if (harmonic.graph_count() == 0)
    throw ArgumentError("align_loss: empty harmonic batch");
  if (inharmonic.graph_count() == 0)
    throw ArgumentError("align_loss: empty inharmonic batch");
  auto z_h = readout(message_pass(harmonic, model.encoder), harmonic);
  SubgraphPath path = subgraph_forward(inharmonic, model, gumbel_rng);
  auto obj = adversarial_objectives_from(z_h, path, model);
  auto inv = invariant_loss_from(path, model, !model.config.inv_live_teacher);
  return ad::add(ad::scale(obj.extractor, adv_weight), ad::scale(inv, inv_weight));
}

}  // namespace rna
