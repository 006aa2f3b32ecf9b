#pragma once

#include <Eigen/Dense>
#include <random>
#include <vector>

#include "rna/autodiff.hpp"
#include "rna/graph_data.hpp"
#include "rna/model.hpp"

namespace rna {

/// One logit per undirected batch edge: the extractor MLP applied to
/// [h_u ; h_v], symmetrized by averaging with [h_v ; h_u].
ad::Var edge_logits(const GraphBatch& batch, const ad::Var& node_embeddings,
                    const ExtractorParams& extractor);

struct SampledAdjacency {
  ad::Var soft;                    // E x 1, relaxed keep probabilities
  std::vector<std::uint8_t> hard;  // E, keep mask (soft > 0.5)
};

/// Relaxed Bernoulli core: sigmoid((logit + noise) / temperature) where
/// noise is the difference of two standard Gumbel draws.
Eigen::VectorXd gumbel_sigmoid_soft(const Eigen::VectorXd& logits,
                                    const Eigen::VectorXd& noise,
                                    double temperature);

/// One logistic noise value (difference of two Gumbel draws) per row.
Eigen::MatrixXd draw_gumbel_noise(Eigen::Index count, std::mt19937_64& rng);

/// Relax each logit against caller-supplied noise. The hard mask is the
/// 0.5-threshold of the soft values.
SampledAdjacency gumbel_sigmoid_with_noise(const ad::Var& logits,
                                           const Eigen::MatrixXd& noise,
                                           double temperature);

/// Draw fresh Gumbel noise from `rng` and relax each logit.
SampledAdjacency gumbel_sigmoid_sample(const ad::Var& logits, double temperature,
                                       std::mt19937_64& rng);

/// Convenience overload matching the operation contract: seeds its own
/// generator.
SampledAdjacency gumbel_sigmoid_sample(const ad::Var& logits, double temperature,
                                       std::uint64_t seed);

/// Same node set and features; keeps exactly the masked-in edges. If every
/// edge was dropped, the single highest-soft edge is retained.
Graph extract_subgraph(const Graph& graph, const std::vector<std::uint8_t>& hard,
                       const Eigen::VectorXd& soft);

/// Inharmonic-side forward: full-graph embeddings, sampled edge mask, and two
/// views of the masked second pass sharing that mask. The live view carries
/// encoder gradients and feeds the invariance term; the adversarial view
/// freezes the encoder so the fooling objective trains the edge extractor
/// against the discriminator only (unless adv_train_encoder is set, in which
/// case both views coincide).
struct SubgraphPath {
  ad::Var full_node_embeddings;
  ad::Var full_graph_embeddings;
  ad::Var logits;
  SampledAdjacency mask;           // hard mask already degeneracy-guarded per graph
  ad::Var sub_graph_embeddings;        // live encoder
  ad::Var adv_sub_graph_embeddings;    // encoder treated as fixed features
};
SubgraphPath subgraph_forward(const GraphBatch& inharmonic, const ModelState& model,
                              std::mt19937_64& gumbel_rng);

/// Discriminator pre-sigmoid score per graph embedding row.
ad::Var discriminator_logit(const ad::Var& graph_embeddings,
                            const DiscriminatorParams& discriminator);

struct AdversarialObjectives {
  ad::Var discriminator;  // E[log D(G_h)] + E[log(1 - D(f(G_i)))], maximized by D
  ad::Var extractor;      // the fooling objective, minimized by the extractor
};

/// Objectives over an already-built subgraph path (shared-sample form used
/// by the training loop). With `stop_teacher` the whole-graph prediction is
/// detached, so only the subgraph branch receives the consistency gradient.
AdversarialObjectives adversarial_objectives_from(const ad::Var& harmonic_embeddings,
                                                  const SubgraphPath& path,
                                                  const ModelState& model);
ad::Var invariant_loss_from(const SubgraphPath& path, const ModelState& model,
                            bool stop_teacher);

/// Builds both adversarial objectives on one shared subgraph sample. The
/// discriminator objective sees detached embeddings (its step must not move
/// the encoder or extractor); the extractor objective is live.
AdversarialObjectives adversarial_loss(const GraphBatch& harmonic,
                                       const GraphBatch& inharmonic,
                                       const ModelState& model,
                                       std::mt19937_64& gumbel_rng);

/// Mean KL(p_subgraph || p_full) over the inharmonic batch.
ad::Var invariant_loss(const GraphBatch& inharmonic, const ModelState& model,
                       std::mt19937_64& gumbel_rng);

/// adv_weight * extractor objective + inv_weight * invariant loss.
ad::Var align_loss(const GraphBatch& harmonic, const GraphBatch& inharmonic,
                   const ModelState& model, std::mt19937_64& gumbel_rng,
                   double adv_weight, double inv_weight);

}  // namespace rna
