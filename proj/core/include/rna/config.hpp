#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

namespace rna {

/// Pipeline component switches used by the ablation harness.
enum class Ablation {
  kNone = 0,
  kNoSsr,           // drop the seriation ranking loss
  kConfidenceOnly,  // no harmonic/inharmonic partition, no subgraph extractor
  kNoAlign,         // keep the partition, drop adversarial + invariant learning
  kNoFilter,        // pseudo-label every sample, no multi-view filtering
};

std::string ablation_name(Ablation a);
Ablation ablation_from_name(const std::string& name);

struct AdaptConfig {
  double rho = 0.4;   // harmonic set ratio
  double tau = 0.95;  // pseudo-label confidence threshold
  double learning_rate = 0.001;
  int batch_size = 128;
  int pretrain_epochs = 100;
  int adapt_epochs = 50;
  int hidden_dim = 128;
  int num_layers = 2;
  int k_clusters = 0;  // 0: use the class count
  double ssr_weight = 1.0;
  double sup_weight = 1.0;
  double adv_weight = 1.0;
  double inv_weight = 1.0;
  double gumbel_temperature = 0.5;
  double lambda_bb = 1.0;  // blackbox ranking interpolation strength
  double dropout = 0.0;
  double weight_decay = 0.0;
  std::uint64_t seed = 1;
  bool non_saturating_gan = false;
  bool paper_exact_norm = false;    // normalize the pseudo-label loss by |H| instead of |C|
  bool soft_subgraph = false;       // relaxed edge weights instead of straight-through
  // Route the fooling objective's gradient into the encoder as well as the
  // edge extractor. Off by default: the adversarial game trains the
  // extractor against the discriminator, and the encoder follows through
  // the invariance term only, which keeps adaptation stable at unit loss
  // weights.
  bool adv_train_encoder = false;
  // Let the invariance term also pull the whole-graph prediction toward the
  // subgraph prediction. Off by default: the full-graph side acts as a
  // frozen teacher, so adversarially sampled subgraphs cannot drag the
  // classifier with them.
  bool inv_live_teacher = false;
  Ablation ablation = Ablation::kNone;

  void validate() const;
};

/// Parses one `key = value` assignment into the config. Unknown keys throw.
void apply_config_entry(AdaptConfig& config, const std::string& key,
                        const std::string& value);

/// Flat key/value text file: one `key = value` per line, '#' comments.
AdaptConfig load_config_file(const std::filesystem::path& path);

std::string config_to_string(const AdaptConfig& config);

}  // namespace rna
