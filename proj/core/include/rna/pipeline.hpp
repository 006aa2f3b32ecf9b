#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "rna/config.hpp"
#include "rna/graph_data.hpp"
#include "rna/model.hpp"

namespace rna {

struct EpochMetrics {
  int repeat = 0;
  int epoch = 0;  // 1-based
  double target_accuracy = -1.0;  // -1 when the target has no labels
  double loss_ssr = 0.0;
  double loss_sup = 0.0;
  double loss_adv = 0.0;   // extractor-side objective
  double loss_inv = 0.0;
  double loss_disc = 0.0;  // discriminator objective (ascended)
  int harmonic_size = 0;
  int confident_size = 0;
};

struct MetricsReport {
  std::vector<EpochMetrics> epochs;
  std::vector<double> repeat_baselines;   // source-only accuracy per repeat
  std::vector<double> repeat_accuracies;  // adapted accuracy per repeat
  double baseline_mean = -1.0, baseline_std = 0.0;
  double mean_accuracy = -1.0, std_accuracy = 0.0;

  std::string to_csv() const;
};

/// Fraction of graphs whose argmax prediction equals the label.
double evaluate(const ModelState& model, const GraphDataset& dataset);

/// Source-free adaptation of a pretrained model on an unlabeled target set
/// (labels, when present, feed only the reported per-epoch accuracy).
/// Mutates the model in place and returns the per-epoch metrics.
MetricsReport adapt(ModelState& model, const GraphDataset& target,
                    const AdaptConfig& config);

/// Full protocol: per repeat seed, pretrain on source, evaluate the frozen
/// source-only baseline, adapt on target, evaluate. Reports mean and std
/// over repeats.
MetricsReport run_benchmark(const GraphDataset& source, const GraphDataset& target,
                            const AdaptConfig& config, int repeats = 5);

// Checkpointing: a single binary stream of named parameter arrays (values
// plus optimizer moments) and the config used. Round-trips bit-exactly.
void save_model(const ModelState& model, std::ostream& out);
void save_model(const ModelState& model, const std::filesystem::path& path);
ModelState load_model(std::istream& in);
ModelState load_model(const std::filesystem::path& path);

/// Deep copy through the checkpoint codec.
ModelState clone_model(const ModelState& model);

/// Per-graph embeddings as CSV (graph index, label, embedding columns).
void dump_embeddings(const ModelState& model, const GraphDataset& dataset,
                     const std::filesystem::path& path);

}  // namespace rna
