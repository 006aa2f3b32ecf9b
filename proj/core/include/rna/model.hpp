#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "rna/autodiff.hpp"
#include "rna/config.hpp"

namespace rna {

struct DenseLayer {
  ad::Var W;  // in x out
  ad::Var b;  // 1 x out
};

/// Named trainable parameters with per-parameter Adam state.
class ParamStore {
 public:
  struct Entry {
    std::string name;
    ad::Var var;
    Eigen::MatrixXd m, v;  // first/second moment estimates
    long t = 0;            // per-parameter step counter (bias correction)
  };

  ad::Var add(const std::string& name, Eigen::MatrixXd init);
  void zero_grads();
  /// One Adam update over the given entry indices; consumes and zeroes their
  /// gradients. Entries whose gradient was never touched see a zero gradient.
  void adam_step(const std::vector<std::size_t>& group, double lr,
                 double weight_decay = 0.0, double beta1 = 0.9,
                 double beta2 = 0.999, double eps = 1e-8);

  std::vector<Entry>& entries() { return entries_; }
  const std::vector<Entry>& entries() const { return entries_; }
  std::size_t index_of(const std::string& name) const;

 private:
  std::vector<Entry> entries_;
};

/// Message passing stack and classification head.
struct EncoderParams {
  std::vector<DenseLayer> layers;
  DenseLayer head;
  int in_dim = 0;
  int hidden_dim = 0;
  int num_classes = 0;
};

/// Edge scorer: concatenated endpoint embeddings (2*hidden) -> one logit.
struct ExtractorParams {
  DenseLayer l1, l2;
};

/// Domain discriminator: graph embedding (hidden) -> scalar probability.
struct DiscriminatorParams {
  DenseLayer l1, l2;
};

struct ModelState {
  AdaptConfig config;
  int in_dim = 0;
  int num_classes = 0;
  int epoch = 0;          // adaptation epochs completed
  bool pretrained = false;
  // node-label alphabet behind the source one-hot block, when known; lets a
  // target dataset over a sub-alphabet be re-encoded to fit the model
  std::vector<long> node_label_values;

  ParamStore params;
  EncoderParams encoder;
  ExtractorParams extractor;
  DiscriminatorParams discriminator;

  // parameter groups (indices into params) per optimizer
  std::vector<std::size_t> encoder_group;        // encoder + classifier head
  std::vector<std::size_t> extractor_group;
  std::vector<std::size_t> discriminator_group;
  std::vector<std::size_t> main_group;           // encoder_group + extractor_group

  ModelState() = default;
  // parameters are shared_ptr nodes; a member-wise copy would alias them
  ModelState(const ModelState&) = delete;
  ModelState& operator=(const ModelState&) = delete;
  ModelState(ModelState&&) = default;
  ModelState& operator=(ModelState&&) = default;
};

/// Fresh model with Glorot-uniform weights drawn from the config seed.
ModelState init_model(const AdaptConfig& config, int in_dim, int num_classes);

}  // namespace rna
