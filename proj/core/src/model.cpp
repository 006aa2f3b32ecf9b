#include "rna/model.hpp"

#include <cmath>

#include "rna/common.hpp"

namespace rna {

ad::Var ParamStore::add(const std::string& name, Eigen::MatrixXd init) {
  for (const auto& e : entries_)
    if (e.name == name) throw ConfigError("duplicate parameter name: " + name);
  Entry entry;
  entry.name = name;
  entry.var = ad::parameter(std::move(init));
  entry.m = Eigen::MatrixXd::Zero(entry.var->value.rows(), entry.var->value.cols());
  entry.v = entry.m;
  entries_.push_back(std::move(entry));
  return entries_.back().var;
}

void ParamStore::zero_grads() {
  for (auto& e : entries_) e.var->zero_grad();
}

void ParamStore::adam_step(const std::vector<std::size_t>& group, double lr,
                           double weight_decay, double beta1, double beta2,
                           double eps) {
  for (std::size_t idx : group) {
    Entry& e = entries_.at(idx);
    Eigen::MatrixXd g = e.var->grad.size() != 0
                            ? e.var->grad
                            : Eigen::MatrixXd::Zero(e.var->value.rows(),
                                                    e.var->value.cols());
    if (weight_decay != 0.0) g += weight_decay * e.var->value;
    e.t += 1;
    e.m = beta1 * e.m + (1.0 - beta1) * g;
    e.v = beta2 * e.v + (1.0 - beta2) * g.cwiseProduct(g);
    const double mc = 1.0 - std::pow(beta1, static_cast<double>(e.t));
    const double vc = 1.0 - std::pow(beta2, static_cast<double>(e.t));
    e.var->value.array() -=
        lr * (e.m.array() / mc) / ((e.v.array() / vc).sqrt() + eps);
    e.var->zero_grad();
  }
}

std::size_t ParamStore::index_of(const std::string& name) const {
  for (std::size_t i = 0; i < entries_.size(); ++i)
    if (entries_[i].name == name) return i;
  throw ConfigError("unknown parameter: " + name);
}

namespace {

Eigen::MatrixXd glorot(int rows, int cols, std::mt19937_64& rng) {
  const double limit = std::sqrt(6.0 / (rows + cols));
  std::uniform_real_distribution<double> unif(-limit, limit);
  Eigen::MatrixXd m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = unif(rng);
  return m;
}

DenseLayer add_dense(ParamStore& store, const std::string& name, int in, int out,
                     std::mt19937_64& rng, std::vector<std::size_t>& group) {
  DenseLayer layer;
  layer.W = store.add(name + ".W", glorot(in, out, rng));
  group.push_back(store.entries().size() - 1);
  layer.b = store.add(name + ".b", Eigen::MatrixXd::Zero(1, out));
  group.push_back(store.entries().size() - 1);
  return layer;
}

}  // namespace

ModelState init_model(const AdaptConfig& config, int in_dim, int num_classes) {
  config.validate();
  if (in_dim < 1) throw ConfigError("init_model: in_dim must be >= 1");
  if (num_classes < 2) throw ConfigError("init_model: need at least 2 classes");

  ModelState model;
  model.config = config;
  model.in_dim = in_dim;
  model.num_classes = num_classes;

  auto rng = substream(config.seed, Stream::kParamInit);
  const int h = config.hidden_dim;

  model.encoder.in_dim = in_dim;
  model.encoder.hidden_dim = h;
  model.encoder.num_classes = num_classes;
  for (int l = 0; l < config.num_layers; ++l) {
    const int in = l == 0 ? in_dim : h;
    model.encoder.layers.push_back(add_dense(model.params, "enc.l" + std::to_string(l),
                                             in, h, rng, model.encoder_group));
  }
  model.encoder.head =
      add_dense(model.params, "enc.head", h, num_classes, rng, model.encoder_group);

  model.extractor.l1 =
      add_dense(model.params, "ext.l1", 2 * h, h, rng, model.extractor_group);
  model.extractor.l2 = add_dense(model.params, "ext.l2", h, 1, rng, model.extractor_group);

  model.discriminator.l1 =
      add_dense(model.params, "dis.l1", h, h, rng, model.discriminator_group);
  model.discriminator.l2 =
      add_dense(model.params, "dis.l2", h, 1, rng, model.discriminator_group);

  model.main_group = model.encoder_group;
  model.main_group.insert(model.main_group.end(), model.extractor_group.begin(),
                          model.extractor_group.end());
  return model;
}

}  // namespace rna
