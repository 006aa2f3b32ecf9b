#include "rna/pipeline.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>

#include "rna/align.hpp"
#include "rna/common.hpp"
#include "rna/encoder.hpp"
#include "rna/harmonic.hpp"
#include "rna/pseudolabel.hpp"
#include "rna/seriation.hpp"

namespace rna {

namespace {

constexpr std::uint32_t kCheckpointMagic = 0x524e4131;  // "RNA1"
constexpr std::uint64_t kAdaptShuffleTag = 0x61646170ULL;
constexpr std::uint64_t kPartitionTag = 0x70617274ULL;

std::string format_double(double v) {
  std::ostringstream os;
  os.precision(std::numeric_limits<double>::max_digits10);
  os << v;
  return os.str();
}

Eigen::MatrixXd softmax_rows_plain(const Eigen::MatrixXd& logits) {
  Eigen::MatrixXd p = logits;
  for (Eigen::Index i = 0; i < p.rows(); ++i) {
    const double mx = p.row(i).maxCoeff();
    p.row(i) = (p.row(i).array() - mx).exp();
    p.row(i) /= p.row(i).sum();
  }
  return p;
}

struct TermAccumulator {
  double weighted_sum = 0.0;
  long weight = 0;
  void add(double value, long w) {
    weighted_sum += value * static_cast<double>(w);
    weight += w;
  }
  double mean() const { return weight > 0 ? weighted_sum / static_cast<double>(weight) : 0.0; }
};

}  // namespace

std::string MetricsReport::to_csv() const {
  std::ostringstream os;
  os << "repeat,epoch,target_accuracy,loss_ssr,loss_sup,loss_adv,loss_inv,"
        "loss_disc,harmonic_size,confident_size\n";
  for (const auto& e : epochs) {
    os << e.repeat << ',' << e.epoch << ',' << format_double(e.target_accuracy) << ','
       << format_double(e.loss_ssr) << ',' << format_double(e.loss_sup) << ','
       << format_double(e.loss_adv) << ',' << format_double(e.loss_inv) << ','
       << format_double(e.loss_disc) << ',' << e.harmonic_size << ','
       << e.confident_size << '\n';
  }
  for (std::size_t r = 0; r < repeat_accuracies.size(); ++r) {
    os << "final," << r << ','
       << (r < repeat_baselines.size() ? format_double(repeat_baselines[r]) : "") << ','
       << format_double(repeat_accuracies[r]) << '\n';
  }
  if (mean_accuracy >= 0.0) {
    os << "summary,mean," << format_double(mean_accuracy) << ",std,"
       << format_double(std_accuracy) << ",baseline_mean,"
       << format_double(baseline_mean) << ",baseline_std,"
       << format_double(baseline_std) << '\n';
  }
  return os.str();
}

double evaluate(const ModelState& model, const GraphDataset& dataset) {
  if (dataset.graphs.empty()) throw ArgumentError("evaluate: empty dataset");
  if (!dataset.fully_labeled())
    throw ArgumentError("evaluate: dataset must be fully labeled");
  if (dataset.feature_dim != model.in_dim)
    throw ConfigError("evaluate: dataset feature dim does not match the model");
  const Eigen::MatrixXd probs = predict_dataset(dataset, model);
  long correct = 0;
  for (Eigen::Index i = 0; i < probs.rows(); ++i) {
    Eigen::Index argmax = 0;
    probs.row(i).maxCoeff(&argmax);
    if (static_cast<int>(argmax) == *dataset.graphs[i].label) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(probs.rows());
}

MetricsReport adapt(ModelState& model, const GraphDataset& target,
                    const AdaptConfig& config_in) {
  AdaptConfig config = config_in;
  // architecture is fixed by the pretrained model; only training knobs come
  // from the adapt-time config
  config.hidden_dim = model.config.hidden_dim;
  config.num_layers = model.config.num_layers;
  config.validate();
  if (!model.pretrained) throw ArgumentError("adapt: model has not been pretrained");
  if (target.graphs.size() < 2)
    throw ArgumentError("adapt: target must contain at least 2 graphs");
  if (target.feature_dim != model.in_dim)
    throw ConfigError("adapt: target feature dim does not match the model");
  model.config = config;

  const bool partition_on = config.ablation != Ablation::kConfidenceOnly;
  const bool align_allowed = config.ablation == Ablation::kNone ||
                             config.ablation == Ablation::kNoSsr ||
                             config.ablation == Ablation::kNoFilter;
  const bool use_ssr = config.ssr_weight != 0.0 && config.ablation != Ablation::kNoSsr;
  const bool use_sup = config.sup_weight != 0.0;
  const bool use_adv = align_allowed && config.adv_weight != 0.0;
  const bool use_inv = align_allowed && config.inv_weight != 0.0;
  const bool use_align = use_adv || use_inv;
  const bool multi_view_filter = config.ablation != Ablation::kNoFilter;

  const bool labeled = target.fully_labeled();
  const int n = static_cast<int>(target.graphs.size());
  bool warned_degenerate = false;

  MetricsReport report;
  for (int epoch = 0; epoch < config.adapt_epochs; ++epoch) {
    // Algorithm step 1: regenerate the harmonic / inharmonic split
    std::vector<char> harmonic_mask(n, 1);
    int harmonic_size = n;
    if (partition_on) {
      DomainPartition part = partition_harmonic(
          target, model, config.rho,
          splitmix64(config.seed ^ splitmix64(kPartitionTag ^ splitmix64(epoch))));
      std::fill(harmonic_mask.begin(), harmonic_mask.end(), 0);
      for (int idx : part.harmonic) harmonic_mask[idx] = 1;
      harmonic_size = static_cast<int>(part.harmonic.size());
      if (harmonic_size == 0 && use_align)
        std::cerr << "[adapt] epoch " << epoch + 1
                  << ": empty harmonic set, alignment skipped\n";
    }

    auto batches = make_batches(
        target, config.batch_size,
        splitmix64(config.seed ^ splitmix64(kAdaptShuffleTag ^ splitmix64(epoch))));
    auto gumbel_rng = substream(config.seed, Stream::kGumbel, epoch);

    TermAccumulator acc_ssr, acc_sup, acc_adv, acc_inv, acc_disc;
    long confident_total = 0;

    for (const auto& batch : batches) {
      model.params.zero_grads();
      const int b = batch.graph_count();

      std::vector<int> harmonic_rows, inharmonic_rows;
      std::vector<int> harmonic_ids, inharmonic_ids;
      for (int i = 0; i < b; ++i) {
        if (harmonic_mask[batch.graph_indices[i]]) {
          harmonic_rows.push_back(i);
          harmonic_ids.push_back(batch.graph_indices[i]);
        } else {
          inharmonic_rows.push_back(i);
          inharmonic_ids.push_back(batch.graph_indices[i]);
        }
      }

      auto node_embs = message_pass(batch, model.encoder);
      auto graph_embs = readout(node_embs, batch);
      auto logits = classify_logits(graph_embs, model.encoder);

      // alignment operates on the batch's own harmonic / inharmonic members
      const bool batch_align =
          use_align && !harmonic_rows.empty() && !inharmonic_rows.empty();
      SubgraphPath sub_path;
      ad::Var z_harmonic;
      if (batch_align) {
        GraphBatch inh_batch = assemble_batch(target, inharmonic_ids);
        sub_path = subgraph_forward(inh_batch, model, gumbel_rng);
        z_harmonic = ad::gather_rows(graph_embs, harmonic_rows);

        if (use_adv) {
          // discriminator step on detached embeddings, one per extractor step
          auto d_obj = adversarial_objectives_from(z_harmonic, sub_path, model);
          auto d_loss = ad::scale(d_obj.discriminator, -1.0);
          ad::backward(d_loss);
          model.params.adam_step(model.discriminator_group, config.learning_rate,
                                 config.weight_decay);
          acc_disc.add(d_obj.discriminator->scalar(), inharmonic_rows.size());
        }
      }

      // main objective
      ad::Var total;
      auto add_term = [&total](const ad::Var& term, double weight) {
        auto scaled = ad::scale(term, weight);
        total = total ? ad::add(total, scaled) : scaled;
      };

      if (use_ssr) {
        auto sim = ad::cosine_similarity(graph_embs);
        FiedlerInfo fiedler;
        const std::vector<int> ranking = fiedler_ranking(
            laplacian(similarity_matrix(graph_embs->value)), &fiedler);
        if (fiedler.degenerate && !warned_degenerate) {
          std::cerr << "[adapt] degenerate Fiedler eigenvalue in a batch; "
                       "the seriation ranking is one of several valid choices\n";
          warned_degenerate = true;
        }
        auto loss_ssr = ssr_loss(sim, ranking, config.lambda_bb);
        add_term(loss_ssr, config.ssr_weight);
        acc_ssr.add(loss_ssr->scalar(), b);
      }

      if (use_sup) {
        std::vector<int> eligible;
        if (multi_view_filter) {
          eligible = harmonic_rows;
        } else {
          eligible.resize(b);
          for (int i = 0; i < b; ++i) eligible[i] = i;
        }
        if (!eligible.empty()) {
          Eigen::MatrixXd elig_logits(eligible.size(), model.num_classes);
          for (size_t k = 0; k < eligible.size(); ++k)
            elig_logits.row(k) = logits->value.row(eligible[k]);
          const Eigen::MatrixXd probs = softmax_rows_plain(elig_logits);
          ConfidentSet confident;
          if (multi_view_filter) {
            confident = confident_filter(probs, config.tau);
          } else {
            for (Eigen::Index i = 0; i < probs.rows(); ++i) {
              Eigen::Index argmax = 0;
              const double c = probs.row(i).maxCoeff(&argmax);
              confident.rows.push_back(static_cast<int>(i));
              confident.labels.push_back(static_cast<int>(argmax));
              confident.confidence.push_back(c);
            }
          }
          confident_total += static_cast<long>(confident.size());
          if (!confident.empty()) {
            std::vector<int> sel_rows;
            for (int r : confident.rows) sel_rows.push_back(eligible[r]);
            const double denom = config.paper_exact_norm
                                     ? static_cast<double>(eligible.size())
                                     : static_cast<double>(confident.size());
            auto loss_sup = ad::cross_entropy(logits, sel_rows, confident.labels, denom);
            add_term(loss_sup, config.sup_weight);
            acc_sup.add(loss_sup->scalar(), static_cast<long>(confident.size()));
          }
        }
      }

      if (batch_align) {
        auto obj = adversarial_objectives_from(z_harmonic, sub_path, model);
        if (use_adv) {
          add_term(obj.extractor, config.adv_weight);
          acc_adv.add(obj.extractor->scalar(), inharmonic_rows.size());
        }
        if (use_inv) {
          auto inv =
              invariant_loss_from(sub_path, model, !config.inv_live_teacher);
          add_term(inv, config.inv_weight);
          acc_inv.add(inv->scalar(), inharmonic_rows.size());
        }
      }

      if (total) {
        ad::backward(total);
        model.params.adam_step(model.main_group, config.learning_rate,
                               config.weight_decay);
      }
      model.params.zero_grads();
    }

    model.epoch += 1;
    EpochMetrics em;
    em.epoch = model.epoch;
    em.target_accuracy = labeled ? evaluate(model, target) : -1.0;
    em.loss_ssr = acc_ssr.mean();
    em.loss_sup = acc_sup.mean();
    em.loss_adv = acc_adv.mean();
    em.loss_inv = acc_inv.mean();
    em.loss_disc = acc_disc.mean();
    em.harmonic_size = harmonic_size;
    em.confident_size = static_cast<int>(confident_total);
    report.epochs.push_back(em);
  }
  return report;
}

MetricsReport run_benchmark(const GraphDataset& source, const GraphDataset& target,
                            const AdaptConfig& config, int repeats) {
  if (repeats < 1) throw ArgumentError("run_benchmark: repeats must be >= 1");
  MetricsReport report;
  for (int r = 0; r < repeats; ++r) {
    AdaptConfig cfg = config;
    cfg.seed = config.seed + static_cast<std::uint64_t>(r);
    ModelState model = pretrain_source(source, cfg);
    report.repeat_baselines.push_back(evaluate(model, target));
    MetricsReport run = adapt(model, target, cfg);
    for (auto e : run.epochs) {
      e.repeat = r;
      report.epochs.push_back(e);
    }
    report.repeat_accuracies.push_back(evaluate(model, target));
  }
  auto mean_std = [](const std::vector<double>& xs) {
    double mean = 0.0;
    for (double x : xs) mean += x;
    mean /= static_cast<double>(xs.size());
    double var = 0.0;
    for (double x : xs) var += (x - mean) * (x - mean);
    var /= static_cast<double>(xs.size());
    return std::pair<double, double>(mean, std::sqrt(var));
  };
  std::tie(report.mean_accuracy, report.std_accuracy) =
      mean_std(report.repeat_accuracies);
  std::tie(report.baseline_mean, report.baseline_std) =
      mean_std(report.repeat_baselines);
  return report;
}

// ---------------------------------------------------------------------------
// checkpoint codec

namespace {

template <typename T>
void write_pod(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw FormatError("checkpoint: truncated stream");
  return v;
}

void write_string(std::ostream& out, const std::string& s) {
  write_pod<std::uint64_t>(out, s.size());
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string read_string(std::istream& in) {
  const auto len = read_pod<std::uint64_t>(in);
  std::string s(len, '\0');
  in.read(s.data(), static_cast<std::streamsize>(len));
  if (!in) throw FormatError("checkpoint: truncated string");
  return s;
}

void write_matrix(std::ostream& out, const Eigen::MatrixXd& m) {
  write_pod<std::int64_t>(out, m.rows());
  write_pod<std::int64_t>(out, m.cols());
  out.write(reinterpret_cast<const char*>(m.data()),
            static_cast<std::streamsize>(sizeof(double) * m.size()));
}

Eigen::MatrixXd read_matrix(std::istream& in) {
  const auto rows = read_pod<std::int64_t>(in);
  const auto cols = read_pod<std::int64_t>(in);
  if (rows < 0 || cols < 0) throw FormatError("checkpoint: negative matrix shape");
  Eigen::MatrixXd m(rows, cols);
  in.read(reinterpret_cast<char*>(m.data()),
          static_cast<std::streamsize>(sizeof(double) * m.size()));
  if (!in) throw FormatError("checkpoint: truncated matrix");
  return m;
}

void write_config(std::ostream& out, const AdaptConfig& c) {
  write_pod(out, c.rho);
  write_pod(out, c.tau);
  write_pod(out, c.learning_rate);
  write_pod<std::int64_t>(out, c.batch_size);
  write_pod<std::int64_t>(out, c.pretrain_epochs);
  write_pod<std::int64_t>(out, c.adapt_epochs);
  write_pod<std::int64_t>(out, c.hidden_dim);
  write_pod<std::int64_t>(out, c.num_layers);
  write_pod<std::int64_t>(out, c.k_clusters);
  write_pod(out, c.ssr_weight);
  write_pod(out, c.sup_weight);
  write_pod(out, c.adv_weight);
  write_pod(out, c.inv_weight);
  write_pod(out, c.gumbel_temperature);
  write_pod(out, c.lambda_bb);
  write_pod(out, c.dropout);
  write_pod(out, c.weight_decay);
  write_pod<std::uint64_t>(out, c.seed);
  write_pod<std::uint8_t>(out, c.non_saturating_gan ? 1 : 0);
  write_pod<std::uint8_t>(out, c.paper_exact_norm ? 1 : 0);
  write_pod<std::uint8_t>(out, c.soft_subgraph ? 1 : 0);
  write_pod<std::uint8_t>(out, c.adv_train_encoder ? 1 : 0);
  write_pod<std::uint8_t>(out, c.inv_live_teacher ? 1 : 0);
  write_pod<std::uint8_t>(out, static_cast<std::uint8_t>(c.ablation));
}

AdaptConfig read_config(std::istream& in) {
  AdaptConfig c;
  c.rho = read_pod<double>(in);
  c.tau = read_pod<double>(in);
  c.learning_rate = read_pod<double>(in);
  c.batch_size = static_cast<int>(read_pod<std::int64_t>(in));
  c.pretrain_epochs = static_cast<int>(read_pod<std::int64_t>(in));
  c.adapt_epochs = static_cast<int>(read_pod<std::int64_t>(in));
  c.hidden_dim = static_cast<int>(read_pod<std::int64_t>(in));
  c.num_layers = static_cast<int>(read_pod<std::int64_t>(in));
  c.k_clusters = static_cast<int>(read_pod<std::int64_t>(in));
  c.ssr_weight = read_pod<double>(in);
  c.sup_weight = read_pod<double>(in);
  c.adv_weight = read_pod<double>(in);
  c.inv_weight = read_pod<double>(in);
  c.gumbel_temperature = read_pod<double>(in);
  c.lambda_bb = read_pod<double>(in);
  c.dropout = read_pod<double>(in);
  c.weight_decay = read_pod<double>(in);
  c.seed = read_pod<std::uint64_t>(in);
  c.non_saturating_gan = read_pod<std::uint8_t>(in) != 0;
  c.paper_exact_norm = read_pod<std::uint8_t>(in) != 0;
  c.soft_subgraph = read_pod<std::uint8_t>(in) != 0;
  c.adv_train_encoder = read_pod<std::uint8_t>(in) != 0;
  c.inv_live_teacher = read_pod<std::uint8_t>(in) != 0;
  c.ablation = static_cast<Ablation>(read_pod<std::uint8_t>(in));
  return c;
}

}  // namespace

void save_model(const ModelState& model, std::ostream& out) {
  write_pod(out, kCheckpointMagic);
  write_pod<std::uint32_t>(out, 1);  // version
  write_config(out, model.config);
  write_pod<std::int64_t>(out, model.in_dim);
  write_pod<std::int64_t>(out, model.num_classes);
  write_pod<std::int64_t>(out, model.epoch);
  write_pod<std::uint8_t>(out, model.pretrained ? 1 : 0);
  write_pod<std::uint64_t>(out, model.node_label_values.size());
  for (long v : model.node_label_values) write_pod<std::int64_t>(out, v);
  write_pod<std::uint64_t>(out, model.params.entries().size());
  for (const auto& e : model.params.entries()) {
    write_string(out, e.name);
    write_matrix(out, e.var->value);
    write_matrix(out, e.m);
    write_matrix(out, e.v);
    write_pod<std::int64_t>(out, e.t);
  }
  if (!out) throw LoadError("checkpoint: write failed");
}

void save_model(const ModelState& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw LoadError("cannot open checkpoint for writing: " + path.string());
  save_model(model, out);
}

ModelState load_model(std::istream& in) {
  if (read_pod<std::uint32_t>(in) != kCheckpointMagic)
    throw FormatError("checkpoint: bad magic");
  if (read_pod<std::uint32_t>(in) != 1)
    throw FormatError("checkpoint: unsupported version");
  const AdaptConfig config = read_config(in);
  const int in_dim = static_cast<int>(read_pod<std::int64_t>(in));
  const int num_classes = static_cast<int>(read_pod<std::int64_t>(in));
  const int epoch = static_cast<int>(read_pod<std::int64_t>(in));
  const bool pretrained = read_pod<std::uint8_t>(in) != 0;

  ModelState model = init_model(config, in_dim, num_classes);
  model.epoch = epoch;
  model.pretrained = pretrained;
  const auto alphabet_size = read_pod<std::uint64_t>(in);
  model.node_label_values.reserve(alphabet_size);
  for (std::uint64_t i = 0; i < alphabet_size; ++i)
    model.node_label_values.push_back(static_cast<long>(read_pod<std::int64_t>(in)));
  const auto count = read_pod<std::uint64_t>(in);
  if (count != model.params.entries().size())
    throw FormatError("checkpoint: parameter count mismatch");
  for (std::uint64_t i = 0; i < count; ++i) {
    const std::string name = read_string(in);
    auto& entry = model.params.entries().at(model.params.index_of(name));
    Eigen::MatrixXd value = read_matrix(in);
    if (value.rows() != entry.var->value.rows() ||
        value.cols() != entry.var->value.cols())
      throw FormatError("checkpoint: shape mismatch for " + name);
    entry.var->value = std::move(value);
    entry.m = read_matrix(in);
    entry.v = read_matrix(in);
    entry.t = read_pod<std::int64_t>(in);
  }
  return model;
}

ModelState load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LoadError("cannot open checkpoint: " + path.string());
  return load_model(in);
}

ModelState clone_model(const ModelState& model) {
  std::stringstream buffer;
  save_model(model, buffer);
  return load_model(buffer);
}

void dump_embeddings(const ModelState& model, const GraphDataset& dataset,
                     const std::filesystem::path& path) {
  const Eigen::MatrixXd z = embed_dataset(dataset, model);
  std::ofstream out(path);
  if (!out) throw LoadError("cannot open " + path.string() + " for writing");
  out << "graph,label";
  for (Eigen::Index c = 0; c < z.cols(); ++c) out << ",e" << c;
  out << '\n';
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    const auto& label = dataset.graphs[i].label;
    out << i << ',' << (label ? std::to_string(*label) : "");
    for (Eigen::Index c = 0; c < z.cols(); ++c)
      out << ',' << format_double(z(i, c));
    out << '\n';
  }
}

}  // namespace rna
