// Command-line front end: density splits, source pretraining, source-free
// adaptation, evaluation, benchmark runs, and the spectral inspection
// subcommands (seriate, partition).

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "rna/align.hpp"
#include "rna/common.hpp"
#include "rna/encoder.hpp"
#include "rna/graph_data.hpp"
#include "rna/harmonic.hpp"
#include "rna/pipeline.hpp"
#include "rna/seriation.hpp"

namespace fs = std::filesystem;

namespace {

struct ConfigCli {
  std::string config_file;
  std::vector<std::string> overrides;  // key=value
};

void attach_config_options(CLI::App* cmd, ConfigCli& cc) {
  cmd->add_option("--config", cc.config_file,
                  "flat key=value config file (keys as in the docs)");
  cmd->add_option("--set", cc.overrides,
                  "config override key=value, repeatable")
      ->take_all();
}

rna::AdaptConfig resolve_config(const ConfigCli& cc) {
  rna::AdaptConfig config;
  if (!cc.config_file.empty()) config = rna::load_config_file(cc.config_file);
  for (const auto& kv : cc.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos)
      throw rna::ArgumentError("--set expects key=value, got '" + kv + "'");
    rna::apply_config_entry(config, kv.substr(0, eq), kv.substr(eq + 1));
  }
  config.validate();
  return config;
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(std::numeric_limits<double>::max_digits10);
  os << v;
  return os.str();
}

Eigen::MatrixXd read_csv_matrix(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw rna::LoadError("cannot open " + path.string());
  std::vector<std::vector<double>> rows;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) {
      try {
        row.push_back(std::stod(field));
      } catch (const std::exception&) {
        throw rna::FormatError(path.string() + ":" + std::to_string(lineno) +
                               ": expected a number, got '" + field + "'");
      }
    }
    if (!rows.empty() && row.size() != rows.front().size())
      throw rna::FormatError(path.string() + ":" + std::to_string(lineno) +
                             ": ragged row");
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw rna::FormatError(path.string() + ": empty matrix");
  Eigen::MatrixXd m(rows.size(), rows.front().size());
  for (size_t i = 0; i < rows.size(); ++i)
    for (size_t j = 0; j < rows[i].size(); ++j) m(i, j) = rows[i][j];
  return m;
}

void write_report(const rna::MetricsReport& report, const std::string& path) {
  if (path.empty()) return;
  std::ofstream out(path);
  if (!out) throw rna::LoadError("cannot write report to " + path);
  out << report.to_csv();
  std::cerr << "report written to " << path << "\n";
}

// Loads a dataset and, when its one-hot layout differs from the model's but
// its label alphabet is covered, re-encodes it onto the model's alphabet.
rna::GraphDataset load_for_model(const std::string& dir, const rna::ModelState& model) {
  rna::GraphDataset ds = rna::load_tud_dataset(dir);
  if (ds.feature_dim != model.in_dim && !model.node_label_values.empty() &&
      ds.node_label_values != model.node_label_values) {
    std::cerr << "re-encoding node labels of " << ds.name
              << " onto the model's alphabet\n";
    ds = rna::remap_node_labels(ds, model.node_label_values);
  }
  return ds;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"source-free graph domain adaptation via spectral seriation "
               "ranking and harmonic subgraph alignment"};
  app.require_subcommand(1);

  // ---- split ----
  std::string split_data, split_out;
  int split_parts = 4;
  auto* split = app.add_subcommand("split", "density-split a dataset into sub-domains");
  split->add_option("--data-dir", split_data, "TU dataset directory")->required();
  split->add_option("--parts", split_parts, "number of sub-domains (default 4)");
  split->add_option("--out", split_out, "output directory")->required();

  // ---- pretrain ----
  std::string pre_source, pre_out, pre_harmonize;
  ConfigCli pre_cfg;
  auto* pretrain = app.add_subcommand("pretrain", "train the classifier on a labeled source");
  pretrain->add_option("--source", pre_source, "source TU dataset directory")->required();
  pretrain->add_option("--out", pre_out, "checkpoint output path")->required();
  pretrain->add_option("--harmonize-with", pre_harmonize,
                       "dataset whose node-label alphabet the model must also "
                       "cover (for later cross-dataset adaptation)");
  attach_config_options(pretrain, pre_cfg);

  // ---- adapt ----
  std::string adapt_model, adapt_target, adapt_out, adapt_report, adapt_dump;
  ConfigCli adapt_cfg;
  auto* adapt_cmd = app.add_subcommand("adapt", "source-free adaptation on an unlabeled target");
  adapt_cmd->add_option("--model", adapt_model, "pretrained checkpoint")->required();
  adapt_cmd->add_option("--target", adapt_target, "target TU dataset directory")->required();
  adapt_cmd->add_option("--out", adapt_out, "adapted checkpoint output path")->required();
  adapt_cmd->add_option("--report", adapt_report, "per-epoch metrics CSV");
  adapt_cmd->add_option("--dump-embeddings", adapt_dump,
                        "write final target embeddings to CSV");
  attach_config_options(adapt_cmd, adapt_cfg);

  // ---- eval ----
  std::string eval_model, eval_data, eval_dump;
  auto* eval_cmd = app.add_subcommand("eval", "accuracy of a checkpoint on a labeled dataset");
  eval_cmd->add_option("--model", eval_model, "checkpoint path")->required();
  eval_cmd->add_option("--dataset", eval_data, "TU dataset directory")->required();
  eval_cmd->add_option("--dump-embeddings", eval_dump, "write embeddings to CSV");

  // ---- bench ----
  std::string bench_source, bench_target, bench_report, bench_dump, bench_disable;
  int bench_repeats = 5;
  ConfigCli bench_cfg;
  auto* bench = app.add_subcommand("bench", "pretrain + adapt + evaluate over repeated seeds");
  bench->add_option("--source", bench_source, "source TU dataset directory")->required();
  bench->add_option("--target", bench_target, "target TU dataset directory")->required();
  bench->add_option("--repeats", bench_repeats, "seeded repeats (default 5)");
  bench->add_option("--report", bench_report, "metrics CSV output");
  bench->add_option("--disable", bench_disable,
                    "ablation: ssr | partition | align | filter");
  bench->add_option("--dump-embeddings", bench_dump,
                    "write final-repeat target embeddings to CSV");
  attach_config_options(bench, bench_cfg);

  // ---- seriate ----
  std::string ser_in, ser_out;
  auto* seriate = app.add_subcommand("seriate", "spectral seriation of a similarity CSV");
  seriate->add_option("--input", ser_in, "n x n similarity matrix CSV")->required();
  seriate->add_option("--output", ser_out, "rank vector CSV (default stdout)");

  // ---- partition ----
  std::string part_model, part_data, part_out;
  double part_rho = 0.4;
  std::uint64_t part_seed = 1;
  auto* partition = app.add_subcommand("partition", "harmonic/inharmonic split of a target set");
  partition->add_option("--model", part_model, "checkpoint path")->required();
  partition->add_option("--dataset,--data-dir", part_data, "TU dataset directory")->required();
  partition->add_option("--rho", part_rho, "harmonic ratio (default 0.4)");
  partition->add_option("--seed", part_seed, "clustering seed");
  partition->add_option("--out", part_out, "CSV output (default stdout)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*split) {
      const rna::GraphDataset ds = rna::load_tud_dataset(split_data);
      const auto parts = rna::density_split(ds, split_parts);
      for (size_t k = 0; k < parts.size(); ++k) {
        const fs::path dir = fs::path(split_out) / (ds.name + "_" + std::to_string(k));
        rna::write_tud_dataset(parts[k], dir);
        std::cout << dir.string() << ": " << parts[k].graphs.size() << " graphs\n";
      }
    } else if (*pretrain) {
      const rna::AdaptConfig config = resolve_config(pre_cfg);
      rna::GraphDataset source = rna::load_tud_dataset(pre_source);
      if (!pre_harmonize.empty()) {
        rna::GraphDataset other = rna::load_tud_dataset(pre_harmonize);
        rna::harmonize_node_labels(source, other);
      }
      std::vector<double> losses;
      rna::ModelState model = rna::pretrain_source(source, config, &losses);
      rna::save_model(model, pre_out);
      std::cout << "pretrained on " << source.graphs.size() << " graphs ("
                << config.pretrain_epochs << " epochs, final loss "
                << (losses.empty() ? 0.0 : losses.back()) << ")\n"
                << "checkpoint: " << pre_out << "\n";
    } else if (*adapt_cmd) {
      const rna::AdaptConfig config = resolve_config(adapt_cfg);
      rna::ModelState model = rna::load_model(adapt_model);
      rna::GraphDataset target = load_for_model(adapt_target, model);
      const rna::MetricsReport report = rna::adapt(model, target, config);
      rna::save_model(model, adapt_out);
      write_report(report, adapt_report);
      if (!adapt_dump.empty()) rna::dump_embeddings(model, target, adapt_dump);
      if (!report.epochs.empty() && report.epochs.back().target_accuracy >= 0)
        std::cout << "final target accuracy: "
                  << fmt(report.epochs.back().target_accuracy) << "\n";
      std::cout << "adapted checkpoint: " << adapt_out << "\n";
    } else if (*eval_cmd) {
      const rna::ModelState model = rna::load_model(eval_model);
      const rna::GraphDataset ds = load_for_model(eval_data, model);
      std::cout << "accuracy: " << fmt(rna::evaluate(model, ds)) << "\n";
      if (!eval_dump.empty()) rna::dump_embeddings(model, ds, eval_dump);
    } else if (*bench) {
      rna::AdaptConfig config = resolve_config(bench_cfg);
      if (!bench_disable.empty())
        config.ablation = rna::ablation_from_name(bench_disable);
      rna::GraphDataset source = rna::load_tud_dataset(bench_source);
      rna::GraphDataset target = rna::load_tud_dataset(bench_target);
      rna::harmonize_node_labels(source, target);
      const rna::MetricsReport report =
          rna::run_benchmark(source, target, config, bench_repeats);
      write_report(report, bench_report);
      std::cout << "source-only baseline: " << fmt(report.baseline_mean) << " +- "
                << fmt(report.baseline_std) << "\n"
                << "adapted:              " << fmt(report.mean_accuracy) << " +- "
                << fmt(report.std_accuracy) << "\n";
      if (!bench_dump.empty()) {
        // re-derive the final repeat's model for the embedding dump
        rna::AdaptConfig last = config;
        last.seed = config.seed + static_cast<std::uint64_t>(bench_repeats - 1);
        rna::ModelState model = rna::pretrain_source(source, last);
        rna::adapt(model, target, last);
        rna::dump_embeddings(model, target, bench_dump);
      }
    } else if (*seriate) {
      const Eigen::MatrixXd s = read_csv_matrix(ser_in);
      if (s.rows() != s.cols())
        throw rna::ArgumentError("seriate: matrix must be square");
      rna::FiedlerInfo info;
      const std::vector<int> ranks = rna::fiedler_ranking(rna::laplacian(s), &info);
      if (info.degenerate)
        std::cerr << "warning: Fiedler eigenvalue is degenerate; "
                     "the ranking is one of several valid choices\n";
      std::ostringstream out;
      out << "item,rank\n";
      for (size_t i = 0; i < ranks.size(); ++i) out << i << ',' << ranks[i] << '\n';
      out << "fiedler_value," << fmt(info.value) << '\n';
      if (ser_out.empty()) {
        std::cout << out.str();
      } else {
        std::ofstream f(ser_out);
        if (!f) throw rna::LoadError("cannot write " + ser_out);
        f << out.str();
      }
    } else if (*partition) {
      const rna::ModelState model = rna::load_model(part_model);
      const rna::GraphDataset ds = load_for_model(part_data, model);
      const rna::DomainPartition part =
          rna::partition_harmonic(ds, model, part_rho, part_seed);
      std::vector<char> harmonic(ds.graphs.size(), 0);
      for (int idx : part.harmonic) harmonic[idx] = 1;
      std::ostringstream out;
      out << "graph,set,cluster,silhouette\n";
      for (size_t i = 0; i < ds.graphs.size(); ++i)
        out << i << ',' << (harmonic[i] ? "H" : "I") << ','
            << part.cluster_labels[i] << ',' << fmt(part.silhouette_scores[i])
            << '\n';
      if (part_out.empty()) {
        std::cout << out.str();
      } else {
        std::ofstream f(part_out);
        if (!f) throw rna::LoadError("cannot write " + part_out);
        f << out.str();
      }
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
