#include "rna/graph_data.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "rna/common.hpp"

namespace rna {

namespace {

std::vector<std::string> read_lines(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw LoadError("cannot open " + file.string());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  // trailing blank lines are common in published TU files
  while (!lines.empty() && lines.back().find_first_not_of(" \t") == std::string::npos)
    lines.pop_back();
  return lines;
}

long parse_long(const std::string& text, const std::filesystem::path& file, size_t lineno) {
  const char* b = text.data();
  const char* e = b + text.size();
  while (b < e && (*b == ' ' || *b == '\t')) ++b;
  long value = 0;
  auto [p, ec] = std::from_chars(b, e, value);
  if (ec != std::errc{})
    throw FormatError(file.string() + ":" + std::to_string(lineno) + ": expected integer, got '" + text + "'");
  return value;
}

std::vector<std::string> split_commas(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(field);
  return out;
}

std::filesystem::path find_tud_file(const std::filesystem::path& dir,
                                    const std::string& suffix, bool required) {
  std::filesystem::path found;
  if (std::filesystem::is_directory(dir)) {
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
      const std::string name = entry.path().filename().string();
      if (name.size() >= suffix.size() &&
          name.compare(name.size() - suffix.size(), suffix.size(), suffix) == 0) {
        found = entry.path();
        break;
      }
    }
  }
  if (found.empty() && required)
    throw LoadError("missing " + (dir / ("<DS>" + suffix)).string());
  return found;
}

std::string format_double(double v) {
  std::ostringstream os;
  os.precision(std::numeric_limits<double>::max_digits10);
  os << v;
  return os.str();
}

}  // namespace

GraphDataset load_tud_dataset(const std::filesystem::path& directory) {
  if (!std::filesystem::is_directory(directory))
    throw LoadError("dataset directory not found: " + directory.string());

  const auto a_file = find_tud_file(directory, "_A.txt", true);
  const auto indicator_file = find_tud_file(directory, "_graph_indicator.txt", true);
  const auto graph_labels_file = find_tud_file(directory, "_graph_labels.txt", true);
  const auto node_labels_file = find_tud_file(directory, "_node_labels.txt", true);
  const auto node_attr_file = find_tud_file(directory, "_node_attributes.txt", false);

  const auto indicator_lines = read_lines(indicator_file);
  const long total_nodes = static_cast<long>(indicator_lines.size());
  if (total_nodes == 0) throw FormatError(indicator_file.string() + ": empty file");

  // graph membership, 1-indexed graph ids in the file
  std::vector<long> node_to_graph(total_nodes);
  long num_graphs = 0;
  for (long i = 0; i < total_nodes; ++i) {
    const long g = parse_long(indicator_lines[i], indicator_file, i + 1);
    if (g < 1)
      throw FormatError(indicator_file.string() + ":" + std::to_string(i + 1) +
                        ": graph id must be >= 1");
    node_to_graph[i] = g - 1;
    num_graphs = std::max(num_graphs, g);
  }

  const auto graph_label_lines = read_lines(graph_labels_file);
  if (static_cast<long>(graph_label_lines.size()) != num_graphs)
    throw FormatError(graph_labels_file.string() + ": expected " +
                      std::to_string(num_graphs) + " lines, got " +
                      std::to_string(graph_label_lines.size()));
  std::vector<long> raw_graph_labels(num_graphs);
  std::set<long> label_values;
  for (long g = 0; g < num_graphs; ++g) {
    raw_graph_labels[g] = parse_long(graph_label_lines[g], graph_labels_file, g + 1);
    label_values.insert(raw_graph_labels[g]);
  }
  std::map<long, int> label_remap;
  for (long v : label_values) label_remap[v] = static_cast<int>(label_remap.size());

  const auto node_label_lines = read_lines(node_labels_file);
  if (static_cast<long>(node_label_lines.size()) != total_nodes)
    throw FormatError(node_labels_file.string() + ": expected " +
                      std::to_string(total_nodes) + " lines, got " +
                      std::to_string(node_label_lines.size()));
  std::vector<long> raw_node_labels(total_nodes);
  std::set<long> node_label_values;
  for (long i = 0; i < total_nodes; ++i) {
    raw_node_labels[i] = parse_long(node_label_lines[i], node_labels_file, i + 1);
    node_label_values.insert(raw_node_labels[i]);
  }
  std::map<long, int> node_label_remap;
  for (long v : node_label_values)
    node_label_remap[v] = static_cast<int>(node_label_remap.size());
  const int one_hot_dim = static_cast<int>(node_label_remap.size());

  int attr_dim = 0;
  std::vector<std::vector<double>> attrs;
  if (!node_attr_file.empty()) {
    const auto attr_lines = read_lines(node_attr_file);
    if (static_cast<long>(attr_lines.size()) != total_nodes)
      throw FormatError(node_attr_file.string() + ": expected " +
                        std::to_string(total_nodes) + " lines, got " +
                        std::to_string(attr_lines.size()));
    attrs.resize(total_nodes);
    for (long i = 0; i < total_nodes; ++i) {
      for (const auto& f : split_commas(attr_lines[i])) {
        try {
          attrs[i].push_back(std::stod(f));
        } catch (const std::exception&) {
          throw FormatError(node_attr_file.string() + ":" + std::to_string(i + 1) +
                            ": expected real number, got '" + f + "'");
        }
      }
      if (i == 0)
        attr_dim = static_cast<int>(attrs[0].size());
      else if (static_cast<int>(attrs[i].size()) != attr_dim)
        throw FormatError(node_attr_file.string() + ":" + std::to_string(i + 1) +
                          ": inconsistent attribute count");
    }
  }

  // per-graph local node numbering, in indicator order
  std::vector<int> graph_node_count(num_graphs, 0);
  std::vector<int> local_index(total_nodes);
  for (long i = 0; i < total_nodes; ++i)
    local_index[i] = graph_node_count[node_to_graph[i]]++;
  for (long g = 0; g < num_graphs; ++g)
    if (graph_node_count[g] == 0)
      throw FormatError(indicator_file.string() + ": graph " + std::to_string(g + 1) +
                        " has no nodes");

  GraphDataset ds;
  ds.name = directory.filename().string();
  ds.num_classes = static_cast<int>(label_remap.size());
  ds.node_label_dim = one_hot_dim;
  ds.node_label_values.assign(node_label_values.begin(), node_label_values.end());
  ds.feature_dim = one_hot_dim + attr_dim;
  ds.graphs.resize(num_graphs);
  for (long g = 0; g < num_graphs; ++g) {
    auto& gr = ds.graphs[g];
    gr.node_count = graph_node_count[g];
    gr.label = label_remap.at(raw_graph_labels[g]);
    gr.node_features = Eigen::MatrixXd::Zero(gr.node_count, ds.feature_dim);
  }
  for (long i = 0; i < total_nodes; ++i) {
    auto& gr = ds.graphs[node_to_graph[i]];
    gr.node_features(local_index[i], node_label_remap.at(raw_node_labels[i])) = 1.0;
    for (int a = 0; a < attr_dim; ++a)
      gr.node_features(local_index[i], one_hot_dim + a) = attrs[i][a];
  }

  // edges: 1-indexed global node pairs, usually listed in both directions
  const auto edge_lines = read_lines(a_file);
  std::vector<std::set<std::pair<int, int>>> edge_sets(num_graphs);
  for (size_t ln = 0; ln < edge_lines.size(); ++ln) {
    if (edge_lines[ln].find_first_not_of(" \t") == std::string::npos) continue;
    const auto fields = split_commas(edge_lines[ln]);
    if (fields.size() != 2)
      throw FormatError(a_file.string() + ":" + std::to_string(ln + 1) +
                        ": expected 'u, v'");
    const long u = parse_long(fields[0], a_file, ln + 1);
    const long v = parse_long(fields[1], a_file, ln + 1);
    if (u < 1 || u > total_nodes || v < 1 || v > total_nodes)
      throw FormatError(a_file.string() + ":" + std::to_string(ln + 1) +
                        ": node index out of range [1, " +
                        std::to_string(total_nodes) + "]");
    if (u == v) continue;  // self-loops are never stored
    const long gu = node_to_graph[u - 1];
    const long gv = node_to_graph[v - 1];
    if (gu != gv)
      throw FormatError(a_file.string() + ":" + std::to_string(ln + 1) +
                        ": edge crosses graph boundary");
    int lu = local_index[u - 1];
    int lv = local_index[v - 1];
    if (lu > lv) std::swap(lu, lv);
    edge_sets[gu].insert({lu, lv});
  }
  for (long g = 0; g < num_graphs; ++g)
    ds.graphs[g].edges.assign(edge_sets[g].begin(), edge_sets[g].end());
  return ds;
}

void write_tud_dataset(const GraphDataset& dataset,
                       const std::filesystem::path& directory) {
  std::filesystem::create_directories(directory);
  const std::string prefix = directory.filename().string();
  std::ofstream a(directory / (prefix + "_A.txt"));
  std::ofstream ind(directory / (prefix + "_graph_indicator.txt"));
  std::ofstream gl(directory / (prefix + "_graph_labels.txt"));
  std::ofstream nl(directory / (prefix + "_node_labels.txt"));
  if (!a || !ind || !gl || !nl)
    throw LoadError("cannot write TU files under " + directory.string());

  const int one_hot = dataset.node_label_dim;
  const int attr_dim = dataset.feature_dim - one_hot;
  std::ofstream na;
  if (attr_dim > 0) {
    na.open(directory / (prefix + "_node_attributes.txt"));
    if (!na) throw LoadError("cannot write node attributes under " + directory.string());
  }

  long offset = 1;  // global 1-indexed node ids
  for (size_t g = 0; g < dataset.graphs.size(); ++g) {
    const auto& gr = dataset.graphs[g];
    gl << (gr.label ? *gr.label : 0) << "\n";
    for (int i = 0; i < gr.node_count; ++i) {
      ind << (g + 1) << "\n";
      long lab = 0;
      if (one_hot > 0) {
        int pos = 0;
        gr.node_features.row(i).head(one_hot).maxCoeff(&pos);
        lab = pos < static_cast<int>(dataset.node_label_values.size())
                  ? dataset.node_label_values[pos]
                  : pos;
      }
      nl << lab << "\n";
      if (attr_dim > 0) {
        for (int c = 0; c < attr_dim; ++c) {
          if (c) na << ", ";
          na << format_double(gr.node_features(i, one_hot + c));
        }
        na << "\n";
      }
    }
    for (const auto& [u, v] : gr.edges) {
      a << (offset + u) << ", " << (offset + v) << "\n";
      a << (offset + v) << ", " << (offset + u) << "\n";
    }
    offset += gr.node_count;
  }
}

std::vector<GraphDataset> density_split(const GraphDataset& dataset, int parts) {
  if (parts < 2) throw ArgumentError("density_split: parts must be >= 2");
  if (dataset.graphs.empty()) throw ArgumentError("density_split: empty dataset");
  if (parts > static_cast<int>(dataset.graphs.size()))
    throw ArgumentError("density_split: parts exceeds dataset size");

  std::vector<int> order(dataset.graphs.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int lhs, int rhs) {
    return dataset.graphs[lhs].density() < dataset.graphs[rhs].density();
  });

  const int n = static_cast<int>(order.size());
  std::vector<GraphDataset> out(parts);
  int cursor = 0;
  for (int k = 0; k < parts; ++k) {
    const int size = n / parts + (k < n % parts ? 1 : 0);
    auto& sub = out[k];
    sub.num_classes = dataset.num_classes;
    sub.feature_dim = dataset.feature_dim;
    sub.node_label_dim = dataset.node_label_dim;
    sub.node_label_values = dataset.node_label_values;
    sub.name = dataset.name + "_" + std::to_string(k);
    sub.graphs.reserve(size);
    for (int i = 0; i < size; ++i) sub.graphs.push_back(dataset.graphs[order[cursor++]]);
  }
  return out;
}

void harmonize_node_labels(GraphDataset& a, GraphDataset& b) {
  const int attr_a = a.feature_dim - a.node_label_dim;
  const int attr_b = b.feature_dim - b.node_label_dim;
  if (attr_a != attr_b)
    throw ArgumentError("harmonize_node_labels: attribute widths differ");
  if (a.node_label_dim != static_cast<int>(a.node_label_values.size()) ||
      b.node_label_dim != static_cast<int>(b.node_label_values.size()))
    throw ArgumentError("harmonize_node_labels: raw label values unavailable");

  std::set<long> union_values(a.node_label_values.begin(), a.node_label_values.end());
  union_values.insert(b.node_label_values.begin(), b.node_label_values.end());
  std::vector<long> merged(union_values.begin(), union_values.end());
  std::map<long, int> position;
  for (size_t i = 0; i < merged.size(); ++i) position[merged[i]] = static_cast<int>(i);

  auto rebuild = [&](GraphDataset& ds, int attr_dim) {
    const int old_one_hot = ds.node_label_dim;
    const int new_one_hot = static_cast<int>(merged.size());
    for (auto& g : ds.graphs) {
      Eigen::MatrixXd wide = Eigen::MatrixXd::Zero(g.node_count, new_one_hot + attr_dim);
      for (int v = 0; v < g.node_count; ++v) {
        int pos = 0;
        g.node_features.row(v).head(old_one_hot).maxCoeff(&pos);
        wide(v, position.at(ds.node_label_values[pos])) = 1.0;
        for (int c = 0; c < attr_dim; ++c)
          wide(v, new_one_hot + c) = g.node_features(v, old_one_hot + c);
      }
      g.node_features = std::move(wide);
    }
    ds.node_label_dim = new_one_hot;
    ds.node_label_values = merged;
    ds.feature_dim = new_one_hot + attr_dim;
  };
  rebuild(a, attr_a);
  rebuild(b, attr_b);
}

GraphDataset remap_node_labels(const GraphDataset& dataset,
                               const std::vector<long>& alphabet) {
  if (dataset.node_label_dim != static_cast<int>(dataset.node_label_values.size()))
    throw ArgumentError("remap_node_labels: raw label values unavailable");
  std::map<long, int> position;
  for (size_t i = 0; i < alphabet.size(); ++i)
    position[alphabet[i]] = static_cast<int>(i);
  for (long v : dataset.node_label_values)
    if (!position.count(v))
      throw ArgumentError("remap_node_labels: label " + std::to_string(v) +
                          " missing from the target alphabet");

  const int attr_dim = dataset.feature_dim - dataset.node_label_dim;
  const int one_hot = static_cast<int>(alphabet.size());
  GraphDataset out = dataset;
  out.node_label_dim = one_hot;
  out.node_label_values = alphabet;
  out.feature_dim = one_hot + attr_dim;
  for (auto& g : out.graphs) {
    Eigen::MatrixXd wide = Eigen::MatrixXd::Zero(g.node_count, out.feature_dim);
    for (int v = 0; v < g.node_count; ++v) {
      int pos = 0;
      g.node_features.row(v).head(dataset.node_label_dim).maxCoeff(&pos);
      wide(v, position.at(dataset.node_label_values[pos])) = 1.0;
      for (int c = 0; c < attr_dim; ++c)
        wide(v, one_hot + c) = g.node_features(v, dataset.node_label_dim + c);
    }
    g.node_features = std::move(wide);
  }
  return out;
}

GraphBatch assemble_batch(const GraphDataset& dataset, const std::vector<int>& indices) {
  GraphBatch batch;
  batch.graph_indices = indices;
  int total_nodes = 0;
  size_t total_edges = 0;
  for (int idx : indices) {
    total_nodes += dataset.graphs[idx].node_count;
    total_edges += dataset.graphs[idx].edges.size();
  }
  batch.features.resize(total_nodes, dataset.feature_dim);
  batch.node_graph.resize(total_nodes);
  batch.edges.reserve(total_edges);
  batch.graph_edge_offset.reserve(indices.size() + 1);
  batch.labels.reserve(indices.size());

  int node_offset = 0;
  for (size_t k = 0; k < indices.size(); ++k) {
    const Graph& g = dataset.graphs[indices[k]];
    batch.graph_edge_offset.push_back(static_cast<int>(batch.edges.size()));
    batch.labels.push_back(g.label);
    batch.features.middleRows(node_offset, g.node_count) = g.node_features;
    for (int i = 0; i < g.node_count; ++i)
      batch.node_graph[node_offset + i] = static_cast<int>(k);
    for (const auto& [u, v] : g.edges)
      batch.edges.emplace_back(node_offset + u, node_offset + v);
    node_offset += g.node_count;
  }
  batch.graph_edge_offset.push_back(static_cast<int>(batch.edges.size()));
  return batch;
}

std::vector<GraphBatch> make_batches(const GraphDataset& dataset, int batch_size,
                                     std::uint64_t shuffle_seed) {
  if (batch_size < 2) throw ArgumentError("make_batches: batch_size must be >= 2");
  if (dataset.graphs.size() < 2)
    throw ArgumentError("make_batches: dataset must contain at least 2 graphs");

  std::vector<int> order(dataset.graphs.size());
  std::iota(order.begin(), order.end(), 0);
  auto rng = substream(shuffle_seed, Stream::kShuffle);
  std::shuffle(order.begin(), order.end(), rng);

  std::vector<std::vector<int>> groups;
  for (size_t i = 0; i < order.size(); i += batch_size) {
    const size_t end = std::min(order.size(), i + batch_size);
    groups.emplace_back(order.begin() + i, order.begin() + end);
  }
  if (groups.size() > 1 && groups.back().size() < 2) {
    auto tail = groups.back();
    groups.pop_back();
    groups.back().insert(groups.back().end(), tail.begin(), tail.end());
  }

  std::vector<GraphBatch> batches;
  batches.reserve(groups.size());
  for (const auto& g : groups) batches.push_back(assemble_batch(dataset, g));
  return batches;
}

}  // namespace rna
