#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace rna {

/// Undirected attributed graph. Edges are stored once as (u, v) with u < v;
/// no self-loops (those are added transiently during encoding).
struct Graph {
  int node_count = 0;
  std::vector<std::pair<int, int>> edges;
  Eigen::MatrixXd node_features;  // node_count x feature_dim
  std::optional<int> label;

  /// 2|E| / (|V| (|V|-1)); zero for graphs with fewer than 2 nodes.
  double density() const {
    if (node_count < 2) return 0.0;
    return 2.0 * static_cast<double>(edges.size()) /
           (static_cast<double>(node_count) * (node_count - 1));
  }
};

struct GraphDataset {
  std::vector<Graph> graphs;
  int num_classes = 0;
  int feature_dim = 0;
  std::string name;
  // Width of the leading one-hot block built from discrete node labels;
  // remaining columns are raw node attributes. Needed to write back TU files.
  int node_label_dim = 0;
  // Raw node-label value behind each one-hot column, ascending. Lets two
  // datasets over different label alphabets be mapped onto a shared block.
  std::vector<long> node_label_values;

  std::size_t size() const { return graphs.size(); }
  bool fully_labeled() const {
    for (const auto& g : graphs)
      if (!g.label) return false;
    return true;
  }
};

/// Mini-batch with node features of member graphs stacked row-wise.
struct GraphBatch {
  std::vector<int> graph_indices;            // into the source dataset
  Eigen::MatrixXd features;                  // total nodes x feature_dim
  std::vector<int> node_graph;               // node -> local graph index [0, B)
  std::vector<std::pair<int, int>> edges;    // node indices offset into the batch
  std::vector<int> graph_edge_offset;        // per local graph: first edge index
  std::vector<std::optional<int>> labels;    // per local graph

  int graph_count() const { return static_cast<int>(graph_indices.size()); }
  int node_count() const { return static_cast<int>(node_graph.size()); }
};

/// Loads a TU-format dataset directory (DS_A.txt, DS_graph_indicator.txt,
/// DS_graph_labels.txt, DS_node_labels.txt, optional DS_node_attributes.txt).
/// Node labels become a one-hot block; attributes, when present, are
/// concatenated after it. Graph labels are remapped to {0..C-1} by ascending
/// raw value.
GraphDataset load_tud_dataset(const std::filesystem::path& directory);

/// Writes the dataset back as TU flat files under `directory` using the
/// directory basename as the file prefix. Inverse of load_tud_dataset for
/// datasets that were loaded from TU files.
void write_tud_dataset(const GraphDataset& dataset,
                       const std::filesystem::path& directory);

/// Sorts graphs by ascending edge density (ties by original index) and cuts
/// them into `parts` contiguous sub-datasets whose sizes differ by at most 1.
std::vector<GraphDataset> density_split(const GraphDataset& dataset, int parts);

/// Rebuilds both datasets' one-hot blocks over the union of their raw node
/// label alphabets so a model pretrained on one can consume the other.
/// Attribute columns, when present, must have equal width.
void harmonize_node_labels(GraphDataset& a, GraphDataset& b);

/// Re-encodes the dataset's one-hot block onto the given label alphabet
/// (which must contain every label the dataset uses). Attribute columns are
/// carried over unchanged.
GraphDataset remap_node_labels(const GraphDataset& dataset,
                               const std::vector<long>& alphabet);

/// Deterministic shuffled batching. A trailing batch smaller than 2 is merged
/// into the previous one.
std::vector<GraphBatch> make_batches(const GraphDataset& dataset, int batch_size,
                                     std::uint64_t shuffle_seed);

/// Assembles one batch from the given dataset indices, in order.
GraphBatch assemble_batch(const GraphDataset& dataset, const std::vector<int>& indices);

}  // namespace rna
