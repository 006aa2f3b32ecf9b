#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>

#include "rna/common.hpp"
#include "rna/graph_data.hpp"
#include "test_support.hpp"

using namespace rna;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) {
    path = rna::testing::unique_temp_path(name);
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

void write_file(const fs::path& p, const std::string& contents) {
  std::ofstream out(p);
  out << contents;
}

// graph 1: triangle (nodes 1-3), graph 2: single edge (nodes 4-5),
// labels {1, -1}
void write_two_graph_fixture(const fs::path& dir, const std::string& prefix) {
  write_file(dir / (prefix + "_A.txt"),
             "1, 2\n2, 1\n2, 3\n3, 2\n1, 3\n3, 1\n4, 5\n5, 4\n");
  write_file(dir / (prefix + "_graph_indicator.txt"), "1\n1\n1\n2\n2\n");
  write_file(dir / (prefix + "_graph_labels.txt"), "1\n-1\n");
  write_file(dir / (prefix + "_node_labels.txt"), "0\n1\n0\n2\n1\n");
}

bool datasets_equal(const GraphDataset& a, const GraphDataset& b) {
  if (a.graphs.size() != b.graphs.size() || a.num_classes != b.num_classes ||
      a.feature_dim != b.feature_dim || a.node_label_dim != b.node_label_dim ||
      a.node_label_values != b.node_label_values)
    return false;
  for (size_t i = 0; i < a.graphs.size(); ++i) {
    const auto& ga = a.graphs[i];
    const auto& gb = b.graphs[i];
    if (ga.node_count != gb.node_count || ga.edges != gb.edges ||
        ga.label != gb.label)
      return false;
    if ((ga.node_features - gb.node_features).cwiseAbs().maxCoeff() != 0.0)
      return false;
  }
  return true;
}

}  // namespace

TEST_CASE("loads the two-graph fixture with remapped labels") {
  TempDir dir("rna_fixture");
  write_two_graph_fixture(dir.path, "rna_fixture");
  const GraphDataset ds = load_tud_dataset(dir.path);

  CHECK(ds.graphs.size() == 2);
  CHECK(ds.num_classes == 2);
  // raw labels {1,-1} remap ascending: -1 -> 0, 1 -> 1
  CHECK(*ds.graphs[0].label == 1);
  CHECK(*ds.graphs[1].label == 0);
  CHECK(ds.graphs[0].node_count == 3);
  CHECK(ds.graphs[0].edges.size() == 3);  // triangle, each edge stored once
  CHECK(ds.graphs[1].edges.size() == 1);
  CHECK(ds.feature_dim == 3);  // node labels {0,1,2}
  CHECK(ds.graphs[0].node_features.row(0)(0) == 1.0);
}

TEST_CASE("loader errors name the offending file and line") {
  TempDir dir("rna_load_err");
  SUBCASE("missing file") {
    write_file(dir.path / "x_A.txt", "1, 2\n");
    write_file(dir.path / "x_graph_indicator.txt", "1\n1\n");
    write_file(dir.path / "x_graph_labels.txt", "0\n");
    // node labels file absent
    try {
      load_tud_dataset(dir.path);
      FAIL("expected LoadError");
    } catch (const LoadError& e) {
      CHECK(std::string(e.what()).find("_node_labels.txt") != std::string::npos);
    }
  }
  SUBCASE("dangling node index reports the line") {
    write_two_graph_fixture(dir.path, "d");
    write_file(dir.path / "d_A.txt", "1, 2\n2, 9\n");  // node 9 does not exist
    try {
      load_tud_dataset(dir.path);
      FAIL("expected FormatError");
    } catch (const FormatError& e) {
      const std::string msg = e.what();
      CHECK(msg.find("_A.txt:2") != std::string::npos);
    }
  }
}

TEST_CASE("TU round trip reproduces the dataset exactly") {
  TempDir src("rna_rt_src");
  write_two_graph_fixture(src.path, "rna_rt_src");
  const GraphDataset first = load_tud_dataset(src.path);

  TempDir dst("rna_rt_dst");
  write_tud_dataset(first, dst.path);
  const GraphDataset second = load_tud_dataset(dst.path);
  CHECK(datasets_equal(first, second));
}

TEST_CASE("TU round trip with node attributes") {
  GraphDataset ds = rna::testing::make_synthetic(12, 77);
  // attach synthetic attributes after the one-hot block
  for (auto& g : ds.graphs) {
    Eigen::MatrixXd wide(g.node_count, ds.feature_dim + 2);
    wide.leftCols(ds.feature_dim) = g.node_features;
    for (int v = 0; v < g.node_count; ++v) {
      wide(v, ds.feature_dim) = 0.125 * v + 1.0 / 3.0;
      wide(v, ds.feature_dim + 1) = -2.718281828459045 * (v % 3);
    }
    g.node_features = wide;
  }
  ds.feature_dim += 2;

  TempDir dir("rna_rt_attr");
  write_tud_dataset(ds, dir.path);
  const GraphDataset back = load_tud_dataset(dir.path);
  CHECK(datasets_equal(ds, back));
}

TEST_CASE("density split orders by density and balances sizes") {
  GraphDataset ds;
  ds.num_classes = 2;
  ds.feature_dim = 1;
  ds.node_label_dim = 1;
  // 8 graphs with strictly increasing density: n=5 nodes, 1..8 edges
  for (int m = 1; m <= 8; ++m) {
    Graph g;
    g.node_count = 5;
    g.label = 0;
    g.node_features = Eigen::MatrixXd::Ones(5, 1);
    const std::pair<int, int> all[] = {{0, 1}, {1, 2}, {2, 3}, {3, 4}, {0, 2},
                                       {1, 3}, {2, 4}, {0, 3}};
    for (int e = 0; e < m; ++e) g.edges.push_back(all[e]);
    ds.graphs.push_back(g);
  }

  SUBCASE("8 graphs, 4 parts -> 4 sub-datasets of 2, density ordered") {
    auto parts = density_split(ds, 4);
    REQUIRE(parts.size() == 4);
    for (const auto& p : parts) CHECK(p.graphs.size() == 2);
    CHECK(parts[0].graphs[0].edges.size() == 1);
    CHECK(parts[3].graphs[1].edges.size() == 8);
  }

  SUBCASE("identical densities preserve original order") {
    GraphDataset flat = ds;
    for (auto& g : flat.graphs) {
      g.edges = {{0, 1}};  // all densities equal
      g.node_features(0, 0) = static_cast<double>(&g - flat.graphs.data());
    }
    auto parts = density_split(flat, 4);
    double expected = 0.0;
    for (const auto& p : parts)
      for (const auto& g : p.graphs) {
        CHECK(g.node_features(0, 0) == expected);
        expected += 1.0;
      }
  }

  SUBCASE("groups are disjoint, cover the input, and are density-monotone") {
    GraphDataset sds = rna::testing::make_synthetic(37, 5);
    auto parts = density_split(sds, 4);
    size_t total = 0;
    double prev_max = -1.0;
    for (const auto& p : parts) {
      total += p.graphs.size();
      double lo = 1e9, hi = -1e9;
      for (const auto& g : p.graphs) {
        lo = std::min(lo, g.density());
        hi = std::max(hi, g.density());
      }
      CHECK(lo >= prev_max - 1e-12);
      prev_max = hi;
    }
    CHECK(total == sds.graphs.size());
    int max_size = 0, min_size = 1 << 30;
    for (const auto& p : parts) {
      max_size = std::max<int>(max_size, p.graphs.size());
      min_size = std::min<int>(min_size, p.graphs.size());
    }
    CHECK(max_size - min_size <= 1);
  }

  SUBCASE("parts larger than the dataset is an error") {
    CHECK_THROWS_AS(density_split(ds, 9), ArgumentError);
    CHECK_THROWS_AS(density_split(ds, 1), ArgumentError);
  }
}

TEST_CASE("batching keeps sizes, merges trailing singletons, is a permutation") {
  GraphDataset ds = rna::testing::make_synthetic(10, 3);

  SUBCASE("10 graphs, batch size 4 -> [4,4,2]") {
    auto batches = make_batches(ds, 4, 1);
    REQUIRE(batches.size() == 3);
    CHECK(batches[0].graph_count() == 4);
    CHECK(batches[1].graph_count() == 4);
    CHECK(batches[2].graph_count() == 2);
  }

  SUBCASE("9 graphs, batch size 4 -> [4,5]") {
    GraphDataset nine = rna::testing::make_synthetic(9, 3);
    auto batches = make_batches(nine, 4, 1);
    REQUIRE(batches.size() == 2);
    CHECK(batches[0].graph_count() == 4);
    CHECK(batches[1].graph_count() == 5);
  }

  SUBCASE("same seed gives identical composition") {
    auto a = make_batches(ds, 4, 42);
    auto b = make_batches(ds, 4, 42);
    REQUIRE(a.size() == b.size());
    for (size_t i = 0; i < a.size(); ++i)
      CHECK(a[i].graph_indices == b[i].graph_indices);
  }

  SUBCASE("multiset of indices equals the dataset index set") {
    auto batches = make_batches(ds, 3, 9);
    std::set<int> seen;
    size_t total = 0;
    for (const auto& b : batches)
      for (int idx : b.graph_indices) {
        seen.insert(idx);
        ++total;
      }
    CHECK(total == ds.graphs.size());
    CHECK(seen.size() == ds.graphs.size());
  }

  SUBCASE("membership vector partitions nodes by member graph") {
    auto batches = make_batches(ds, 4, 7);
    for (const auto& b : batches) {
      int offset = 0;
      for (int k = 0; k < b.graph_count(); ++k) {
        const auto& g = ds.graphs[b.graph_indices[k]];
        for (int v = 0; v < g.node_count; ++v) CHECK(b.node_graph[offset + v] == k);
        offset += g.node_count;
      }
    }
  }

  SUBCASE("tiny datasets are rejected") {
    GraphDataset one = rna::testing::make_synthetic(1, 3);
    CHECK_THROWS_AS(make_batches(one, 4, 1), ArgumentError);
    CHECK_THROWS_AS(make_batches(ds, 1, 1), ArgumentError);
  }
}

TEST_CASE("harmonizing node labels merges the alphabets") {
  // dataset A uses raw labels {0,1,2,3}, dataset B uses {2,3,4}
  GraphDataset a = rna::testing::make_synthetic(6, 51);
  GraphDataset b;
  b.num_classes = 2;
  b.node_label_dim = 3;
  b.node_label_values = {2, 3, 4};
  b.feature_dim = 3;
  for (int i = 0; i < 4; ++i) {
    Graph g;
    g.label = i % 2;
    g.node_count = 3;
    g.edges = {{0, 1}, {1, 2}};
    g.node_features = Eigen::MatrixXd::Zero(3, 3);
    g.node_features(0, 0) = 1.0;  // raw label 2
    g.node_features(1, 1) = 1.0;  // raw label 3
    g.node_features(2, 2) = 1.0;  // raw label 4
    b.graphs.push_back(g);
  }

  harmonize_node_labels(a, b);
  CHECK(a.feature_dim == 5);
  CHECK(b.feature_dim == 5);
  CHECK(a.node_label_values == std::vector<long>{0, 1, 2, 3, 4});
  CHECK(b.node_label_values == a.node_label_values);
  // B's first node carried raw label 2, which now lives in column 2
  CHECK(b.graphs[0].node_features(0, 2) == 1.0);
  CHECK(b.graphs[0].node_features(1, 3) == 1.0);
  CHECK(b.graphs[0].node_features(2, 4) == 1.0);
  CHECK(b.graphs[0].node_features.row(0).sum() == 1.0);
  // A's columns are a prefix embedding: each row still one-hot
  for (const auto& g : a.graphs)
    for (int v = 0; v < g.node_count; ++v) {
      CHECK(g.node_features.row(v).sum() == 1.0);
      CHECK(g.node_features.row(v).rightCols(1)(0) == 0.0);  // label 4 unused
    }

  SUBCASE("remapping onto a covering alphabet matches harmonization") {
    GraphDataset fresh;
    fresh.num_classes = 2;
    fresh.node_label_dim = 3;
    fresh.node_label_values = {2, 3, 4};
    fresh.feature_dim = 3;
    Graph g;
    g.label = 0;
    g.node_count = 2;
    g.edges = {{0, 1}};
    g.node_features = Eigen::MatrixXd::Zero(2, 3);
    g.node_features(0, 0) = 1.0;  // raw 2
    g.node_features(1, 2) = 1.0;  // raw 4
    fresh.graphs.push_back(g);

    const GraphDataset mapped = remap_node_labels(fresh, {0, 1, 2, 3, 4});
    CHECK(mapped.feature_dim == 5);
    CHECK(mapped.graphs[0].node_features(0, 2) == 1.0);
    CHECK(mapped.graphs[0].node_features(1, 4) == 1.0);

    CHECK_THROWS_AS(remap_node_labels(fresh, {0, 1, 2}), ArgumentError);
  }

  SUBCASE("attribute width mismatches are rejected") {
    GraphDataset c = rna::testing::make_synthetic(2, 53);
    GraphDataset wide = rna::testing::make_synthetic(2, 54);
    for (auto& g : wide.graphs) {
      Eigen::MatrixXd w(g.node_count, wide.feature_dim + 1);
      w.leftCols(wide.feature_dim) = g.node_features;
      w.col(wide.feature_dim).setConstant(0.5);
      g.node_features = w;
    }
    wide.feature_dim += 1;
    CHECK_THROWS_AS(harmonize_node_labels(c, wide), ArgumentError);
  }
}

TEST_CASE("public TU datasets load with the documented sizes" *
          doctest::skip(!rna::testing::dataset_available("COX2"))) {
  const auto root = rna::testing::data_root();
  const GraphDataset cox2 = load_tud_dataset(root / "COX2");
  CHECK(cox2.graphs.size() == 467);
  CHECK(cox2.num_classes == 2);
  if (rna::testing::dataset_available("BZR")) {
    const GraphDataset bzr = load_tud_dataset(root / "BZR");
    CHECK(bzr.graphs.size() == 405);
    CHECK(bzr.num_classes == 2);
  }
  if (rna::testing::dataset_available("Mutagenicity")) {
    const GraphDataset muta = load_tud_dataset(root / "Mutagenicity");
    auto parts = density_split(muta, 4);
    size_t total = 0;
    int max_size = 0, min_size = 1 << 30;
    for (const auto& p : parts) {
      total += p.graphs.size();
      max_size = std::max<int>(max_size, p.graphs.size());
      min_size = std::min<int>(min_size, p.graphs.size());
    }
    CHECK(total == 4337);
    CHECK(max_size - min_size <= 1);
  }
}
