#include "rna/harmonic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "rna/common.hpp"
#include "rna/encoder.hpp"
#include "rna/seriation.hpp"

namespace rna {

ClusterAssignment spectral_embed(const Eigen::MatrixXd& similarity, int k) {
  const Eigen::Index n = similarity.rows();
  if (k < 1 || k > n) throw ArgumentError("spectral_embed: need 1 <= k <= n");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(laplacian(similarity));
  if (solver.info() != Eigen::Success)
    throw NumericError("spectral_embed: eigensolver failed to converge");

  ClusterAssignment out;
  out.eigenvalues = solver.eigenvalues().head(k);
  out.embedding = solver.eigenvectors().leftCols(k);
  for (int c = 0; c < k; ++c) {
    for (Eigen::Index i = 0; i < n; ++i) {
      if (std::abs(out.embedding(i, c)) > 1e-10) {
        if (out.embedding(i, c) < 0) out.embedding.col(c) = -out.embedding.col(c);
        break;
      }
    }
  }
  return out;
}

std::vector<int> kmeans_rows(const Eigen::MatrixXd& points, int k, std::uint64_t seed) {
  const int n = static_cast<int>(points.rows());
  if (k < 1 || k > n) throw ArgumentError("kmeans_rows: need 1 <= k <= n");

  auto rng = substream(seed, Stream::kKMeans);
  Eigen::MatrixXd centers(k, points.cols());
  std::vector<char> chosen(n, 0);
  {
    std::uniform_int_distribution<int> pick(0, n - 1);
    const int first = pick(rng);
    centers.row(0) = points.row(first);
    chosen[first] = 1;
  }
  // farthest-point seeding for the remaining centers, ties by index
  Eigen::VectorXd min_dist(n);
  for (int i = 0; i < n; ++i)
    min_dist[i] = (points.row(i) - centers.row(0)).squaredNorm();
  for (int c = 1; c < k; ++c) {
    int best = -1;
    double best_d = -1.0;
    for (int i = 0; i < n; ++i) {
      if (chosen[i]) continue;
      if (min_dist[i] > best_d) {
        best_d = min_dist[i];
        best = i;
      }
    }
    centers.row(c) = points.row(best);
    chosen[best] = 1;
    for (int i = 0; i < n; ++i)
      min_dist[i] = std::min(min_dist[i], (points.row(i) - centers.row(c)).squaredNorm());
  }

  std::vector<int> labels(n, 0);
  constexpr int kMaxIter = 300;
  constexpr double kTol = 1e-6;
  for (int iter = 0; iter < kMaxIter; ++iter) {
    for (int i = 0; i < n; ++i) {
      int best = 0;
      double best_d = (points.row(i) - centers.row(0)).squaredNorm();
      for (int c = 1; c < k; ++c) {
        const double d = (points.row(i) - centers.row(c)).squaredNorm();
        if (d < best_d) {
          best_d = d;
          best = c;
        }
      }
      labels[i] = best;
    }

    Eigen::MatrixXd next = Eigen::MatrixXd::Zero(k, points.cols());
    std::vector<int> count(k, 0);
    for (int i = 0; i < n; ++i) {
      next.row(labels[i]) += points.row(i);
      count[labels[i]] += 1;
    }
    for (int c = 0; c < k; ++c) {
      if (count[c] > 0) {
        next.row(c) /= count[c];
        continue;
      }
      // re-seed an empty cluster to the point farthest from its own center
      int far = 0;
      double far_d = -1.0;
      for (int i = 0; i < n; ++i) {
        const double d = (points.row(i) - centers.row(labels[i])).squaredNorm();
        if (d > far_d) {
          far_d = d;
          far = i;
        }
      }
      next.row(c) = points.row(far);
      labels[far] = c;
    }
    const double moved = (next - centers).rowwise().norm().maxCoeff();
    centers = next;
    if (moved < kTol) break;
  }
  // final assignment against the converged centers
  for (int i = 0; i < n; ++i) {
    int best = 0;
    double best_d = (points.row(i) - centers.row(0)).squaredNorm();
    for (int c = 1; c < k; ++c) {
      const double d = (points.row(i) - centers.row(c)).squaredNorm();
      if (d < best_d) {
        best_d = d;
        best = c;
      }
    }
    labels[i] = best;
  }
  return labels;
}

Eigen::VectorXd silhouette(const Eigen::MatrixXd& distances,
                           const std::vector<int>& labels) {
  const Eigen::Index n = distances.rows();
  if (distances.cols() != n) throw ArgumentError("silhouette: matrix not square");
  if (static_cast<Eigen::Index>(labels.size()) != n)
    throw ArgumentError("silhouette: labels size mismatch");
  if ((distances - distances.transpose()).cwiseAbs().maxCoeff() > 1e-8)
    throw ArgumentError("silhouette: distances not symmetric");
  if (distances.diagonal().cwiseAbs().maxCoeff() > 1e-12)
    throw ArgumentError("silhouette: diagonal not zero");

  const int k = labels.empty() ? 0 : *std::max_element(labels.begin(), labels.end()) + 1;
  std::vector<long> size(k, 0);
  for (int c : labels) {
    if (c < 0) throw ArgumentError("silhouette: negative cluster id");
    size[c] += 1;
  }
  int nonempty = 0;
  for (long s : size)
    if (s > 0) nonempty++;
  if (nonempty < 2) throw ArgumentError("silhouette: need at least 2 clusters");

  Eigen::VectorXd scores(n);
  std::vector<double> cluster_sum(k);
  for (Eigen::Index i = 0; i < n; ++i) {
    std::fill(cluster_sum.begin(), cluster_sum.end(), 0.0);
    for (Eigen::Index j = 0; j < n; ++j) cluster_sum[labels[j]] += distances(i, j);
    const int own = labels[i];
    if (size[own] == 1) {
      scores[i] = 0.0;  // singleton convention
      continue;
    }
    const double a = cluster_sum[own] / static_cast<double>(size[own] - 1);
    double b = std::numeric_limits<double>::infinity();
    for (int c = 0; c < k; ++c)
      if (c != own && size[c] > 0)
        b = std::min(b, cluster_sum[c] / static_cast<double>(size[c]));
    const double denom = std::max(a, b);
    scores[i] = denom > 0.0 ? (b - a) / denom : 0.0;
  }
  return scores;
}

DomainPartition partition_harmonic(const GraphDataset& target, const ModelState& model,
                                   double rho, std::uint64_t seed) {
  if (!(rho > 0.0 && rho < 1.0))
    throw ArgumentError("partition_harmonic: rho must be in (0, 1)");
  const int n = static_cast<int>(target.graphs.size());
  const int k = model.config.k_clusters > 0 ? model.config.k_clusters
                                            : model.num_classes;
  if (n < k)
    throw ArgumentError("partition_harmonic: target smaller than cluster count");

  const Eigen::MatrixXd embeddings = embed_dataset(target, model);
  const Eigen::MatrixXd sim = similarity_matrix(embeddings);
  ClusterAssignment clusters = spectral_embed(sim, k);
  clusters.labels = kmeans_rows(clusters.embedding, k, seed);

  Eigen::MatrixXd dist = (1.0 - sim.array()).matrix();
  dist.diagonal().setZero();

  DomainPartition part;
  part.rho = rho;
  part.cluster_labels = clusters.labels;
  part.silhouette_scores = silhouette(dist, clusters.labels);
  part.harmonic = select_harmonic(part.silhouette_scores, rho);
  std::vector<char> is_harmonic(n, 0);
  for (int idx : part.harmonic) is_harmonic[idx] = 1;
  for (int i = 0; i < n; ++i)
    if (!is_harmonic[i]) part.inharmonic.push_back(i);
  return part;
}

std::vector<int> select_harmonic(const Eigen::VectorXd& scores, double rho) {
  if (!(rho > 0.0 && rho < 1.0))
    throw ArgumentError("select_harmonic: rho must be in (0, 1)");
  const int n = static_cast<int>(scores.size());
  const int h = static_cast<int>(std::lround(rho * n));
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return scores[a] > scores[b]; });
  std::vector<int> selected(order.begin(), order.begin() + std::min(h, n));
  std::sort(selected.begin(), selected.end());
  return selected;
}

}  // namespace rna
