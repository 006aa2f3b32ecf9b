#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "rna/graph_data.hpp"
#include "rna/model.hpp"

namespace rna {

struct ClusterAssignment {
  Eigen::MatrixXd embedding;   // n x k eigenvector matrix U
  Eigen::VectorXd eigenvalues; // k smallest, ascending
  std::vector<int> labels;     // empty until k-means runs
};

/// Eigenvectors of laplacian(S) for the k smallest eigenvalues, unit-norm
/// columns, deterministic sign (first component over 1e-10 positive).
ClusterAssignment spectral_embed(const Eigen::MatrixXd& similarity, int k);

/// Lloyd's algorithm on the rows of `points`: seeded first center, then
/// farthest-point seeding; at most 300 iterations, 1e-6 movement tolerance;
/// empty clusters are re-seeded to the farthest point.
std::vector<int> kmeans_rows(const Eigen::MatrixXd& points, int k, std::uint64_t seed);

/// Silhouette coefficients from a symmetric zero-diagonal dissimilarity
/// matrix. Singleton clusters score 0. Requires at least 2 clusters.
Eigen::VectorXd silhouette(const Eigen::MatrixXd& distances,
                           const std::vector<int>& labels);

struct DomainPartition {
  std::vector<int> harmonic;    // ascending dataset indices
  std::vector<int> inharmonic;  // complement, ascending
  double rho = 0.0;
  Eigen::VectorXd silhouette_scores;  // per target graph
  std::vector<int> cluster_labels;
};

/// Indices of the round(rho * n) highest scores, ascending; score ties go to
/// the smaller index.
std::vector<int> select_harmonic(const Eigen::VectorXd& scores, double rho);

/// Embeds the whole target set with the current encoder, clusters spectrally
/// with k = C (or config.k_clusters), scores silhouettes on 1 - S, and marks
/// the round(rho * n) best-scoring graphs harmonic (ties by index).
DomainPartition partition_harmonic(const GraphDataset& target, const ModelState& model,
                                   double rho, std::uint64_t seed);

}  // namespace rna
