#pragma once

#include <Eigen/Dense>
#include <vector>

#include "rna/autodiff.hpp"

namespace rna {

/// Rank positions under descending sort (rank 0 = largest), ties broken by
/// smaller index. Output is a permutation of {0..n-1}.
std::vector<int> rank_descending(const Eigen::VectorXd& values);

/// Rank positions under ascending sort (rank 0 = smallest), ties by index.
std::vector<int> rank_ascending(const Eigen::VectorXd& values);

/// Cosine of the two centered rank vectors (Spearman-style similarity).
double rank_similarity(const std::vector<int>& a, const std::vector<int>& b);

/// Cosine similarity matrix over embedding rows: symmetric, unit diagonal,
/// entries clamped to [-1, 1]. Row norms get a 1e-12 epsilon.
Eigen::MatrixXd similarity_matrix(const Eigen::MatrixXd& embeddings);

/// L = diag(S 1) - S.
Eigen::MatrixXd laplacian(const Eigen::MatrixXd& similarity);

struct FiedlerInfo {
  Eigen::VectorXd vector;  // sign-fixed: first component over 1e-10 is positive
  double value = 0.0;      // second-smallest eigenvalue
  bool degenerate = false; // Fiedler eigenvalue within tolerance of its neighbor
};

/// Eigenvector of the second-smallest eigenvalue of L (n >= 2).
FiedlerInfo fiedler_vector(const Eigen::MatrixXd& laplacian_matrix);

/// Seriation ranking: ascending ranks of the Fiedler vector entries.
std::vector<int> fiedler_ranking(const Eigen::MatrixXd& laplacian_matrix,
                                 FiedlerInfo* info = nullptr);

/// Exhaustive minimizer of sum_ij S_ij (R_i - R_j)^2 over permutations R,
/// lexicographically smallest on ties. Test oracle; refuses n > 8.
std::vector<int> brute_force_seriation(const Eigen::MatrixXd& similarity);

/// Forward value of the seriation ranking loss:
/// -(1/n) sum_i rank_similarity(rk(S[i,:]), rk(-|R - R[i]|)), in [-1, 1].
double ssr_loss_value(const Eigen::MatrixXd& similarity, const std::vector<int>& ranking);

/// Autodiff node for the loss above. The backward pass estimates the
/// gradient through each row's ranking operator with the blackbox
/// difference quotient (rk(x + lambda*g) - rk(x)) / lambda.
ad::Var ssr_loss(const ad::Var& similarity, const std::vector<int>& ranking,
                 double lambda_bb = 1.0);

/// Largest Frobenius-norm perturbation of S the seriation ranking is
/// guaranteed (to first order) to tolerate:
/// (1 - min_i sum_{t != i} |S_it| / (n-1)) / 2, clamped at 0.
double perturbation_budget(const Eigen::MatrixXd& similarity);

/// Weyl gap check |mu_i - lambda_i| <= ||B - A||_2 on every sorted eigenvalue
/// pair, plus the Fiedler-value bound lambda_2 <= n/(n-1) * min_i L_ii for
/// inputs that are graph Laplacians (zero row sums, non-positive
/// off-diagonal). 1e-8 slack throughout.
bool eigen_perturbation_check(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

}  // namespace rna
