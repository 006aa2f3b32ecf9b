#pragma once

#include <Eigen/Dense>
#include <vector>

namespace rna {

/// Confidence-filtered subset of a prediction matrix. `rows` index into the
/// prediction rows handed to confident_filter (positions within H).
struct ConfidentSet {
  std::vector<int> rows;
  std::vector<int> labels;       // argmax class, ties to the smallest index
  std::vector<double> confidence;

  std::size_t size() const { return rows.size(); }
  bool empty() const { return rows.empty(); }
};

/// Rows whose max probability clears tau. Requires 0 < tau < 1. An empty
/// result is legal.
ConfidentSet confident_filter(const Eigen::MatrixXd& probabilities, double tau);

/// -(1/denom) * sum over the confident set of log p[pseudo-label], where
/// denom is |C|, or the full row count when paper_exact_norm is set.
/// Zero when the set is empty.
double pseudo_label_loss(const ConfidentSet& confident,
                         const Eigen::MatrixXd& probabilities,
                         bool paper_exact_norm = false, double floor = 1e-12);

}  // namespace rna
