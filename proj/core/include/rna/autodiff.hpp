#pragma once

#include <Eigen/Dense>
#include <functional>
#include <memory>
#include <vector>

namespace rna::ad {

// Reverse-mode tape over dense double matrices. Graphs are built per training
// step as shared_ptr DAGs and freed when the roots go out of scope; parameter
// nodes persist across steps and accumulate gradients until zeroed.
class Node;
using Var = std::shared_ptr<Node>;

class Node {
 public:
  Eigen::MatrixXd value;
  Eigen::MatrixXd grad;  // allocated on first use
  std::vector<Var> parents;
  std::function<void(Node&)> backprop;  // scatters this->grad into parents
  bool requires_grad = false;

  explicit Node(Eigen::MatrixXd v, bool rg = false)
      : value(std::move(v)), requires_grad(rg) {}

  Eigen::MatrixXd& ensure_grad() {
    if (grad.size() == 0) grad = Eigen::MatrixXd::Zero(value.rows(), value.cols());
    return grad;
  }
  void zero_grad() {
    if (grad.size() != 0) grad.setZero();
  }
  double scalar() const { return value(0, 0); }
};

Var constant(Eigen::MatrixXd v);
Var constant(double v);
Var parameter(Eigen::MatrixXd v);

/// Value copy with the gradient path severed.
Var detach(const Var& v);

/// Reverse pass from a 1x1 root. Seeds d(root)/d(root) = 1.
void backward(const Var& root);

// Elementwise / linear algebra primitives.
Var matmul(const Var& a, const Var& b);
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var add_rowvec(const Var& x, const Var& row);  // broadcast a 1xC row over rows
Var add_const(const Var& x, const Eigen::MatrixXd& c);
Var scale(const Var& a, double s);
Var relu(const Var& a);
Var sigmoid(const Var& a);
Var log_sigmoid(const Var& a);
Var log_clamped(const Var& a, double floor);
Var sum(const Var& a);
Var mean(const Var& a);

// Structured ops.
Var gather_rows(const Var& x, std::vector<int> rows);
Var concat_cols(const Var& a, const Var& b);
Var segment_mean(const Var& x, std::vector<int> membership, int groups);
Var softmax_rows(const Var& logits);

/// -(1/denom) * sum_k log softmax(logits)[rows[k], labels[k]].
/// With empty rows the result is a constant zero.
Var cross_entropy(const Var& logits, std::vector<int> rows, std::vector<int> labels,
                  double denom);

/// (1/rows) * sum_i KL(p_row_i || q_row_i), probabilities in, floor applied
/// inside the logarithms.
Var kl_divergence_mean(const Var& p, const Var& q, double floor = 1e-12);

/// Rowwise cosine similarity matrix of embeddings (rows of z); norms get a
/// 1e-12 additive epsilon so zero rows stay finite.
Var cosine_similarity(const Var& z);

/// Forward: hard 0/1 threshold of soft at 0.5. Backward: identity
/// (straight-through).
Var straight_through(const Var& soft);

// Shared-weight graph aggregation: out_u = self_coeff[u] * x_u
// + sum_{e=(u,v)} edge_coeff[e] * w_e * (x_v contribution both directions).
// Coefficients are fixed per batch; `edge_weight` (one scalar per undirected
// edge) is optional and may carry gradient.
struct AggregationPlan {
  std::vector<std::pair<int, int>> edges;  // local node indices
  Eigen::VectorXd edge_coeff;
  Eigen::VectorXd self_coeff;
};
Var neighborhood_aggregate(const Var& x, const AggregationPlan& plan,
                           const Var& edge_weight = nullptr);

}  // namespace rna::ad
