#include "rna/autodiff.hpp"

#include <cmath>
#include <unordered_set>

#include "rna/common.hpp"

namespace rna::ad {

namespace {

bool any_requires_grad(const std::vector<Var>& vars) {
  for (const auto& v : vars)
    if (v && v->requires_grad) return true;
  return false;
}

Var make_op(Eigen::MatrixXd value, std::vector<Var> parents,
            std::function<void(Node&)> backprop) {
  const bool rg = any_requires_grad(parents);
  auto node = std::make_shared<Node>(std::move(value), rg);
  if (rg) {
    node->parents = std::move(parents);
    node->backprop = std::move(backprop);
  }
  return node;
}

void check_same_shape(const Var& a, const Var& b, const char* op) {
  if (a->value.rows() != b->value.rows() || a->value.cols() != b->value.cols())
    throw ConfigError(std::string(op) + ": shape mismatch");
}

}  // namespace

Var constant(Eigen::MatrixXd v) { return std::make_shared<Node>(std::move(v), false); }

Var constant(double v) {
  Eigen::MatrixXd m(1, 1);
  m(0, 0) = v;
  return constant(std::move(m));
}

Var parameter(Eigen::MatrixXd v) { return std::make_shared<Node>(std::move(v), true); }

Var detach(const Var& v) { return constant(v->value); }

void backward(const Var& root) {
  if (root->value.rows() != 1 || root->value.cols() != 1)
    throw ArgumentError("backward: root must be a 1x1 scalar");
  if (!root->requires_grad) return;

  // Iterative post-order DFS; backprop runs in reverse topological order.
  std::vector<Node*> order;
  std::unordered_set<Node*> visited;
  std::vector<std::pair<Node*, size_t>> stack;
  stack.emplace_back(root.get(), 0);
  visited.insert(root.get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      Node* p = node->parents[next++].get();
      if (p->requires_grad && !visited.count(p)) {
        visited.insert(p);
        stack.emplace_back(p, 0);
      }
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }
  root->ensure_grad()(0, 0) = 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* n = *it;
    if (n->backprop && n->grad.size() != 0) n->backprop(*n);
  }
}

Var matmul(const Var& a, const Var& b) {
  if (a->value.cols() != b->value.rows()) throw ConfigError("matmul: inner dims differ");
  return make_op(a->value * b->value, {a, b}, [a, b](Node& n) {
    if (a->requires_grad) a->ensure_grad().noalias() += n.grad * b->value.transpose();
    if (b->requires_grad) b->ensure_grad().noalias() += a->value.transpose() * n.grad;
  });
}

Var add(const Var& a, const Var& b) {
  check_same_shape(a, b, "add");
  return make_op(a->value + b->value, {a, b}, [a, b](Node& n) {
    if (a->requires_grad) a->ensure_grad() += n.grad;
    if (b->requires_grad) b->ensure_grad() += n.grad;
  });
}

Var sub(const Var& a, const Var& b) {
  check_same_shape(a, b, "sub");
  return make_op(a->value - b->value, {a, b}, [a, b](Node& n) {
    if (a->requires_grad) a->ensure_grad() += n.grad;
    if (b->requires_grad) b->ensure_grad() -= n.grad;
  });
}

Var mul(const Var& a, const Var& b) {
  check_same_shape(a, b, "mul");
  return make_op(a->value.cwiseProduct(b->value), {a, b}, [a, b](Node& n) {
    if (a->requires_grad) a->ensure_grad() += n.grad.cwiseProduct(b->value);
    if (b->requires_grad) b->ensure_grad() += n.grad.cwiseProduct(a->value);
  });
}

Var add_rowvec(const Var& x, const Var& row) {
  if (row->value.rows() != 1 || row->value.cols() != x->value.cols())
    throw ConfigError("add_rowvec: expected 1 x cols(x) row vector");
  Eigen::MatrixXd v = x->value;
  v.rowwise() += Eigen::RowVectorXd(row->value.row(0));
  return make_op(std::move(v), {x, row}, [x, row](Node& n) {
    if (x->requires_grad) x->ensure_grad() += n.grad;
    if (row->requires_grad) row->ensure_grad().row(0) += n.grad.colwise().sum();
  });
}

Var add_const(const Var& x, const Eigen::MatrixXd& c) {
  if (c.rows() != x->value.rows() || c.cols() != x->value.cols())
    throw ConfigError("add_const: shape mismatch");
  return make_op(x->value + c, {x}, [x](Node& n) {
    if (x->requires_grad) x->ensure_grad() += n.grad;
  });
}

Var scale(const Var& a, double s) {
  return make_op(a->value * s, {a}, [a, s](Node& n) {
    if (a->requires_grad) a->ensure_grad() += n.grad * s;
  });
}

Var relu(const Var& a) {
  return make_op(a->value.cwiseMax(0.0), {a}, [a](Node& n) {
    if (!a->requires_grad) return;
    a->ensure_grad() +=
        n.grad.cwiseProduct((a->value.array() > 0.0).cast<double>().matrix());
  });
}

namespace {
double sigmoid_scalar(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}
}  // namespace

Var sigmoid(const Var& a) {
  Eigen::MatrixXd v = a->value.unaryExpr([](double x) { return sigmoid_scalar(x); });
  return make_op(std::move(v), {a}, [a](Node& n) {
    if (!a->requires_grad) return;
    Eigen::ArrayXXd s = n.value.array();
    a->ensure_grad() += (n.grad.array() * s * (1.0 - s)).matrix();
  });
}

Var log_sigmoid(const Var& a) {
  Eigen::MatrixXd v = a->value.unaryExpr([](double x) {
    return x < 0 ? x - std::log1p(std::exp(x)) : -std::log1p(std::exp(-x));
  });
  return make_op(std::move(v), {a}, [a](Node& n) {
    if (!a->requires_grad) return;
    // d/dx log sigmoid(x) = 1 - sigmoid(x) = sigmoid(-x)
    Eigen::MatrixXd s = a->value.unaryExpr([](double x) { return sigmoid_scalar(-x); });
    a->ensure_grad() += n.grad.cwiseProduct(s);
  });
}

Var log_clamped(const Var& a, double floor) {
  Eigen::MatrixXd v =
      a->value.unaryExpr([floor](double x) { return std::log(std::max(x, floor)); });
  return make_op(std::move(v), {a, }, [a, floor](Node& n) {
    if (!a->requires_grad) return;
    Eigen::MatrixXd inv = a->value.unaryExpr(
        [floor](double x) { return x > floor ? 1.0 / x : 0.0; });
    a->ensure_grad() += n.grad.cwiseProduct(inv);
  });
}

Var sum(const Var& a) {
  Eigen::MatrixXd v(1, 1);
  v(0, 0) = a->value.sum();
  return make_op(std::move(v), {a}, [a](Node& n) {
    if (a->requires_grad) a->ensure_grad().array() += n.grad(0, 0);
  });
}

Var mean(const Var& a) {
  const double inv = 1.0 / static_cast<double>(a->value.size());
  Eigen::MatrixXd v(1, 1);
  v(0, 0) = a->value.sum() * inv;
  return make_op(std::move(v), {a}, [a, inv](Node& n) {
    if (a->requires_grad) a->ensure_grad().array() += n.grad(0, 0) * inv;
  });
}

Var gather_rows(const Var& x, std::vector<int> rows) {
  Eigen::MatrixXd v(static_cast<Eigen::Index>(rows.size()), x->value.cols());
  for (size_t k = 0; k < rows.size(); ++k) v.row(k) = x->value.row(rows[k]);
  return make_op(std::move(v), {x}, [x, rows = std::move(rows)](Node& n) {
    if (!x->requires_grad) return;
    auto& g = x->ensure_grad();
    for (size_t k = 0; k < rows.size(); ++k) g.row(rows[k]) += n.grad.row(k);
  });
}

Var concat_cols(const Var& a, const Var& b) {
  if (a->value.rows() != b->value.rows())
    throw ConfigError("concat_cols: row count mismatch");
  Eigen::MatrixXd v(a->value.rows(), a->value.cols() + b->value.cols());
  v << a->value, b->value;
  const Eigen::Index ca = a->value.cols();
  return make_op(std::move(v), {a, b}, [a, b, ca](Node& n) {
    if (a->requires_grad) a->ensure_grad() += n.grad.leftCols(ca);
    if (b->requires_grad) b->ensure_grad() += n.grad.rightCols(n.grad.cols() - ca);
  });
}

Var segment_mean(const Var& x, std::vector<int> membership, int groups) {
  if (static_cast<Eigen::Index>(membership.size()) != x->value.rows())
    throw ConfigError("segment_mean: membership size != rows");
  std::vector<double> count(groups, 0.0);
  for (int m : membership) {
    if (m < 0 || m >= groups) throw ConfigError("segment_mean: group id out of range");
    count[m] += 1.0;
  }
  Eigen::MatrixXd v = Eigen::MatrixXd::Zero(groups, x->value.cols());
  for (Eigen::Index i = 0; i < x->value.rows(); ++i)
    v.row(membership[i]) += x->value.row(i);
  for (int g = 0; g < groups; ++g)
    if (count[g] > 0) v.row(g) /= count[g];
  return make_op(std::move(v), {x},
                 [x, membership = std::move(membership), count](Node& n) {
                   if (!x->requires_grad) return;
                   auto& g = x->ensure_grad();
                   for (Eigen::Index i = 0; i < g.rows(); ++i) {
                     const int m = membership[i];
                     g.row(i) += n.grad.row(m) / count[m];
                   }
                 });
}

Var softmax_rows(const Var& logits) {
  Eigen::MatrixXd v = logits->value;
  for (Eigen::Index i = 0; i < v.rows(); ++i) {
    const double mx = v.row(i).maxCoeff();
    v.row(i) = (v.row(i).array() - mx).exp();
    v.row(i) /= v.row(i).sum();
  }
  return make_op(std::move(v), {logits}, [logits](Node& n) {
    if (!logits->requires_grad) return;
    auto& g = logits->ensure_grad();
    for (Eigen::Index i = 0; i < n.value.rows(); ++i) {
      const double dot = n.grad.row(i).dot(n.value.row(i));
      g.row(i) += n.value.row(i).cwiseProduct(
          (n.grad.row(i).array() - dot).matrix());
    }
  });
}

Var cross_entropy(const Var& logits, std::vector<int> rows, std::vector<int> labels,
                  double denom) {
  if (rows.size() != labels.size())
    throw ArgumentError("cross_entropy: rows/labels size mismatch");
  if (rows.empty()) return constant(0.0);
  if (denom <= 0) throw ArgumentError("cross_entropy: denom must be positive");

  // log-softmax per selected row, accumulated loss
  const Eigen::Index C = logits->value.cols();
  Eigen::MatrixXd probs(static_cast<Eigen::Index>(rows.size()), C);
  double loss = 0.0;
  for (size_t k = 0; k < rows.size(); ++k) {
    Eigen::RowVectorXd row = logits->value.row(rows[k]);
    const double mx = row.maxCoeff();
    Eigen::RowVectorXd e = (row.array() - mx).exp();
    const double z = e.sum();
    probs.row(k) = e / z;
    loss -= (row(labels[k]) - mx - std::log(z));
  }
  Eigen::MatrixXd v(1, 1);
  v(0, 0) = loss / denom;
  return make_op(std::move(v), {logits},
                 [logits, rows = std::move(rows), labels = std::move(labels), probs,
                  denom](Node& n) {
                   if (!logits->requires_grad) return;
                   auto& g = logits->ensure_grad();
                   const double s = n.grad(0, 0) / denom;
                   for (size_t k = 0; k < rows.size(); ++k) {
                     g.row(rows[k]) += s * probs.row(k);
                     g(rows[k], labels[k]) -= s;
                   }
                 });
}

Var kl_divergence_mean(const Var& p, const Var& q, double floor) {
  check_same_shape(p, q, "kl_divergence_mean");
  const double inv = 1.0 / static_cast<double>(p->value.rows());
  auto logf = [floor](double x) { return std::log(std::max(x, floor)); };
  double total = 0.0;
  for (Eigen::Index i = 0; i < p->value.rows(); ++i)
    for (Eigen::Index j = 0; j < p->value.cols(); ++j)
      total += p->value(i, j) * (logf(p->value(i, j)) - logf(q->value(i, j)));
  Eigen::MatrixXd v(1, 1);
  v(0, 0) = total * inv;
  return make_op(std::move(v), {p, q}, [p, q, floor, inv, logf](Node& n) {
    const double s = n.grad(0, 0) * inv;
    if (p->requires_grad) {
      auto& g = p->ensure_grad();
      for (Eigen::Index i = 0; i < g.rows(); ++i)
        for (Eigen::Index j = 0; j < g.cols(); ++j) {
          const double pd = p->value(i, j) > floor ? 1.0 : 0.0;
          g(i, j) += s * (logf(p->value(i, j)) - logf(q->value(i, j)) + pd);
        }
    }
    if (q->requires_grad) {
      auto& g = q->ensure_grad();
      for (Eigen::Index i = 0; i < g.rows(); ++i)
        for (Eigen::Index j = 0; j < g.cols(); ++j)
          if (q->value(i, j) > floor)
            g(i, j) -= s * p->value(i, j) / q->value(i, j);
    }
  });
}

Var cosine_similarity(const Var& z) {
  const Eigen::Index n = z->value.rows();
  if (n < 2) throw ArgumentError("cosine_similarity: need at least 2 rows");
  constexpr double kEps = 1e-12;
  Eigen::VectorXd norms(n);
  Eigen::MatrixXd zhat(n, z->value.cols());
  for (Eigen::Index i = 0; i < n; ++i) {
    norms[i] = z->value.row(i).norm() + kEps;
    zhat.row(i) = z->value.row(i) / norms[i];
  }
  Eigen::MatrixXd s = zhat * zhat.transpose();
  return make_op(std::move(s), {z}, [z, zhat, norms](Node& n_) {
    if (!z->requires_grad) return;
    // dL/dzhat = (G + G^T) zhat;  then through the row normalization.
    Eigen::MatrixXd dzhat = (n_.grad + n_.grad.transpose()) * zhat;
    auto& g = z->ensure_grad();
    for (Eigen::Index i = 0; i < g.rows(); ++i) {
      const Eigen::RowVectorXd zi = z->value.row(i);
      const Eigen::RowVectorXd gi = dzhat.row(i);
      const double nrm = std::max(zi.norm(), 1e-12);
      g.row(i) += gi / norms[i] - zi * (zi.dot(gi) / (nrm * norms[i] * norms[i]));
    }
  });
}

Var straight_through(const Var& soft) {
  Eigen::MatrixXd v =
      soft->value.unaryExpr([](double x) { return x > 0.5 ? 1.0 : 0.0; });
  return make_op(std::move(v), {soft}, [soft](Node& n) {
    if (soft->requires_grad) soft->ensure_grad() += n.grad;
  });
}

Var neighborhood_aggregate(const Var& x, const AggregationPlan& plan,
                           const Var& edge_weight) {
  const Eigen::Index n = x->value.rows();
  if (plan.self_coeff.size() != n)
    throw ConfigError("neighborhood_aggregate: self_coeff size != node count");
  const size_t m = plan.edges.size();
  if (static_cast<Eigen::Index>(m) != plan.edge_coeff.size())
    throw ConfigError("neighborhood_aggregate: edge_coeff size != edge count");
  if (edge_weight && edge_weight->value.size() != static_cast<Eigen::Index>(m))
    throw ConfigError("neighborhood_aggregate: edge_weight size != edge count");

  Eigen::MatrixXd out = plan.self_coeff.asDiagonal() * x->value;
  for (size_t e = 0; e < m; ++e) {
    const auto [u, v] = plan.edges[e];
    const double w = edge_weight ? edge_weight->value(static_cast<Eigen::Index>(e), 0) : 1.0;
    const double c = plan.edge_coeff[static_cast<Eigen::Index>(e)] * w;
    out.row(u) += c * x->value.row(v);
    out.row(v) += c * x->value.row(u);
  }
  std::vector<Var> parents = edge_weight ? std::vector<Var>{x, edge_weight}
                                         : std::vector<Var>{x};
  return make_op(std::move(out), std::move(parents), [x, edge_weight, plan](Node& n) {
    const size_t m = plan.edges.size();
    if (x->requires_grad) {
      auto& g = x->ensure_grad();
      g += plan.self_coeff.asDiagonal() * n.grad;
      for (size_t e = 0; e < m; ++e) {
        const auto [u, v] = plan.edges[e];
        const double w =
            edge_weight ? edge_weight->value(static_cast<Eigen::Index>(e), 0) : 1.0;
        const double c = plan.edge_coeff[static_cast<Eigen::Index>(e)] * w;
        g.row(v) += c * n.grad.row(u);
        g.row(u) += c * n.grad.row(v);
      }
    }
    if (edge_weight && edge_weight->requires_grad) {
      auto& g = edge_weight->ensure_grad();
      for (size_t e = 0; e < m; ++e) {
        const auto [u, v] = plan.edges[e];
        const double c = plan.edge_coeff[static_cast<Eigen::Index>(e)];
        g(static_cast<Eigen::Index>(e), 0) +=
            c * (n.grad.row(u).dot(x->value.row(v)) +
                 n.grad.row(v).dot(x->value.row(u)));
      }
    }
  });
}

}  // namespace rna::ad
