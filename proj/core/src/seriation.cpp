#include "rna/seriation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "rna/common.hpp"

namespace rna {

namespace {

std::vector<int> ranks_sorted(const Eigen::VectorXd& values, bool descending) {
  const int n = static_cast<int>(values.size());
  std::vector<int> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  if (descending)
    std::stable_sort(idx.begin(), idx.end(),
                     [&](int a, int b) { return values[a] > values[b]; });
  else
    std::stable_sort(idx.begin(), idx.end(),
                     [&](int a, int b) { return values[a] < values[b]; });
  std::vector<int> rank(n);
  for (int pos = 0; pos < n; ++pos) rank[idx[pos]] = pos;
  return rank;
}

void require_square(const Eigen::MatrixXd& m, const char* op) {
  if (m.rows() != m.cols()) throw ArgumentError(std::string(op) + ": matrix not square");
}

void require_symmetric(const Eigen::MatrixXd& m, const char* op, double tol = 1e-8) {
  require_square(m, op);
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > tol)
    throw ArgumentError(std::string(op) + ": matrix not symmetric");
}

}  // namespace

std::vector<int> rank_descending(const Eigen::VectorXd& values) {
  return ranks_sorted(values, true);
}

std::vector<int> rank_ascending(const Eigen::VectorXd& values) {
  return ranks_sorted(values, false);
}

double rank_similarity(const std::vector<int>& a, const std::vector<int>& b) {
  if (a.size() != b.size() || a.size() < 2)
    throw ArgumentError("rank_similarity: need two equal-length rankings, n >= 2");
  const double mu = (static_cast<double>(a.size()) - 1.0) / 2.0;
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    const double x = a[i] - mu;
    const double y = b[i] - mu;
    dot += x * y;
    na += x * x;
    nb += y * y;
  }
  return dot / std::sqrt(na * nb);
}

Eigen::MatrixXd similarity_matrix(const Eigen::MatrixXd& embeddings) {
  const Eigen::Index n = embeddings.rows();
  if (n < 2) throw ArgumentError("similarity_matrix: need at least 2 rows");
  constexpr double kEps = 1e-12;
  Eigen::MatrixXd zhat(n, embeddings.cols());
  for (Eigen::Index i = 0; i < n; ++i)
    zhat.row(i) = embeddings.row(i) / (embeddings.row(i).norm() + kEps);
  Eigen::MatrixXd s = zhat * zhat.transpose();
  s = ((s + s.transpose()) / 2.0).cwiseMax(-1.0).cwiseMin(1.0);
  s.diagonal().setOnes();
  return s;
}

Eigen::MatrixXd laplacian(const Eigen::MatrixXd& similarity) {
  require_symmetric(similarity, "laplacian");
  Eigen::MatrixXd l = -similarity;
  l.diagonal() += similarity.rowwise().sum();
  return l;
}

FiedlerInfo fiedler_vector(const Eigen::MatrixXd& laplacian_matrix) {
  require_symmetric(laplacian_matrix, "fiedler_vector");
  const Eigen::Index n = laplacian_matrix.rows();
  if (n < 2) throw ArgumentError("fiedler_vector: need n >= 2");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(laplacian_matrix);
  if (solver.info() != Eigen::Success)
    throw NumericError("fiedler_vector: eigensolver failed to converge");

  FiedlerInfo info;
  info.value = solver.eigenvalues()[1];
  info.vector = solver.eigenvectors().col(1);
  // degenerate: the Fiedler eigenvalue ties with a neighbor, so the returned
  // eigenvector is only one of several valid choices
  const double scale = std::max(1.0, std::abs(solver.eigenvalues()[n - 1]));
  info.degenerate = (info.value - solver.eigenvalues()[0]) <= 1e-9 * scale ||
                    (n > 2 && (solver.eigenvalues()[2] - info.value) <= 1e-9 * scale);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (std::abs(info.vector[i]) > 1e-10) {
      if (info.vector[i] < 0) info.vector = -info.vector;
      break;
    }
  }
  return info;
}

std::vector<int> fiedler_ranking(const Eigen::MatrixXd& laplacian_matrix,
                                 FiedlerInfo* info) {
  FiedlerInfo fi = fiedler_vector(laplacian_matrix);
  if (info) *info = fi;
  return rank_ascending(fi.vector);
}

std::vector<int> brute_force_seriation(const Eigen::MatrixXd& similarity) {
  require_square(similarity, "brute_force_seriation");
  const int n = static_cast<int>(similarity.rows());
  if (n > 8)
    throw ArgumentError("brute_force_seriation: refusing n > 8 (combinatorial)");
  if (n < 2) throw ArgumentError("brute_force_seriation: need n >= 2");

  std::vector<int> perm(n), best(n);
  std::iota(perm.begin(), perm.end(), 0);
  best = perm;
  double best_cost = std::numeric_limits<double>::infinity();
  do {
    double cost = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) {
        const double d = static_cast<double>(perm[i] - perm[j]);
        cost += 2.0 * similarity(i, j) * d * d;
      }
    // next_permutation enumerates lexicographically, so strict improvement
    // keeps the lexicographically smallest minimizer
    if (cost < best_cost - 1e-12) {
      best_cost = cost;
      best = perm;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

namespace {

Eigen::VectorXd proximity_scores(const std::vector<int>& ranking, int anchor) {
  Eigen::VectorXd prox(static_cast<Eigen::Index>(ranking.size()));
  for (size_t j = 0; j < ranking.size(); ++j)
    prox[static_cast<Eigen::Index>(j)] =
        -std::abs(static_cast<double>(ranking[j] - ranking[anchor]));
  return prox;
}

}  // namespace

double ssr_loss_value(const Eigen::MatrixXd& similarity,
                      const std::vector<int>& ranking) {
  require_square(similarity, "ssr_loss");
  const int n = static_cast<int>(similarity.rows());
  if (n < 2) throw ArgumentError("ssr_loss: need a batch of at least 2");
  if (static_cast<int>(ranking.size()) != n)
    throw ArgumentError("ssr_loss: ranking size mismatch");
  double total = 0.0;
  for (int i = 0; i < n; ++i)
    total += rank_similarity(rank_descending(similarity.row(i)),
                             rank_descending(proximity_scores(ranking, i)));
  return -total / n;
}

ad::Var ssr_loss(const ad::Var& similarity, const std::vector<int>& ranking,
                 double lambda_bb) {
  if (lambda_bb <= 0) throw ArgumentError("ssr_loss: lambda_bb must be > 0");
  const double value = ssr_loss_value(similarity->value, ranking);
  Eigen::MatrixXd v(1, 1);
  v(0, 0) = value;
  const int n = static_cast<int>(similarity->value.rows());

  auto node = std::make_shared<ad::Node>(std::move(v), similarity->requires_grad);
  if (!similarity->requires_grad) return node;
  node->parents = {similarity};
  node->backprop = [similarity, ranking, lambda_bb, n](ad::Node& out) {
    const double upstream = out.grad(0, 0);
    if (upstream == 0.0) return;
    auto& g = similarity->ensure_grad();
    const double mu = (n - 1) / 2.0;
    for (int i = 0; i < n; ++i) {
      const Eigen::VectorXd row = similarity->value.row(i);
      const std::vector<int> u = rank_descending(row);
      const std::vector<int> target = rank_descending(proximity_scores(ranking, i));
      // analytic gradient of the centered-rank cosine wrt the (relaxed) ranks
      Eigen::VectorXd a(n), b(n);
      for (int j = 0; j < n; ++j) {
        a[j] = u[j] - mu;
        b[j] = target[j] - mu;
      }
      const double na = a.norm(), nb = b.norm();
      const double rho = a.dot(b) / (na * nb);
      Eigen::VectorXd drho = b / (na * nb) - a * (rho / (na * na));
      drho.array() -= drho.mean();  // ranks live on the centered hyperplane
      Eigen::VectorXd grad_u = drho * (-upstream / n);
      // blackbox difference quotient through the ranking operator
      const std::vector<int> u_shift =
          rank_descending(row + lambda_bb * grad_u);
      for (int j = 0; j < n; ++j)
        g(i, j) += static_cast<double>(u_shift[j] - u[j]) / lambda_bb;
    }
  };
  return node;
}

double perturbation_budget(const Eigen::MatrixXd& similarity) {
  require_symmetric(similarity, "perturbation_budget");
  const Eigen::Index n = similarity.rows();
  if (n < 2) throw ArgumentError("perturbation_budget: need n >= 2");
  double min_row = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < n; ++i) {
    double s = 0.0;
    for (Eigen::Index t = 0; t < n; ++t)
      if (t != i) s += std::abs(similarity(i, t));
    min_row = std::min(min_row, s);
  }
  return std::max(0.0, (1.0 - min_row / static_cast<double>(n - 1)) / 2.0);
}

namespace {

bool is_graph_laplacian(const Eigen::MatrixXd& m, double tol) {
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    if (std::abs(m.row(i).sum()) > tol) return false;
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      if (i != j && m(i, j) > tol) return false;
  }
  return true;
}

bool fiedler_bound_holds(const Eigen::MatrixXd& l, double slack) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(l);
  if (solver.info() != Eigen::Success)
    throw NumericError("eigen_perturbation_check: eigensolver failed");
  const double n = static_cast<double>(l.rows());
  return solver.eigenvalues()[1] <= n / (n - 1.0) * l.diagonal().minCoeff() + slack;
}

}  // namespace

bool eigen_perturbation_check(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  require_symmetric(a, "eigen_perturbation_check");
  require_symmetric(b, "eigen_perturbation_check");
  if (a.rows() != b.rows())
    throw ArgumentError("eigen_perturbation_check: shape mismatch");
  constexpr double kSlack = 1e-8;

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> sa(a), sb(b), sd(b - a);
  if (sa.info() != Eigen::Success || sb.info() != Eigen::Success ||
      sd.info() != Eigen::Success)
    throw NumericError("eigen_perturbation_check: eigensolver failed");
  const double gap_bound = sd.eigenvalues().cwiseAbs().maxCoeff();
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    if (std::abs(sb.eigenvalues()[i] - sa.eigenvalues()[i]) > gap_bound + kSlack)
      return false;

  const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
  if (a.rows() >= 2 && is_graph_laplacian(a, kSlack * scale) &&
      !fiedler_bound_holds(a, kSlack))
    return false;
  const double scale_b = std::max(1.0, b.cwiseAbs().maxCoeff());
  if (b.rows() >= 2 && is_graph_laplacian(b, kSlack * scale_b) &&
      !fiedler_bound_holds(b, kSlack))
    return false;
  return true;
}

}  // namespace rna
