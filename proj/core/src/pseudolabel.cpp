#include "rna/pseudolabel.hpp"

#include <cmath>

#include "rna/common.hpp"

namespace rna {

ConfidentSet confident_filter(const Eigen::MatrixXd& probabilities, double tau) {
  if (!(tau > 0.0 && tau < 1.0))
    throw ArgumentError("confident_filter: tau must be in (0, 1)");
  ConfidentSet out;
  for (Eigen::Index i = 0; i < probabilities.rows(); ++i) {
    Eigen::Index argmax = 0;
    const double best = probabilities.row(i).maxCoeff(&argmax);
    if (best >= tau) {
      out.rows.push_back(static_cast<int>(i));
      out.labels.push_back(static_cast<int>(argmax));
      out.confidence.push_back(best);
    }
  }
  return out;
}

double pseudo_label_loss(const ConfidentSet& confident,
                         const Eigen::MatrixXd& probabilities,
                         bool paper_exact_norm, double floor) {
  if (confident.empty()) return 0.0;
  double total = 0.0;
  for (std::size_t k = 0; k < confident.rows.size(); ++k) {
    const double p = probabilities(confident.rows[k], confident.labels[k]);
    total -= std::log(std::max(p, floor));
  }
  const double denom = paper_exact_norm ? static_cast<double>(probabilities.rows())
                                        : static_cast<double>(confident.size());
  return total / denom;
}

}  // namespace rna
