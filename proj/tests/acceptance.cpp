// Acceptance suite: one checkable criterion per --criterion index, a PASS or
// FAIL line each. Criteria 7 and 8 need the public TU benchmark datasets
// (COX2, COX2_MD, BZR, BZR_MD) under RNA_DATA_ROOT and are SKIPped (exit 77)
// when the data is not present.

#include <chrono>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <iostream>
#include <random>
#include <string>
#include <vector>

#include "rna/align.hpp"
#include "rna/common.hpp"
#include "rna/encoder.hpp"
#include "rna/graph_data.hpp"
#include "rna/harmonic.hpp"
#include "rna/pipeline.hpp"
#include "rna/pseudolabel.hpp"
#include "rna/seriation.hpp"
#include "test_support.hpp"

using namespace rna;
using rna::testing::make_banded;
using rna::testing::make_robinson;
using rna::testing::same_up_to_reversal;

namespace {

enum class Outcome { kPass, kFail, kSkip };

struct Timer {
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
        .count();
  }
};

// --- criterion 1: fiedler_ranking == brute_force_seriation on Robinson S ---
Outcome criterion_1(std::string& detail) {
  Timer timer;
  std::mt19937_64 rng(20240801);
  int agree = 0;
  const int total = 200;
  for (int t = 0; t < total; ++t) {
    const int n = 4 + static_cast<int>(rng() % 5);
    const Eigen::MatrixXd s = make_robinson(n, rng, /*permute=*/t % 2 == 1);
    if (same_up_to_reversal(fiedler_ranking(laplacian(s)), brute_force_seriation(s)))
      ++agree;
  }
  const double elapsed = timer.seconds();
  detail = std::to_string(agree) + "/200 agreements in " + std::to_string(elapsed) +
           " s";
  return (agree == total && elapsed < 60.0) ? Outcome::kPass : Outcome::kFail;
}

// --- criterion 2: ranking stability inside the perturbation budget ---
Outcome criterion_2(std::string& detail) {
  Timer timer;
  std::mt19937_64 rng(20240802);
  std::normal_distribution<double> gauss;
  const int n = 8;
  long stable90 = 0, stable10 = 0;
  const long per_matrix = 200, matrices = 100;
  for (int m = 0; m < matrices; ++m) {
    const Eigen::MatrixXd s = make_banded(n, rng);
    const double budget = perturbation_budget(s);
    const std::vector<int> base = fiedler_ranking(laplacian(s));
    for (int t = 0; t < per_matrix; ++t) {
      Eigen::MatrixXd delta(n, n);
      for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) {
          const double g = i == j ? 0.0 : gauss(rng);
          delta(i, j) = g;
          delta(j, i) = g;
        }
      delta *= 1.0 / delta.norm();
      const auto r90 = fiedler_ranking(laplacian(s + delta * (0.9 * budget)));
      const auto r10 = fiedler_ranking(laplacian(s + delta * (0.1 * budget)));
      if (same_up_to_reversal(base, r90)) ++stable90;
      if (same_up_to_reversal(base, r10)) ++stable10;
    }
  }
  const double trials = static_cast<double>(per_matrix * matrices);
  const double f90 = stable90 / trials, f10 = stable10 / trials;
  const double elapsed = timer.seconds();
  detail = "stable at 90% budget: " + std::to_string(100 * f90) +
           "%, at 10%: " + std::to_string(100 * f10) + "% (" +
           std::to_string(elapsed) + " s)";
  return (f90 >= 0.95 && f10 >= 0.999 && elapsed < 300.0) ? Outcome::kPass
                                                          : Outcome::kFail;
}

// --- criterion 3: eigenvalue gap and Fiedler-value bounds ---
Outcome criterion_3(std::string& detail) {
  std::mt19937_64 rng(20240803);
  std::normal_distribution<double> gauss;
  int violations = 0;
  for (int t = 0; t < 500; ++t) {
    const int n = 2 + static_cast<int>(rng() % 9);
    Eigen::MatrixXd a(n, n), b(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j) {
        a(i, j) = gauss(rng);
        a(j, i) = a(i, j);
        b(i, j) = gauss(rng);
        b(j, i) = b(i, j);
      }
    if (!eigen_perturbation_check(a, b)) ++violations;
    // exercise the Fiedler-value clause on actual Laplacians as well
    if (t % 5 == 0) {
      const Eigen::MatrixXd s = make_banded(std::max(n, 3), rng);
      const Eigen::MatrixXd l = laplacian(s);
      if (!eigen_perturbation_check(l, l)) ++violations;
    }
  }
  detail = std::to_string(violations) + " violations in 500 pairs";
  return violations == 0 ? Outcome::kPass : Outcome::kFail;
}

// --- criterion 4: silhouette against the direct definition ---
Eigen::VectorXd silhouette_reference(const Eigen::MatrixXd& d,
                                     const std::vector<int>& labels) {
  const int n = static_cast<int>(d.rows());
  const int k = *std::max_element(labels.begin(), labels.end()) + 1;
  Eigen::VectorXd out(n);
  for (int i = 0; i < n; ++i) {
    double own = 0.0;
    long own_count = 0;
    for (int j = 0; j < n; ++j)
      if (j != i && labels[j] == labels[i]) {
        own += d(i, j);
        ++own_count;
      }
    if (own_count == 0) {
      out[i] = 0.0;
      continue;
    }
    const double a = own / static_cast<double>(own_count);
    double b = std::numeric_limits<double>::infinity();
    for (int c = 0; c < k; ++c) {
      if (c == labels[i]) continue;
      double sum = 0.0;
      long count = 0;
      for (int j = 0; j < n; ++j)
        if (labels[j] == c) {
          sum += d(i, j);
          ++count;
        }
      if (count > 0) b = std::min(b, sum / static_cast<double>(count));
    }
    const double m = std::max(a, b);
    out[i] = m > 0 ? (b - a) / m : 0.0;
  }
  return out;
}

Outcome criterion_4(std::string& detail) {
  std::mt19937_64 rng(20240804);
  std::normal_distribution<double> gauss;
  double worst = 0.0;
  for (int t = 0; t < 100; ++t) {
    const int n = 10 + static_cast<int>(rng() % 191);  // up to 200
    const int k = 2 + static_cast<int>(rng() % 5);
    Eigen::MatrixXd pts(n, 4);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < 4; ++j) pts(i, j) = gauss(rng);
    Eigen::MatrixXd d(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) d(i, j) = (pts.row(i) - pts.row(j)).norm();
    std::vector<int> labels(n);
    for (int i = 0; i < n; ++i) labels[i] = static_cast<int>(rng() % k);
    labels[0] = 0;
    labels[1 % n] = 1;
    worst = std::max(
        worst,
        (silhouette(d, labels) - silhouette_reference(d, labels)).cwiseAbs().maxCoeff());
  }
  detail = "max elementwise deviation " + std::to_string(worst);
  return worst <= 1e-10 ? Outcome::kPass : Outcome::kFail;
}

// --- criterion 5: empirical Gumbel-Sigmoid keep law ---
Outcome criterion_5(std::string& detail) {
  auto rng = substream(20240805, Stream::kGumbel);
  double worst = 0.0;
  for (double logit : {-2.0, -1.0, 0.0, 1.0, 2.0}) {
    auto logits = ad::constant(Eigen::MatrixXd::Constant(1, 1, logit));
    const int draws = 10000;
    int kept = 0;
    for (int i = 0; i < draws; ++i)
      kept += gumbel_sigmoid_sample(logits, 0.5, rng).hard[0];
    const double expect = 1.0 / (1.0 + std::exp(-logit));
    worst = std::max(worst, std::abs(static_cast<double>(kept) / draws - expect));
  }
  detail = "max |frequency - sigmoid| = " + std::to_string(worst);
  return worst <= 0.02 ? Outcome::kPass : Outcome::kFail;
}

// --- criterion 6: finite-difference gradient integrity ---
struct GradCheck {
  std::string name;
  double analytic;
  double fd;
};

bool check_model_gradients(std::vector<GradCheck>& failures) {
  AdaptConfig cfg;
  cfg.hidden_dim = 6;
  cfg.batch_size = 8;
  cfg.seed = 20240806;
  cfg.soft_subgraph = true;  // smooth extractor path for differencing
  GraphDataset ds = rna::testing::make_synthetic(8, 20240806);
  ModelState model = init_model(cfg, ds.feature_dim, 2);
  GraphBatch all = assemble_batch(ds, {0, 1, 2, 3, 4, 5, 6, 7});
  GraphBatch harmonic = assemble_batch(ds, {0, 1, 2, 3});
  GraphBatch inharmonic = assemble_batch(ds, {4, 5, 6, 7});

  auto ce_loss = [&] {
    auto logits = classify_logits(readout(message_pass(all, model.encoder), all),
                                  model.encoder);
    std::vector<int> rows, labels;
    for (int i = 0; i < all.graph_count(); ++i) {
      rows.push_back(i);
      labels.push_back(*all.labels[i]);
    }
    return ad::cross_entropy(logits, rows, labels, rows.size());
  };
  auto pseudo_loss = [&] {
    auto logits = classify_logits(readout(message_pass(all, model.encoder), all),
                                  model.encoder);
    // fixed confident rows with their current argmax as pseudo-labels
    return ad::cross_entropy(logits, {0, 2, 5}, {1, 0, 1}, 3.0);
  };
  auto inv_loss = [&] {
    auto rng = substream(31, Stream::kGumbel);
    return invariant_loss(inharmonic, model, rng);
  };
  auto ext_obj = [&] {
    auto rng = substream(37, Stream::kGumbel);
    return adversarial_loss(harmonic, inharmonic, model, rng).extractor;
  };
  auto disc_obj = [&] {
    auto rng = substream(41, Stream::kGumbel);
    return ad::scale(adversarial_loss(harmonic, inharmonic, model, rng).discriminator,
                     -1.0);
  };

  struct Case {
    const char* label;
    std::function<ad::Var()> build;
    std::vector<std::string> params;
  };
  // the fooling objective trains the extractor against the discriminator;
  // its encoder route is exercised separately under adv_train_encoder
  const std::vector<Case> cases = {
      {"cross_entropy", ce_loss, {"enc.l0.W", "enc.l1.W", "enc.head.W", "enc.l0.b"}},
      {"pseudo_label", pseudo_loss, {"enc.l1.W", "enc.head.b"}},
      {"invariant_kl", inv_loss, {"enc.l0.W", "ext.l1.W", "ext.l2.W"}},
      {"extractor_objective", ext_obj, {"ext.l1.W", "ext.l2.W", "dis.l1.W"}},
      {"discriminator_objective", disc_obj, {"dis.l1.W", "dis.l2.W", "dis.l1.b"}},
  };

  bool ok = true;
  auto run_cases = [&](ModelState& m, const std::vector<Case>& list) {
    for (const auto& c : list) {
      m.params.zero_grads();
      auto loss = c.build();
      ad::backward(loss);
      for (const auto& pname : c.params) {
        auto& entry = m.params.entries()[m.params.index_of(pname)];
        const Eigen::MatrixXd analytic =
            entry.var->grad.size() ? entry.var->grad
                                   : Eigen::MatrixXd::Zero(entry.var->value.rows(),
                                                           entry.var->value.cols());
        int checked = 0;
        for (Eigen::Index i = 0; i < entry.var->value.rows() && checked < 3; ++i)
          for (Eigen::Index j = 0; j < entry.var->value.cols() && checked < 3; ++j) {
            const double saved = entry.var->value(i, j);
            entry.var->value(i, j) = saved + 1e-6;
            const double hi = c.build()->value(0, 0);
            entry.var->value(i, j) = saved - 1e-6;
            const double lo = c.build()->value(0, 0);
            entry.var->value(i, j) = saved;
            const double fd = (hi - lo) / 2e-6;
            if (!rna::testing::grad_close(analytic(i, j), fd)) {
              failures.push_back(
                  {std::string(c.label) + "/" + pname, analytic(i, j), fd});
              ok = false;
            }
            ++checked;
          }
      }
    }
  };
  run_cases(model, cases);

  // encoder route of the fooling objective under the pass-through wiring
  AdaptConfig through = cfg;
  through.adv_train_encoder = true;
  ModelState model2 = init_model(through, ds.feature_dim, 2);
  const std::vector<Case> through_cases = {
      {"extractor_objective_through_encoder",
       [&] {
         auto rng = substream(43, Stream::kGumbel);
         return adversarial_loss(harmonic, inharmonic, model2, rng).extractor;
       },
       {"enc.l0.W", "ext.l1.W"}},
  };
  run_cases(model2, through_cases);
  return ok;
}

Outcome criterion_6(std::string& detail) {
  std::vector<GradCheck> failures;
  const bool ok = check_model_gradients(failures);
  // SSR surrogate: the blackbox estimate must be a descent direction
  std::mt19937_64 rng(20240807);
  std::normal_distribution<double> gauss;
  int descended = 0, informative = 0;
  for (int t = 0; t < 100; ++t) {
    Eigen::MatrixXd z(6, 8);
    for (int i = 0; i < 6; ++i)
      for (int j = 0; j < 8; ++j) z(i, j) = gauss(rng);
    auto zv = ad::parameter(z);
    auto sim = ad::cosine_similarity(zv);
    const auto ranking = fiedler_ranking(laplacian(similarity_matrix(z)));
    auto loss = ssr_loss(sim, ranking, 5.0);
    const double before = loss->value(0, 0);
    ad::backward(loss);
    if (zv->grad.norm() < 1e-14) continue;
    ++informative;
    const Eigen::MatrixXd z2 = z - 5e-3 * zv->grad / zv->grad.norm();
    if (ssr_loss_value(similarity_matrix(z2), ranking) <= before + 1e-12) ++descended;
  }
  const bool ssr_ok = descended >= 90;

  detail = std::to_string(failures.size()) + " finite-difference mismatches; ssr " +
           std::to_string(descended) + "/" + std::to_string(informative) +
           " descents";
  for (size_t i = 0; i < failures.size() && i < 5; ++i)
    detail += "\n    " + failures[i].name + ": analytic " +
              std::to_string(failures[i].analytic) + " vs fd " +
              std::to_string(failures[i].fd);
  return (ok && ssr_ok) ? Outcome::kPass : Outcome::kFail;
}

// --- criteria 7 and 8: desk-scale benchmark reproduction (needs real data) --

struct Task {
  std::string source, target;
  double expected;  // reported adapted accuracy (percent)
};

const std::vector<Task> kCrossTasks = {
    {"COX2", "COX2_MD", 57.2},
    {"COX2_MD", "COX2", 67.8},
    {"BZR", "BZR_MD", 52.3},
    {"BZR_MD", "BZR", 73.5},
};

bool cross_data_available() {
  for (const auto& t : kCrossTasks)
    if (!rna::testing::dataset_available(t.source)) return false;
  return true;
}

std::pair<GraphDataset, GraphDataset> load_task(const Task& task) {
  const auto root = rna::testing::data_root();
  GraphDataset source = load_tud_dataset(root / task.source);
  GraphDataset target = load_tud_dataset(root / task.target);
  harmonize_node_labels(source, target);
  return {std::move(source), std::move(target)};
}

Outcome criterion_7(std::string& detail) {
  if (!cross_data_available()) {
    detail = "COX2/COX2_MD/BZR/BZR_MD not found under " +
             rna::testing::data_root().string();
    return Outcome::kSkip;
  }
  AdaptConfig cfg;  // method defaults
  cfg.seed = 1;
  bool ok = true;
  double rna_sum = 0.0, baseline_sum = 0.0;
  detail = "";
  for (const auto& task : kCrossTasks) {
    auto [source, target] = load_task(task);
    MetricsReport report = run_benchmark(source, target, cfg, 5);
    const double mean = 100.0 * report.mean_accuracy;
    rna_sum += mean;
    baseline_sum += 100.0 * report.baseline_mean;
    const bool in_band = std::abs(mean - task.expected) <= 5.0;
    ok = ok && in_band;
    detail += "\n    " + task.source + "->" + task.target + ": " +
              std::to_string(mean) + "% (reported " + std::to_string(task.expected) +
              ", baseline " + std::to_string(100.0 * report.baseline_mean) + ")" +
              (in_band ? "" : "  [out of band]");
  }
  ok = ok && rna_sum > baseline_sum;
  detail += "\n    averages: adapted " + std::to_string(rna_sum / 4) +
            "% vs source-only " + std::to_string(baseline_sum / 4) + "%";
  return ok ? Outcome::kPass : Outcome::kFail;
}

Outcome criterion_8(std::string& detail) {
  if (!cross_data_available()) {
    detail = "COX2/COX2_MD/BZR/BZR_MD not found under " +
             rna::testing::data_root().string();
    return Outcome::kSkip;
  }
  const int repeats = 3;  // shared seeds across variants
  const std::vector<Ablation> variants = {Ablation::kNone, Ablation::kNoSsr,
                                          Ablation::kConfidenceOnly,
                                          Ablation::kNoAlign, Ablation::kNoFilter};
  std::vector<double> averages(variants.size(), 0.0);
  for (const auto& task : kCrossTasks) {
    auto [source, target] = load_task(task);
    for (int r = 0; r < repeats; ++r) {
      AdaptConfig cfg;
      cfg.seed = 1 + static_cast<std::uint64_t>(r);
      ModelState base = pretrain_source(source, cfg);
      for (size_t v = 0; v < variants.size(); ++v) {
        ModelState model = clone_model(base);
        AdaptConfig vc = cfg;
        vc.ablation = variants[v];
        adapt(model, target, vc);
        averages[v] += 100.0 * evaluate(model, target) /
                       (repeats * static_cast<double>(kCrossTasks.size()));
      }
    }
  }
  bool ok = true;
  detail = "";
  const char* names[] = {"full", "no-ssr", "confidence-only", "no-align",
                         "no-filter"};
  for (size_t v = 0; v < variants.size(); ++v) {
    detail += "\n    " + std::string(names[v]) + ": " + std::to_string(averages[v]) + "%";
    if (v > 0 && averages[0] < averages[v] - 1.0) {
      ok = false;
      detail += "  [orders above the full model]";
    }
  }
  return ok ? Outcome::kPass : Outcome::kFail;
}

// --- criterion 9: source-free guarantee with deleted source files ---
Outcome criterion_9(std::string& detail) {
  namespace fs = std::filesystem;
  const fs::path dir = rna::testing::unique_temp_path("rna_acceptance_source");
  fs::remove_all(dir);
  fs::create_directories(dir);
  write_tud_dataset(rna::testing::make_synthetic(40, 20240809, 0.0, "accsrc"), dir);

  AdaptConfig cfg;
  cfg.hidden_dim = 16;
  cfg.batch_size = 16;
  cfg.pretrain_epochs = 15;
  cfg.adapt_epochs = 5;
  cfg.seed = 20240809;
  ModelState model = pretrain_source(load_tud_dataset(dir), cfg);

  fs::remove_all(dir);
  if (fs::exists(dir)) {
    detail = "failed to delete the source directory";
    return Outcome::kFail;
  }

  GraphDataset target =
      rna::testing::make_synthetic(24, 20240810, /*shift=*/0.5, "acctgt");
  MetricsReport report = adapt(model, target, cfg);
  const bool ok = report.epochs.size() == 5;
  detail = ok ? "adaptation completed after source deletion"
              : "adaptation did not run to completion";
  return ok ? Outcome::kPass : Outcome::kFail;
}

using CriterionFn = Outcome (*)(std::string&);

struct Criterion {
  int id;
  const char* summary;
  CriterionFn fn;
};

const Criterion kCriteria[] = {
    {1, "seriation oracle equivalence on Robinson matrices", criterion_1},
    {2, "ranking stability within the perturbation budget", criterion_2},
    {3, "eigenvalue perturbation and Fiedler-value bounds", criterion_3},
    {4, "silhouette agrees with the direct definition", criterion_4},
    {5, "Gumbel-Sigmoid keep frequency follows sigmoid(logit)", criterion_5},
    {6, "loss gradients match central finite differences", criterion_6},
    {7, "cross-dataset benchmark means within 5 points", criterion_7},
    {8, "ablation ordering against the full model", criterion_8},
    {9, "adaptation succeeds after source deletion", criterion_9},
};

}  // namespace

int main(int argc, char** argv) {
  int only = -1;
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--criterion") == 0 && i + 1 < argc)
      only = std::atoi(argv[++i]);
  }

  int failures = 0, skips = 0, ran = 0;
  for (const auto& c : kCriteria) {
    if (only > 0 && c.id != only) continue;
    ++ran;
    std::string detail;
    Outcome outcome = Outcome::kFail;
    try {
      outcome = c.fn(detail);
    } catch (const std::exception& e) {
      detail = std::string("exception: ") + e.what();
    }
    const char* tag = outcome == Outcome::kPass  ? "[PASS]"
                      : outcome == Outcome::kSkip ? "[SKIP]"
                                                  : "[FAIL]";
    std::cout << tag << " criterion " << c.id << ": " << c.summary;
    if (!detail.empty()) std::cout << " -- " << detail;
    std::cout << std::endl;
    if (outcome == Outcome::kFail) ++failures;
    if (outcome == Outcome::kSkip) ++skips;
  }
  if (ran == 0) {
    std::cerr << "unknown criterion " << only << "\n";
    return 2;
  }
  if (failures > 0) return 1;
  if (skips == ran) return 77;
  return 0;
}
