#pragma once

// Multi-label movement-type classifiers (one-vs-rest logistic regression and
// a one-hidden-layer perceptron), label-set–stratified cross-validation and
// the multi-label metric suite.

#include <array>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "ahmkit/csv.hpp"
#include "ahmkit/features.hpp"
#include "ahmkit/kernels.hpp"

namespace ahmkit::classify {

using features::kLabelCount;
using features::LabelSet;
using kernels::Matrix;
using Probabilities = std::array<double, kLabelCount>;

Matrix to_matrix(const std::vector<std::vector<double>>& rows);
/// Selects rows by index.
Matrix take_rows(const Matrix& x, std::span<const std::size_t> rows);

/// Per-column z-scoring fitted on training rows only. Constant columns get
/// a scale of 1.
struct Standardizer {
  std::vector<double> mean;
  std::vector<double> scale;

  static Standardizer fit(const Matrix& x);
  Matrix apply(const Matrix& x) const;
};

enum class KernelMode { parallel, reference };

struct LrParams {
  double lambda = 1.0;
  double learning_rate = 0.1;
  int max_steps = 5000;
  double tolerance = 1e-8;  // on the gradient norm
  bool balanced = true;     // weight samples by n / (2 n_class)
  KernelMode kernel = KernelMode::parallel;
};

struct LrHead {
  std::vector<double> w;
  double b = 0;
  bool constant = false;  // single-class training data: predicts the prior
  double prior = 0;
  int steps = 0;
  double gradient_norm = 0;
};

struct LrModel {
  Standardizer standardizer;
  std::array<LrHead, kLabelCount> heads;
  LrParams params;
};

struct MlpParams {
  std::size_t hidden = 32;
  double learning_rate = 0.01;
  int epochs = 2000;
  std::uint64_t seed = 42;
  KernelMode kernel = KernelMode::parallel;
};

struct MlpModel {
  Standardizer standardizer;
  kernels::MlpShape shape;
  std::vector<double> weights;
  MlpParams params;
  double final_loss = 0;
};

using Model = std::variant<LrModel, MlpModel>;

/// Uniform draws built directly from std::mt19937_64 output bits. The
/// engine's sequence is fixed by the standard; the std distributions are
/// not, so they are avoided to keep runs identical across toolchains.
class PortableRng {
 public:
  explicit PortableRng(std::uint64_t seed) : engine_(seed) {}
  /// Uniform double in [0,1) from the top 53 bits of one draw.
  double uniform();
  /// Uniform integer in [0, n) by rejection sampling.
  std::size_t below(std::size_t n);

 private:
  std::mt19937_64 engine_;
};

/// Balanced sample weights for a 0/1 target: n / (2 n_class).
std::vector<double> balanced_weights(std::span<const double> y);

/// Trains on the given rows (all rows when `rows` is empty). Single-class
/// heads become constant predictors at the class prior.
LrModel train_lr(const Matrix& x, const std::vector<LabelSet>& labels,
                 std::span<const std::size_t> rows, const LrParams& params = {});

/// Full-batch Adam on the mean binary cross-entropy. Throws
/// Error{divergence} naming the epoch if the loss becomes non-finite.
MlpModel train_mlp(const Matrix& x, const std::vector<LabelSet>& labels,
                   std::span<const std::size_t> rows, const MlpParams& params = {});

/// Throws Error{schema} on a feature-width mismatch.
std::vector<Probabilities> predict_proba(const Model& model, const Matrix& x);
std::vector<Probabilities> predict_proba(const LrModel& model, const Matrix& x);
std::vector<Probabilities> predict_proba(const MlpModel& model, const Matrix& x);

/// Label on iff p ≥ threshold; rows with no label on get their argmax label
/// (first index wins ties).
std::vector<LabelSet> predict(const std::vector<Probabilities>& probs, double threshold = 0.5);
std::vector<LabelSet> predict(const std::vector<Probabilities>& probs,
                              const Probabilities& thresholds);

struct MetricsReport {
  double accuracy = 0;  // exact match
  double precision = 0;
  double recall = 0;
  double f1 = 0;
  std::optional<double> roc_auc;  // macro over labels with both classes
  double hamming_loss = 0;
  Probabilities per_label_f1{};
  Probabilities per_label_precision{};
  Probabilities per_label_recall{};
  std::array<std::optional<double>, kLabelCount> per_label_auc{};
  std::vector<std::string> notes;
  std::size_t n = 0;
};

/// Rank-based (Mann–Whitney) AUC with average ranks for ties. nullopt when
/// either class is absent.
std::optional<double> roc_auc(std::span<const double> scores, const std::vector<bool>& truth);

MetricsReport evaluate(const std::vector<LabelSet>& predictions,
                       const std::vector<Probabilities>& probabilities,
                       const std::vector<LabelSet>& truth);

struct CvPlan {
  std::size_t folds = 5;
  std::uint64_t seed = 42;
  std::vector<std::size_t> fold_of;        // per record
  std::vector<std::string> stratum_of;     // label key or "rare"

  std::vector<std::size_t> test_rows(std::size_t fold) const;
  std::vector<std::size_t> train_rows(std::size_t fold) const;
  /// FNV-1a over the assignment, for run manifests.
  std::string hash() const;
};

inline constexpr std::size_t kRareThreshold = 5;

/// Label-powerset stratification; keys seen fewer than 5 times share one
/// "rare" stratum. Each stratum is shuffled by the seed and dealt
/// round-robin, the dealing position carrying over between strata.
CvPlan make_cv_plan(const std::vector<LabelSet>& labels, std::uint64_t seed, std::size_t folds = 5);

enum class ModelKind { lr, mlp };
std::string_view to_string(ModelKind k);

struct CvOptions {
  ModelKind model = ModelKind::lr;
  LrParams lr;
  MlpParams mlp;
  bool optimize_thresholds = false;  // per-label F1-optimal threshold on training predictions
  bool parallel_folds = true;
};

struct CvResult {
  std::vector<Probabilities> probabilities;  // pooled out-of-fold, per record
  std::vector<LabelSet> predictions;
  MetricsReport metrics;
  std::vector<std::string> notes;  // e.g. constant heads per fold
};

/// Trains one model per fold and scores the pooled out-of-fold predictions
/// once.
CvResult cross_validate(const Matrix& x, const std::vector<LabelSet>& labels, const CvPlan& plan,
                        const CvOptions& options);

/// Highest-F1 threshold on a 0.05 grid over (0,1); ties keep the one
/// closest to 0.5.
double best_threshold(std::span<const double> scores, const std::vector<bool>& truth);

/// paper_id, group_id, one probability column per label.
csv::Table probability_table(const std::vector<std::string>& paper_ids,
                             const std::vector<std::string>& group_ids,
                             const std::vector<Probabilities>& probs);

struct ProbabilityRow {
  std::string paper_id;
  std::string group_id;
  Probabilities p{};
};
std::vector<ProbabilityRow> probabilities_from_table(const csv::Table& t);

/// One row per metric: metric, value.
csv::Table metrics_table(const MetricsReport& m);

/// key=value lines: model, seed, hyperparameters, fold hash and metrics.
std::string run_manifest(const CvPlan& plan, const CvOptions& options, const CvResult& result);

}  // namespace ahmkit::classify
