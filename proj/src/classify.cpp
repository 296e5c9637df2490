#include "ahmkit/classify.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>

#include "ahmkit/error.hpp"
#include "ahmkit/text.hpp"

namespace ahmkit::classify {

using kernels::sigmoid;

Matrix to_matrix(const std::vector<std::vector<double>>& rows) {
  Matrix m(rows.size(), rows.empty() ? 0 : rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != m.cols) throw Error(ErrorCategory::schema, "ragged feature rows");
    std::copy(rows[i].begin(), rows[i].end(), m.row(i));
  }
  return m;
}

Matrix take_rows(const Matrix& x, std::span<const std::size_t> rows) {
  Matrix m(rows.size(), x.cols);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] >= x.rows) throw Error(ErrorCategory::schema, "row index out of range");
    std::copy(x.row(rows[i]), x.row(rows[i]) + x.cols, m.row(i));
  }
  return m;
}

Standardizer Standardizer::fit(const Matrix& x) {
  if (x.rows == 0) throw Error(ErrorCategory::insufficient_data, "standardizer: no rows");
  Standardizer s;
  s.mean.assign(x.cols, 0.0);
  s.scale.assign(x.cols, 0.0);
  const double n = static_cast<double>(x.rows);
  for (std::size_t i = 0; i < x.rows; ++i) {
    for (std::size_t j = 0; j < x.cols; ++j) s.mean[j] += x(i, j);
  }
  for (auto& m : s.mean) m /= n;
  for (std::size_t i = 0; i < x.rows; ++i) {
    for (std::size_t j = 0; j < x.cols; ++j) {
      const double d = x(i, j) - s.mean[j];
      s.scale[j] += d * d;
    }
  }
  for (auto& v : s.scale) {
    v = std::sqrt(v / n);
    if (!(v > 1e-12)) v = 1.0;
  }
  return s;
}

Matrix Standardizer::apply(const Matrix& x) const {
  if (x.cols != mean.size()) {
    throw Error(ErrorCategory::schema, "feature width " + std::to_string(x.cols) +
                                           " does not match model width " + std::to_string(mean.size()));
  }
  Matrix z = x;
  for (std::size_t i = 0; i < z.rows; ++i) {
    for (std::size_t j = 0; j < z.cols; ++j) z(i, j) = (z(i, j) - mean[j]) / scale[j];
  }
  return z;
}

double PortableRng::uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

std::size_t PortableRng::below(std::size_t n) {
  if (n <= 1) return 0;
  const std::uint64_t bound = static_cast<std::uint64_t>(n);
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % bound;
  for (;;) {
    const std::uint64_t r = engine_();
    if (r < limit) return static_cast<std::size_t>(r % bound);
  }
}

std::vector<double> balanced_weights(std::span<const double> y) {
  const double n = static_cast<double>(y.size());
  const double pos = std::accumulate(y.begin(), y.end(), 0.0);
  const double neg = n - pos;
  std::vector<double> w(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double n_class = y[i] > 0.5 ? pos : neg;
    w[i] = n / (2.0 * n_class);
  }
  return w;
}

namespace {

std::vector<std::size_t> all_rows_if_empty(std::span<const std::size_t> rows, std::size_t n) {
  if (!rows.empty()) return {rows.begin(), rows.end()};
  std::vector<std::size_t> all(n);
  std::iota(all.begin(), all.end(), std::size_t{0});
  return all;
}

void check_labels(const Matrix& x, const std::vector<LabelSet>& labels) {
  if (labels.size() != x.rows) throw Error(ErrorCategory::schema, "labels and features differ in length");
}

}  // namespace

LrModel train_lr(const Matrix& x, const std::vector<LabelSet>& labels,
                 std::span<const std::size_t> rows_in, const LrParams& params) {
  check_labels(x, labels);
  const auto rows = all_rows_if_empty(rows_in, x.rows);
  LrModel model;
  model.params = params;
  const Matrix xs = take_rows(x, rows);
  model.standardizer = Standardizer::fit(xs);
  const Matrix xz = model.standardizer.apply(xs);
  const std::size_t n = rows.size(), d = x.cols;

  for (std::size_t l = 0; l < kLabelCount; ++l) {
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) y[i] = labels[rows[i]][l] ? 1.0 : 0.0;
    const double pos = std::accumulate(y.begin(), y.end(), 0.0);
    LrHead& head = model.heads[l];
    head.w.assign(d, 0.0);
    head.prior = pos / static_cast<double>(n);
    if (pos == 0.0 || pos == static_cast<double>(n)) {
      head.constant = true;
      continue;
    }
    const std::vector<double> sw = params.balanced ? balanced_weights(y) : std::vector<double>(n, 1.0);
    const kernels::LrProblem problem{xz, y, sw, params.lambda};
    std::vector<double> gw(d);
    double gb = 0;
    auto kernel = params.kernel == KernelMode::parallel ? kernels::lr_loss_grad_parallel
                                                        : kernels::lr_loss_grad_serial;
    for (head.steps = 0; head.steps < params.max_steps; ++head.steps) {
      kernel(problem, head.w, head.b, gw, gb);
      double norm2 = gb * gb;
      for (double g : gw) norm2 += g * g;
      head.gradient_norm = std::sqrt(norm2);
      if (head.gradient_norm < params.tolerance) break;
      for (std::size_t j = 0; j < d; ++j) head.w[j] -= params.learning_rate * gw[j];
      head.b -= params.learning_rate * gb;
    }
  }
  return model;
}

MlpModel train_mlp(const Matrix& x, const std::vector<LabelSet>& labels,
                   std::span<const std::size_t> rows_in, const MlpParams& params) {
  check_labels(x, labels);
  const auto rows = all_rows_if_empty(rows_in, x.rows);
  MlpModel model;
  model.params = params;
  const Matrix xs = take_rows(x, rows);
  model.standardizer = Standardizer::fit(xs);
  const Matrix xz = model.standardizer.apply(xs);
  Matrix y(rows.size(), kLabelCount);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t l = 0; l < kLabelCount; ++l) y(i, l) = labels[rows[i]][l] ? 1.0 : 0.0;
  }
  model.shape = {x.cols, params.hidden, kLabelCount};
  const auto& s = model.shape;
  auto& w = model.weights;
  w.assign(s.parameter_count(), 0.0);

  // Glorot-uniform weights, zero biases.
  PortableRng rng(params.seed);
  const double l1 = std::sqrt(6.0 / static_cast<double>(s.inputs + s.hidden));
  const double l2 = std::sqrt(6.0 / static_cast<double>(s.hidden + s.outputs));
  for (std::size_t i = s.w1(); i < s.b1(); ++i) w[i] = (2.0 * rng.uniform() - 1.0) * l1;
  for (std::size_t i = s.w2(); i < s.b2(); ++i) w[i] = (2.0 * rng.uniform() - 1.0) * l2;

  constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  std::vector<double> g(w.size()), m1(w.size(), 0.0), m2(w.size(), 0.0);
  auto kernel = params.kernel == KernelMode::parallel ? kernels::mlp_loss_grad_parallel
                                                      : kernels::mlp_loss_grad_serial;
  double b1t = 1.0, b2t = 1.0;
  for (int epoch = 1; epoch <= params.epochs; ++epoch) {
    const double loss = kernel(s, xz, y, w, g);
    if (!std::isfinite(loss)) {
      throw Error(ErrorCategory::divergence, "mlp training diverged at epoch " + std::to_string(epoch));
    }
    model.final_loss = loss;
    b1t *= beta1;
    b2t *= beta2;
    for (std::size_t i = 0; i < w.size(); ++i) {
      m1[i] = beta1 * m1[i] + (1 - beta1) * g[i];
      m2[i] = beta2 * m2[i] + (1 - beta2) * g[i] * g[i];
      const double mh = m1[i] / (1 - b1t);
      const double vh = m2[i] / (1 - b2t);
      w[i] -= params.learning_rate * mh / (std::sqrt(vh) + eps);
    }
  }
  return model;
}

std::vector<Probabilities> predict_proba(const LrModel& model, const Matrix& x) {
  const Matrix xz = model.standardizer.apply(x);
  std::vector<Probabilities> out(x.rows);
  for (std::size_t i = 0; i < x.rows; ++i) {
    for (std::size_t l = 0; l < kLabelCount; ++l) {
      const auto& h = model.heads[l];
      if (h.constant) {
        out[i][l] = h.prior;
        continue;
      }
      double z = h.b;
      for (std::size_t j = 0; j < xz.cols; ++j) z += h.w[j] * xz(i, j);
      out[i][l] = sigmoid(z);
    }
  }
  return out;
}

std::vector<Probabilities> predict_proba(const MlpModel& model, const Matrix& x) {
  const Matrix xz = model.standardizer.apply(x);
  std::vector<Probabilities> out(x.rows);
  std::vector<double> h(model.shape.hidden), z(model.shape.outputs);
  for (std::size_t i = 0; i < x.rows; ++i) {
    kernels::mlp_forward_row(model.shape, model.weights, xz.row(i), h, z);
    for (std::size_t l = 0; l < kLabelCount; ++l) out[i][l] = sigmoid(z[l]);
  }
  return out;
}

std::vector<Probabilities> predict_proba(const Model& model, const Matrix& x) {
  return std::visit([&](const auto& m) { return predict_proba(m, x); }, model);
}

std::vector<LabelSet> predict(const std::vector<Probabilities>& probs, const Probabilities& thr) {
  std::vector<LabelSet> out(probs.size());
  for (std::size_t i = 0; i < probs.size(); ++i) {
    bool any = false;
    for (std::size_t l = 0; l < kLabelCount; ++l) {
      out[i][l] = probs[i][l] >= thr[l];
      any |= out[i][l];
    }
    if (!any) {
      const auto best = std::max_element(probs[i].begin(), probs[i].end()) - probs[i].begin();
      out[i][static_cast<std::size_t>(best)] = true;
    }
  }
  return out;
}

std::vector<LabelSet> predict(const std::vector<Probabilities>& probs, double threshold) {
  Probabilities t;
  t.fill(threshold);
  return predict(probs, t);
}

std::optional<double> roc_auc(std::span<const double> scores, const std::vector<bool>& truth) {
  if (scores.size() != truth.size()) throw Error(ErrorCategory::schema, "auc: length mismatch");
  const std::size_t n = scores.size();
  std::size_t pos = 0;
  for (bool t : truth) pos += t ? 1 : 0;
  const std::size_t neg = n - pos;
  if (pos == 0 || neg == 0) return std::nullopt;
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  // Average 1-based ranks over tie groups.
  double rank_sum_pos = 0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) {
      if (truth[order[k]]) rank_sum_pos += avg;
    }
    i = j + 1;
  }
  const double p = static_cast<double>(pos), q = static_cast<double>(neg);
  return (rank_sum_pos - p * (p + 1) / 2.0) / (p * q);
}

MetricsReport evaluate(const std::vector<LabelSet>& pred, const std::vector<Probabilities>& prob,
                       const std::vector<LabelSet>& truth) {
  if (truth.empty()) throw Error(ErrorCategory::insufficient_data, "evaluate: no records");
  if (pred.size() != truth.size() || prob.size() != truth.size()) {
    throw Error(ErrorCategory::schema, "evaluate: predictions, probabilities and truth differ in length");
  }
  MetricsReport m;
  m.n = truth.size();
  std::size_t exact = 0, wrong_cells = 0;
  for (std::size_t i = 0; i < m.n; ++i) {
    if (pred[i] == truth[i]) ++exact;
    for (std::size_t l = 0; l < kLabelCount; ++l) wrong_cells += pred[i][l] != truth[i][l] ? 1 : 0;
  }
  m.accuracy = static_cast<double>(exact) / static_cast<double>(m.n);
  m.hamming_loss = static_cast<double>(wrong_cells) / static_cast<double>(m.n * kLabelCount);

  double auc_sum = 0;
  std::size_t auc_labels = 0;
  for (std::size_t l = 0; l < kLabelCount; ++l) {
    double tp = 0, fp = 0, fn = 0;
    std::vector<double> scores(m.n);
    std::vector<bool> t(m.n);
    for (std::size_t i = 0; i < m.n; ++i) {
      tp += pred[i][l] && truth[i][l];
      fp += pred[i][l] && !truth[i][l];
      fn += !pred[i][l] && truth[i][l];
      scores[i] = prob[i][l];
      t[i] = truth[i][l];
    }
    m.per_label_precision[l] = tp + fp > 0 ? tp / (tp + fp) : 0.0;
    m.per_label_recall[l] = tp + fn > 0 ? tp / (tp + fn) : 0.0;
    m.per_label_f1[l] = 2 * tp + fp + fn > 0 ? 2 * tp / (2 * tp + fp + fn) : 0.0;
    if (tp + fn == 0) {
      m.notes.push_back("label " + std::string(features::to_string(features::kLabels[l])) +
                        " has no positive support; precision/recall/F1 set to 0");
    }
    m.per_label_auc[l] = roc_auc(scores, t);
    if (m.per_label_auc[l]) {
      auc_sum += *m.per_label_auc[l];
      ++auc_labels;
    } else {
      m.notes.push_back("label " + std::string(features::to_string(features::kLabels[l])) +
                        " lacks both classes; skipped in ROC-AUC");
    }
  }
  const double k = static_cast<double>(kLabelCount);
  m.precision = std::accumulate(m.per_label_precision.begin(), m.per_label_precision.end(), 0.0) / k;
  m.recall = std::accumulate(m.per_label_recall.begin(), m.per_label_recall.end(), 0.0) / k;
  m.f1 = std::accumulate(m.per_label_f1.begin(), m.per_label_f1.end(), 0.0) / k;
  if (auc_labels) m.roc_auc = auc_sum / static_cast<double>(auc_labels);
  return m;
}

std::vector<std::size_t> CvPlan::test_rows(std::size_t fold) const {
  std::vector<std::size_t> r;
  for (std::size_t i = 0; i < fold_of.size(); ++i) {
    if (fold_of[i] == fold) r.push_back(i);
  }
  return r;
}

std::vector<std::size_t> CvPlan::train_rows(std::size_t fold) const {
  std::vector<std::size_t> r;
  for (std::size_t i = 0; i < fold_of.size(); ++i) {
    if (fold_of[i] != fold) r.push_back(i);
  }
  return r;
}

std::string CvPlan::hash() const {
  std::string bytes;
  for (auto f : fold_of) bytes += std::to_string(f) + ",";
  return text::fnv1a_hex(bytes);
}

CvPlan make_cv_plan(const std::vector<LabelSet>& labels, std::uint64_t seed, std::size_t folds) {
  if (folds < 2) throw Error(ErrorCategory::usage, "need at least 2 folds");
  if (labels.size() < folds) {
    throw Error(ErrorCategory::insufficient_data, std::to_string(labels.size()) +
                                                      " records cannot fill " +
                                                      std::to_string(folds) + " folds");
  }
  CvPlan plan;
  plan.folds = folds;
  plan.seed = seed;
  const std::size_t n = labels.size();
  std::map<std::string, std::size_t> counts;
  for (const auto& l : labels) ++counts[features::label_key(l)];
  plan.stratum_of.resize(n);
  std::map<std::string, std::vector<std::size_t>> strata;
  for (std::size_t i = 0; i < n; ++i) {
    const auto key = features::label_key(labels[i]);
    plan.stratum_of[i] = counts[key] < kRareThreshold ? "rare" : key;
    strata[plan.stratum_of[i]].push_back(i);
  }
  plan.fold_of.assign(n, 0);
  PortableRng rng(seed);
  std::size_t position = 0;
  for (auto& [name, members] : strata) {
    for (std::size_t i = members.size(); i > 1; --i) std::swap(members[i - 1], members[rng.below(i)]);
    for (auto idx : members) plan.fold_of[idx] = position++ % folds;
  }
  return plan;
}

std::string_view to_string(ModelKind k) { return k == ModelKind::lr ? "lr" : "mlp"; }

double best_threshold(std::span<const double> scores, const std::vector<bool>& truth) {
  double best = 0.5, best_f1 = -1;
  for (int step = 1; step < 20; ++step) {
    const double t = 0.05 * step;
    double tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
      const bool p = scores[i] >= t;
      tp += p && truth[i];
      fp += p && !truth[i];
      fn += !p && truth[i];
    }
    const double f1 = 2 * tp + fp + fn > 0 ? 2 * tp / (2 * tp + fp + fn) : 0.0;
    const bool better = f1 > best_f1 + 1e-12 ||
                        (std::fabs(f1 - best_f1) <= 1e-12 && std::fabs(t - 0.5) < std::fabs(best - 0.5));
    if (better) {
      best = t;
      best_f1 = f1;
    }
  }
  return best;
}

namespace {

struct FoldOutput {
  std::vector<Probabilities> test_probs;
  Probabilities thresholds{};
  std::vector<std::string> notes;
};

FoldOutput run_fold(const Matrix& x, const std::vector<LabelSet>& labels, const CvPlan& plan,
                    const CvOptions& opt, std::size_t fold) {
  FoldOutput out;
  out.thresholds.fill(0.5);
  const auto train = plan.train_rows(fold);
  const auto test = plan.test_rows(fold);
  Model model;
  if (opt.model == ModelKind::lr) {
    auto m = train_lr(x, labels, train, opt.lr);
    for (std::size_t l = 0; l < kLabelCount; ++l) {
      if (m.heads[l].constant) {
        out.notes.push_back("fold " + std::to_string(fold) + ": constant head for " +
                            std::string(features::to_string(features::kLabels[l])));
      }
    }
    model = std::move(m);
  } else {
    model = train_mlp(x, labels, train, opt.mlp);
  }
  if (opt.optimize_thresholds) {
    const auto train_probs = predict_proba(model, take_rows(x, train));
    for (std::size_t l = 0; l < kLabelCount; ++l) {
      std::vector<double> s(train.size());
      std::vector<bool> t(train.size());
      for (std::size_t i = 0; i < train.size(); ++i) {
        s[i] = train_probs[i][l];
        t[i] = labels[train[i]][l];
      }
      out.thresholds[l] = best_threshold(s, t);
    }
  }
  out.test_probs = predict_proba(model, take_rows(x, test));
  return out;
}

}  // namespace

CvResult cross_validate(const Matrix& x, const std::vector<LabelSet>& labels, const CvPlan& plan,
                        const CvOptions& opt) {
  check_labels(x, labels);
  if (plan.fold_of.size() != x.rows) throw Error(ErrorCategory::schema, "cv plan does not match data");
  std::vector<FoldOutput> folds(plan.folds);
  std::vector<std::exception_ptr> errors(plan.folds);
#pragma omp parallel for schedule(dynamic) if (opt.parallel_folds)
  for (std::ptrdiff_t f = 0; f < static_cast<std::ptrdiff_t>(plan.folds); ++f) {
    const auto fu = static_cast<std::size_t>(f);
    try {
      folds[fu] = run_fold(x, labels, plan, opt, fu);
    } catch (...) {
      errors[fu] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  CvResult res;
  res.probabilities.resize(x.rows);
  res.predictions.resize(x.rows);
  for (std::size_t f = 0; f < plan.folds; ++f) {
    const auto test = plan.test_rows(f);
    const auto pred = predict(folds[f].test_probs, folds[f].thresholds);
    for (std::size_t i = 0; i < test.size(); ++i) {
      res.probabilities[test[i]] = folds[f].test_probs[i];
      res.predictions[test[i]] = pred[i];
    }
    res.notes.insert(res.notes.end(), folds[f].notes.begin(), folds[f].notes.end());
  }
  res.metrics = evaluate(res.predictions, res.probabilities, labels);
  return res;
}

csv::Table probability_table(const std::vector<std::string>& paper_ids,
                             const std::vector<std::string>& group_ids,
                             const std::vector<Probabilities>& probs) {
  if (paper_ids.size() != probs.size() || group_ids.size() != probs.size()) {
    throw Error(ErrorCategory::schema, "probability table: length mismatch");
  }
  csv::Table t;
  t.header = {"paper_id", "group_id"};
  for (auto l : features::kLabels) t.header.push_back("p_" + std::string(features::to_string(l)));
  for (std::size_t i = 0; i < probs.size(); ++i) {
    csv::Row row{paper_ids[i], group_ids[i]};
    for (double p : probs[i]) row.push_back(text::format_decimal(p));
    t.rows.push_back(std::move(row));
  }
  return t;
}

std::vector<ProbabilityRow> probabilities_from_table(const csv::Table& t) {
  const auto cp = t.column("paper_id");
  const auto cg = t.column("group_id");
  std::array<std::size_t, kLabelCount> cols{};
  for (std::size_t l = 0; l < kLabelCount; ++l) {
    cols[l] = t.column("p_" + std::string(features::to_string(features::kLabels[l])));
  }
  std::vector<ProbabilityRow> out;
  for (const auto& row : t.rows) {
    ProbabilityRow r{row[cp], row[cg], {}};
    for (std::size_t l = 0; l < kLabelCount; ++l) {
      const auto cell = text::trim(row[cols[l]]);
      if (!text::is_plain_decimal(cell)) {
        throw Error(ErrorCategory::parse, "probability csv: bad value '" + cell + "'");
      }
      r.p[l] = std::stod(cell);
      if (!(r.p[l] >= 0.0 && r.p[l] <= 1.0)) {
        throw Error(ErrorCategory::schema, "probability csv: value outside [0,1]");
      }
    }
    out.push_back(std::move(r));
  }
  return out;
}

csv::Table metrics_table(const MetricsReport& m) {
  csv::Table t;
  t.header = {"metric", "value"};
  auto add = [&](const std::string& k, double v) { t.rows.push_back({k, text::format_fixed(v, 4)}); };
  add("accuracy", m.accuracy);
  add("precision_macro", m.precision);
  add("recall_macro", m.recall);
  add("f1_macro", m.f1);
  if (m.roc_auc) {
    add("roc_auc_macro", *m.roc_auc);
  } else {
    t.rows.push_back({"roc_auc_macro", std::string(kNotReported)});
  }
  add("hamming_loss", m.hamming_loss);
  for (std::size_t l = 0; l < kLabelCount; ++l) {
    add("f1_" + std::string(features::to_string(features::kLabels[l])), m.per_label_f1[l]);
  }
  t.rows.push_back({"n", std::to_string(m.n)});
  return t;
}

std::string run_manifest(const CvPlan& plan, const CvOptions& o, const CvResult& r) {
  std::ostringstream s;
  s << "model=" << to_string(o.model) << "\n";
  s << "seed=" << plan.seed << "\n";
  s << "folds=" << plan.folds << "\n";
  s << "fold_hash=" << plan.hash() << "\n";
  if (o.model == ModelKind::lr) {
    s << "lr.lambda=" << text::format_decimal(o.lr.lambda) << "\n";
    s << "lr.learning_rate=" << text::format_decimal(o.lr.learning_rate) << "\n";
    s << "lr.max_steps=" << o.lr.max_steps << "\n";
    s << "lr.tolerance=" << text::format_decimal(o.lr.tolerance) << "\n";
    s << "lr.balanced=" << (o.lr.balanced ? "true" : "false") << "\n";
  } else {
    s << "mlp.hidden=" << o.mlp.hidden << "\n";
    s << "mlp.learning_rate=" << text::format_decimal(o.mlp.learning_rate) << "\n";
    s << "mlp.epochs=" << o.mlp.epochs << "\n";
    s << "mlp.seed=" << o.mlp.seed << "\n";
    s << "mlp.optimizer=adam\n";
  }
  s << "threshold=" << (o.optimize_thresholds ? "optimized" : "0.5") << "\n";
  for (const auto& row : metrics_table(r.metrics).rows) s << "metric." << row[0] << "=" << row[1] << "\n";
  return s.str();
}

}  // namespace ahmkit::classify
