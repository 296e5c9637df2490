#include "ahmkit/agreement.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <set>

#include "ahmkit/error.hpp"
#include "ahmkit/text.hpp"

namespace ahmkit::agreement {

using schema::PatientGroup;
using schema::StudyExtraction;
using schema::TermSet;

KappaBreakdown cohen_kappa(std::span<const LabelPair> pairs) {
  if (pairs.empty()) throw Error(ErrorCategory::insufficient_data, "kappa: no pairs");
  KappaBreakdown out;
  out.n_pairs = pairs.size();
  std::map<std::string, std::pair<std::size_t, std::size_t>> counts;
  std::size_t agree = 0;
  for (const auto& [a, b] : pairs) {
    ++counts[a].first;
    ++counts[b].second;
    if (a == b) ++agree;
  }
  const double n = static_cast<double>(pairs.size());
  out.p_o = static_cast<double>(agree) / n;
  for (const auto& [label, c] : counts) {
    out.categories.push_back(label);
    out.marginal_a.push_back(static_cast<double>(c.first) / n);
    out.marginal_b.push_back(static_cast<double>(c.second) / n);
    out.p_e += out.marginal_a.back() * out.marginal_b.back();
  }
  if (out.p_e >= 1.0 - 1e-12) {
    if (out.p_o < 1.0) {
      throw Error(ErrorCategory::degenerate, "kappa undefined: chance agreement is 1");
    }
    out.degenerate = true;
    out.kappa = 1.0;
    return out;
  }
  out.kappa = (out.p_o - out.p_e) / (1.0 - out.p_e);
  return out;
}

IccBreakdown icc_2_1(std::span<const std::array<double, 2>> ratings) {
  const std::size_t n = ratings.size();
  if (n < 2) throw Error(ErrorCategory::insufficient_data, "ICC needs at least two subjects");
  constexpr std::size_t k = 2;
  IccBreakdown out;
  out.n = n;
  out.k = k;

  double grand = 0;
  std::array<double, k> col_mean{};
  std::vector<double> row_mean(n);
  for (std::size_t i = 0; i < n; ++i) {
    row_mean[i] = (ratings[i][0] + ratings[i][1]) / 2.0;
    for (std::size_t j = 0; j < k; ++j) col_mean[j] += ratings[i][j];
    grand += ratings[i][0] + ratings[i][1];
  }
  grand /= static_cast<double>(n * k);
  for (auto& c : col_mean) c /= static_cast<double>(n);

  double ss_r = 0, ss_c = 0, ss_e = 0, ss_t = 0;
  for (std::size_t i = 0; i < n; ++i) ss_r += (row_mean[i] - grand) * (row_mean[i] - grand);
  ss_r *= static_cast<double>(k);
  for (double c : col_mean) ss_c += (c - grand) * (c - grand);
  ss_c *= static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      double x = ratings[i][j];
      double resid = x - row_mean[i] - col_mean[j] + grand;
      ss_e += resid * resid;
      ss_t += (x - grand) * (x - grand);
    }
  }
  out.ms_r = ss_r / static_cast<double>(n - 1);
  out.ms_c = ss_c / static_cast<double>(k - 1);
  out.ms_e = ss_e / static_cast<double>((n - 1) * (k - 1));

  if (ss_t <= 1e-300) {
    out.degenerate = true;
    out.icc = 1.0;
    return out;
  }
  const double kd = static_cast<double>(k);
  const double nd = static_cast<double>(n);
  out.icc = (out.ms_r - out.ms_e) /
            (out.ms_r + (kd - 1.0) * out.ms_e + (kd / nd) * (out.ms_c - out.ms_e));
  return out;
}

double jaccard(const TermSet& a, const TermSet& b) {
  if (a.empty() && b.empty()) return 1.0;
  std::size_t common = 0;
  for (const auto& t : a) common += b.count(t);
  const std::size_t uni = a.size() + b.size() - common;
  return static_cast<double>(common) / static_cast<double>(uni);
}

// ------------------------------------------------------ similarity matrix

namespace {
std::pair<std::string, std::string> key(std::string_view a, std::string_view b) {
  auto fa = text::fold(a);
  auto fb = text::fold(b);
  if (fb < fa) std::swap(fa, fb);
  return {fa, fb};
}
}  // namespace

void SimilarityMatrix::set(std::string_view a, std::string_view b, double score) {
  if (!(score >= 0.0 && score <= 1.0)) {
    throw Error(ErrorCategory::schema, "similarity score outside [0,1] for '" +
                                           std::string(a) + "' / '" + std::string(b) + "'");
  }
  auto k = key(a, b);
  if (k.first == k.second) {
    if (score != 1.0) throw Error(ErrorCategory::schema, "diagonal similarity must be 1");
    return;
  }
  auto [it, inserted] = entries_.emplace(k, score);
  if (!inserted && it->second != score) {
    throw Error(ErrorCategory::schema,
                "conflicting similarity for '" + k.first + "' / '" + k.second + "'");
  }
}

double SimilarityMatrix::get(std::string_view a, std::string_view b) const {
  auto k = key(a, b);
  if (k.first == k.second) return 1.0;
  auto it = entries_.find(k);
  return it == entries_.end() ? 0.0 : it->second;
}

SimilarityMatrix SimilarityMatrix::defaults() {
  SimilarityMatrix m;
  m.set("head drop", "forward flexion", 0.8);
  m.set("anterocollis", "head drop", 0.7);
  m.set("cervical dystonia", "torticollis", 0.6);
  return m;
}

SimilarityMatrix SimilarityMatrix::from_table(const csv::Table& table) {
  const auto ca = table.column("term_a");
  const auto cb = table.column("term_b");
  const auto cs = table.column("score");
  SimilarityMatrix m;
  for (const auto& row : table.rows) {
    auto s = text::trim(row[cs]);
    if (!text::is_plain_decimal(s)) {
      throw Error(ErrorCategory::parse, "similarity matrix: bad score '" + row[cs] + "'");
    }
    m.set(row[ca], row[cb], std::stod(s));
  }
  return m;
}

SemanticMatch max_semantic_similarity(const TermSet& a, const TermSet& b,
                                      const SimilarityMatrix& matrix) {
  std::vector<std::string> only_a, only_b;
  bool intersect = false;
  for (const auto& t : a) {
    if (b.count(t)) intersect = true;
    else only_a.push_back(t);
  }
  for (const auto& t : b) {
    if (!a.count(t)) only_b.push_back(t);
  }
  if (a.empty() && b.empty()) return {0.0, OverlapNote::both_empty};
  if ((only_a.empty() || only_b.empty()) && intersect) return {1.0, OverlapNote::exact_overlap};
  double best = 0.0;
  for (const auto& x : only_a) {
    for (const auto& y : only_b) best = std::max(best, matrix.get(x, y));
  }
  return {best, OverlapNote::none};
}

AdjustedAgreement similarity_adjusted_agreement(
    std::span<const std::pair<TermSet, TermSet>> pairs, const SimilarityMatrix& matrix,
    double threshold) {
  if (!(threshold >= 0.0 && threshold <= 1.0)) {
    throw Error(ErrorCategory::usage, "similarity threshold must lie in [0,1]");
  }
  if (pairs.empty()) {
    throw Error(ErrorCategory::insufficient_data, "similarity agreement: no pairs");
  }
  std::size_t agree = 0;
  double sim_sum = 0;
  for (const auto& [a, b] : pairs) {
    if (a == b) {
      ++agree;
      sim_sum += 1.0;
      continue;
    }
    double s = max_semantic_similarity(a, b, matrix).s_max;
    sim_sum += s;
    if (s >= threshold) ++agree;
  }
  const double n = static_cast<double>(pairs.size());
  return {static_cast<double>(agree) / n, sim_sum / n, pairs.size()};
}

std::string_view to_string(MetricKind k) {
  switch (k) {
    case MetricKind::kappa: return "kappa";
    case MetricKind::icc: return "icc";
    case MetricKind::jaccard: return "jaccard";
    case MetricKind::semantic: return "semantic";
  }
  return "";
}

const FieldAgreement* AgreementReport::find(std::string_view field, MetricKind kind) const {
  for (const auto& e : entries) {
    if (e.field == field && e.kind == kind) return &e;
  }
  return nullptr;
}

// ------------------------------------------------------ per-field report

namespace {

using GroupPair = std::pair<const PatientGroup*, const PatientGroup*>;

struct Collector {
  std::vector<LabelPair> labels;
  std::vector<std::array<double, 2>> values;
  std::vector<std::pair<TermSet, TermSet>> sets;
  std::size_t excluded = 0;

  void label(const Reported<std::string>& a, const Reported<std::string>& b) {
    if (a.is_nr() || b.is_nr()) {
      ++excluded;
      return;
    }
    labels.emplace_back(text::fold(a.value()), text::fold(b.value()));
  }
  void label(const std::string& a, const std::string& b) {
    labels.emplace_back(text::fold(a), text::fold(b));
  }
  void yes_no(const Reported<bool>& a, const Reported<bool>& b) {
    if (a.is_nr() || b.is_nr()) {
      ++excluded;
      return;
    }
    labels.emplace_back(a.value() ? "yes" : "no", b.value() ? "yes" : "no");
  }
  template <typename T>
  void value(const Reported<T>& a, const Reported<T>& b) {
    if (a.is_nr() || b.is_nr()) {
      ++excluded;
      return;
    }
    values.push_back({static_cast<double>(a.value()), static_cast<double>(b.value())});
  }
  void set(const Reported<TermSet>& a, const Reported<TermSet>& b) {
    if (a.is_nr() || b.is_nr()) {
      ++excluded;
      return;
    }
    sets.emplace_back(fold_set(a.value()), fold_set(b.value()));
  }
  static TermSet fold_set(const TermSet& s) {
    TermSet out;
    for (const auto& t : s) out.insert(text::fold(t));
    return out;
  }
};

std::vector<GroupPair> align_groups(const StudyExtraction& a, const StudyExtraction& b,
                                    std::size_t& unmatched) {
  std::vector<GroupPair> out;
  bool shared = false;
  for (const auto& ga : a.groups) {
    for (const auto& gb : b.groups) shared = shared || ga.group_id == gb.group_id;
  }
  if (shared) {
    std::size_t matched = 0;
    for (const auto& ga : a.groups) {
      for (const auto& gb : b.groups) {
        if (ga.group_id == gb.group_id) {
          out.emplace_back(&ga, &gb);
          ++matched;
          break;
        }
      }
    }
    unmatched += (a.groups.size() - matched) + (b.groups.size() - matched);
  } else {
    const std::size_t m = std::min(a.groups.size(), b.groups.size());
    for (std::size_t i = 0; i < m; ++i) out.emplace_back(&a.groups[i], &b.groups[i]);
    unmatched += a.groups.size() + b.groups.size() - 2 * m;
  }
  return out;
}

class ReportBuilder {
 public:
  explicit ReportBuilder(AgreementReport& r) : report_(r) {}

  void kappa(const std::string& category, const std::string& field, const Collector& c) {
    if (c.labels.empty()) return skip(field, "no comparable pairs");
    try {
      auto k = cohen_kappa(c.labels);
      std::string notes = "p_o=" + text::format_fixed(k.p_o, 4);
      if (k.degenerate) notes += "; degenerate marginals";
      report_.entries.push_back(
          {category, field, MetricKind::kappa, k.kappa, c.labels.size(), c.excluded, notes});
    } catch (const Error& e) {
      skip(field, e.what());
    }
  }

  void icc(const std::string& category, const std::string& field, const Collector& c) {
    if (c.values.size() < 2) return skip(field, "fewer than two comparable pairs");
    auto r = icc_2_1(c.values);
    report_.entries.push_back({category, field, MetricKind::icc, r.icc, c.values.size(),
                               c.excluded, r.degenerate ? "zero variance" : ""});
  }

  void mean_jaccard(const std::string& category, const std::string& field, const Collector& c) {
    if (c.sets.empty()) return skip(field, "no comparable pairs");
    double sum = 0;
    std::size_t both_empty = 0;
    for (const auto& [a, b] : c.sets) {
      sum += jaccard(a, b);
      if (a.empty() && b.empty()) ++both_empty;
    }
    std::string notes = both_empty ? std::to_string(both_empty) + " pairs both empty" : "";
    report_.entries.push_back({category, field, MetricKind::jaccard,
                               sum / static_cast<double>(c.sets.size()), c.sets.size(),
                               c.excluded, notes});
  }

  void semantic(const std::string& category, const std::string& field, const Collector& c,
                const ReportOptions& opt) {
    if (c.sets.empty()) return skip(field, "no comparable term sets");
    auto adj = similarity_adjusted_agreement(c.sets, opt.matrix, opt.similarity_threshold);
    std::string notes = "mean_similarity=" + text::format_fixed(adj.mean_similarity, 4) +
                        "; threshold=" + text::format_decimal(opt.similarity_threshold);
    if (!labels_for_semantic_.empty()) {
      // Chance agreement comes from the exact-label marginals.
      try {
        const double p_e = cohen_kappa(labels_for_semantic_).p_e;
        if (p_e < 1.0) {
          notes += "; kappa_adjusted=" + text::format_fixed((adj.rate - p_e) / (1.0 - p_e), 4);
        }
      } catch (const Error&) {
      }
    }
    report_.entries.push_back(
        {category, field, MetricKind::semantic, adj.rate, adj.n, c.excluded, notes});
  }

  void remember_semantic_labels(const std::vector<LabelPair>& l) { labels_for_semantic_ = l; }

 private:
  void skip(const std::string& field, const std::string& why) {
    report_.notes.push_back(field + ": omitted (" + why + ")");
  }

  AgreementReport& report_;
  std::vector<LabelPair> labels_for_semantic_;
};

TermSet scale_names(const PatientGroup& g) {
  TermSet out;
  for (const auto& s : g.scales) {
    if (s.scale_name.reported()) out.insert(text::fold(s.scale_name.value()));
  }
  return out;
}

}  // namespace

AgreementReport field_agreement_report(const std::vector<StudyExtraction>& a,
                                       const std::vector<StudyExtraction>& b,
                                       const ReportOptions& options) {
  std::map<std::string, const StudyExtraction*> index_b;
  for (const auto& r : b) index_b[r.paper_id] = &r;

  std::vector<std::pair<const StudyExtraction*, const StudyExtraction*>> papers;
  for (const auto& r : a) {
    if (auto it = index_b.find(r.paper_id); it != index_b.end()) papers.emplace_back(&r, it->second);
  }
  if (papers.empty()) {
    throw Error(ErrorCategory::insufficient_data, "the two corpora share no paper_id");
  }

  AgreementReport report;
  report.papers_compared = papers.size();

  Collector study_type, sample_size;
  Collector cond_name, cond_cat, n_patients, causes, head_sym, gen_sym;
  Collector mv_type, mv_sets, direction, laterality, consistency, pattern;
  Collector performed, freq, vel, amp;
  Collector scales;

  for (const auto& [pa, pb] : papers) {
    study_type.label(std::string(schema::to_string(pa->study_type)),
                     std::string(schema::to_string(pb->study_type)));
    sample_size.value(pa->total_sample_size, pb->total_sample_size);

    for (const auto& [ga, gb] : align_groups(*pa, *pb, report.groups_unmatched)) {
      ++report.groups_matched;
      cond_name.label(ga->condition_name, gb->condition_name);
      cond_cat.label(std::string(schema::to_string(ga->condition_category)),
                     std::string(schema::to_string(gb->condition_category)));
      n_patients.value(ga->n_patients, gb->n_patients);
      causes.yes_no(ga->causes_ahm, gb->causes_ahm);
      head_sym.set(ga->head_symptoms, gb->head_symptoms);
      gen_sym.set(ga->general_symptoms, gb->general_symptoms);

      if (ga->head_movement && gb->head_movement) {
        const auto& ma = *ga->head_movement;
        const auto& mb = *gb->head_movement;
        mv_type.label(ma.movement_type, mb.movement_type);
        if (ma.movement_type.reported() && mb.movement_type.reported()) {
          auto ta = text::split_terms(ma.movement_type.value());
          auto tb = text::split_terms(mb.movement_type.value());
          mv_sets.sets.emplace_back(TermSet(ta.begin(), ta.end()), TermSet(tb.begin(), tb.end()));
        } else {
          ++mv_sets.excluded;
        }
        direction.label(ma.direction, mb.direction);
        laterality.label(ma.laterality, mb.laterality);
        consistency.label(ma.consistency, mb.consistency);
        pattern.label(ma.pattern, mb.pattern);
      }
      if (ga->measurement && gb->measurement) {
        const auto& qa = *ga->measurement;
        const auto& qb = *gb->measurement;
        performed.yes_no(qa.measurement_performed, qb.measurement_performed);
        freq.value(qa.frequency_value, qb.frequency_value);
        vel.value(qa.velocity_value, qb.velocity_value);
        amp.value(qa.amplitude_value, qb.amplitude_value);
      }
      auto sa = scale_names(*ga);
      auto sb = scale_names(*gb);
      if (!sa.empty() || !sb.empty()) scales.sets.emplace_back(std::move(sa), std::move(sb));
    }
  }

  ReportBuilder rb(report);
  rb.kappa("Study Level", "study_type", study_type);
  rb.icc("Study Level", "total_sample_size", sample_size);
  rb.kappa("Patient Groups", "condition_name", cond_name);
  rb.kappa("Patient Groups", "condition_category", cond_cat);
  rb.icc("Patient Groups", "n_patients", n_patients);
  rb.kappa("Patient Groups", "causes_ahm", causes);
  rb.mean_jaccard("Patient Groups", "head_symptoms", head_sym);
  rb.mean_jaccard("Patient Groups", "general_symptoms", gen_sym);
  rb.kappa("Head Movements", "movement_type", mv_type);
  rb.remember_semantic_labels(mv_type.labels);
  rb.semantic("Head Movements", "movement_type", mv_sets, options);
  rb.kappa("Head Movements", "direction", direction);
  rb.kappa("Head Movements", "laterality", laterality);
  rb.kappa("Head Movements", "consistency", consistency);
  rb.kappa("Head Movements", "pattern", pattern);
  rb.kappa("Quantitative", "measurement_performed", performed);
  rb.icc("Quantitative", "frequency_value", freq);
  rb.icc("Quantitative", "velocity_value", vel);
  rb.icc("Quantitative", "amplitude_value", amp);
  rb.mean_jaccard("Clinical Scales", "scale_types", scales);

  if (report.groups_unmatched) {
    report.notes.push_back(std::to_string(report.groups_unmatched) +
                           " patient groups had no counterpart and were excluded");
  }
  return report;
}

csv::Table report_table(const AgreementReport& report) {
  csv::Table t;
  t.header = {"category", "field", "measure", "value", "n", "excluded", "notes"};
  for (const auto& e : report.entries) {
    t.rows.push_back({e.category, e.field, std::string(to_string(e.kind)),
                      text::format_fixed(e.value, 3), std::to_string(e.n),
                      std::to_string(e.excluded), e.notes});
  }
  return t;
}

}  // namespace ahmkit::agreement
