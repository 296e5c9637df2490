#pragma once

// Inter-extractor reliability statistics: Cohen's kappa, ICC(2,1), Jaccard
// overlap, expert-matrix semantic similarity, and the per-field report that
// applies the right one to each schema field.

#include <array>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ahmkit/csv.hpp"
#include "ahmkit/schema.hpp"

namespace ahmkit::agreement {

using LabelPair = std::pair<std::string, std::string>;

struct KappaBreakdown {
  double p_o = 0;
  double p_e = 0;
  double kappa = 0;
  std::size_t n_pairs = 0;
  std::vector<std::string> categories;  // sorted union of observed labels
  std::vector<double> marginal_a;       // aligned with `categories`
  std::vector<double> marginal_b;
  bool degenerate = false;  // p_e == 1; kappa reported as 1.0
};

/// Throws Error{insufficient_data} on no pairs and Error{degenerate} when
/// chance agreement is 1 but observed agreement is not.
KappaBreakdown cohen_kappa(std::span<const LabelPair> pairs);

struct IccBreakdown {
  double ms_r = 0;
  double ms_c = 0;
  double ms_e = 0;
  std::size_t n = 0;
  std::size_t k = 2;
  double icc = 0;
  bool degenerate = false;  // zero total variance; icc = 1 by convention
};

/// Two-way random-effects, absolute agreement, single rater.
/// Throws Error{insufficient_data} for fewer than two rows.
IccBreakdown icc_2_1(std::span<const std::array<double, 2>> ratings);

/// |A∩B| / |A∪B|; two empty sets give 1.0.
double jaccard(const schema::TermSet& a, const schema::TermSet& b);

/// Symmetric term-pair similarity with identity diagonal and 0 elsewhere.
/// Terms are compared after case folding.
class SimilarityMatrix {
 public:
  /// Throws Error{schema} for a score outside [0,1] or a conflicting entry.
  void set(std::string_view a, std::string_view b, double score);
  double get(std::string_view a, std::string_view b) const;
  std::size_t size() const { return entries_.size(); }

  /// The three clinician-stated pairs only.
  static SimilarityMatrix defaults();
  /// CSV with columns term_a, term_b, score.
  static SimilarityMatrix from_table(const csv::Table& table);

 private:
  std::map<std::pair<std::string, std::string>, double> entries_;
};

enum class OverlapNote { none, exact_overlap, both_empty };

struct SemanticMatch {
  double s_max = 0;
  OverlapNote note = OverlapNote::none;
};

/// Maximum similarity between terms in A−B and terms in B−A.
SemanticMatch max_semantic_similarity(const schema::TermSet& a, const schema::TermSet& b,
                                      const SimilarityMatrix& matrix);

struct AdjustedAgreement {
  double rate = 0;             // share of pairs that match exactly or by S_max ≥ threshold
  double mean_similarity = 0;  // exact matches contribute 1.0
  std::size_t n = 0;
};

AdjustedAgreement similarity_adjusted_agreement(
    std::span<const std::pair<schema::TermSet, schema::TermSet>> pairs,
    const SimilarityMatrix& matrix, double threshold);

enum class MetricKind { kappa, icc, jaccard, semantic };
std::string_view to_string(MetricKind k);

struct FieldAgreement {
  std::string category;
  std::string field;
  MetricKind kind = MetricKind::kappa;
  double value = 0;
  std::size_t n = 0;
  std::size_t excluded = 0;  // pairs dropped for NR on either side
  std::string notes;
};

struct AgreementReport {
  std::vector<FieldAgreement> entries;
  std::size_t papers_compared = 0;
  std::size_t groups_matched = 0;
  std::size_t groups_unmatched = 0;
  std::vector<std::string> notes;

  const FieldAgreement* find(std::string_view field, MetricKind kind) const;
};

struct ReportOptions {
  SimilarityMatrix matrix = SimilarityMatrix::defaults();
  double similarity_threshold = 0.7;
};

/// Group alignment: by group_id when the two sides share any id, otherwise
/// by position. NR values are dropped pairwise. Fields with no usable pairs
/// are omitted and explained in `notes`.
AgreementReport field_agreement_report(const std::vector<schema::StudyExtraction>& a,
                                       const std::vector<schema::StudyExtraction>& b,
                                       const ReportOptions& options = {});

csv::Table report_table(const AgreementReport& report);

}  // namespace ahmkit::agreement
