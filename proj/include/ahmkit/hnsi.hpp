#pragma once

// Head–Neck Severity Index. Each eligible baseline score is clipped to its
// scale's head/neck maximum and divided by it; a paper's index is the
// equal-weight mean of its per-scale means.

#include <array>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ahmkit/corpus.hpp"
#include "ahmkit/csv.hpp"
#include "ahmkit/schema.hpp"

namespace ahmkit::hnsi {

struct ScaleSpec {
  std::string scale_name;
  double hn_max = 0;
  std::vector<std::string> subscale_keywords;  // lowercase; empty = no restriction
  std::string scope;
};

class ScaleRegistry {
 public:
  /// TWSTRS 35, Tsui 20, TRS 8, GDRS 10 with their subscale keywords.
  static ScaleRegistry defaults();
  /// CSV columns: scale, hn_max, keywords (pipe-separated); optional scope.
  static ScaleRegistry from_table(const csv::Table& table);

  void add(ScaleSpec spec);
  const ScaleSpec* find(std::string_view scale_name) const;
  const std::vector<ScaleSpec>& specs() const { return specs_; }

 private:
  std::vector<ScaleSpec> specs_;
};

enum class Band { mild, moderate, severe };
std::string_view to_string(Band b);

inline constexpr double kModerateFrom = 0.33;
inline constexpr double kSevereFrom = 0.66;

/// Half-open intervals: [0, 0.33) mild, [0.33, 0.66) moderate, [0.66, 1] severe.
Band band_of(double hnsi);

/// Subscale keyword test plus a reported baseline. The caller guarantees
/// the record's scale name matches `spec`.
bool eligible(const schema::ClinicalScaleRecord& record, const ScaleSpec& spec);

/// clip(s, 0, hn_max) / hn_max. Throws Error{schema} for non-finite input.
double normalize_score(double raw, const ScaleSpec& spec);

struct ScaleObservation {
  std::string paper_id;
  std::string scale_name;
  double raw = 0;
  double normalized = 0;
};

struct PaperHnsi {
  std::string paper_id;
  std::map<std::string, double> scale_means;          // keyed by registry scale name
  std::map<std::string, std::size_t> scale_counts;    // n_{p,k}
  std::size_t scales_present = 0;                     // K_p
  double hnsi = 0;
  Band band = Band::mild;
};

/// Observations must all belong to one paper. Throws
/// Error{insufficient_data} when empty.
PaperHnsi paper_hnsi(const std::vector<ScaleObservation>& observations);

struct CohortResult {
  std::vector<ScaleObservation> observations;
  std::vector<PaperHnsi> papers;  // sorted by paper_id
  std::size_t unregistered_rows = 0;
  std::size_t ineligible_rows = 0;
};

/// Registered + eligible rows of a clinical-scale partition → per-paper HNSI.
CohortResult compute_cohort(const std::vector<corpus::ScaleRow>& rows,
                            const ScaleRegistry& registry);

struct BandStats {
  std::size_t count = 0;
  double percent = 0;
  std::optional<double> mean_hnsi;
};

struct BandDistribution {
  std::array<BandStats, 3> bands;  // indexed by Band
  std::size_t total = 0;

  const BandStats& operator[](Band b) const { return bands[static_cast<std::size_t>(b)]; }
};

BandDistribution band_distribution(const std::vector<double>& scores);
BandDistribution cohort_band_distribution(const std::vector<PaperHnsi>& papers);

struct BandComparisonRow {
  Band band;
  std::string threshold;
  double external_percent = 0;
  double literature_percent = 0;
};

struct BandComparison {
  std::vector<BandComparisonRow> rows;  // mild, moderate, severe
  double severe_gap = 0;                // |external − literature| severe share, percent points
  double severe_threshold_raw = 0;      // kSevereFrom × reference scale maximum
  std::size_t external_n = 0;
};

/// External scores must already be on [0,1]. `reference_max` converts the
/// severe threshold back into raw units (35 for TWSTRS).
BandComparison compare_band_distributions(const BandDistribution& literature,
                                          const std::vector<double>& external,
                                          double reference_max = 35.0);

/// One score per line; blank lines and '#' comments ignored. With
/// `raw_twstrs`, values are clipped and divided by 35.
std::vector<double> parse_external_scores(std::string_view text, bool raw_twstrs);

csv::Table papers_table(const std::vector<PaperHnsi>& papers, const ScaleRegistry& registry);
std::vector<PaperHnsi> papers_from_table(const csv::Table& table);
csv::Table distribution_table(const BandDistribution& d);
csv::Table comparison_table(const BandComparison& c);

}  // namespace ahmkit::hnsi
