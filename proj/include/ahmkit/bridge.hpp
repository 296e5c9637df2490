#pragma once

// Paper-level link between classifier probabilities and the severity index:
// Pearson correlation, Student-t p-values and Fisher-z confidence intervals.

#include <array>
#include <span>
#include <string>
#include <vector>

#include "ahmkit/classify.hpp"
#include "ahmkit/csv.hpp"
#include "ahmkit/hnsi.hpp"

namespace ahmkit::bridge {

using classify::Probabilities;

struct BridgePair {
  std::string paper_id;
  double hnsi = 0;
  Probabilities mean_probability{};  // per label, over the paper's records
  double composite = 0;              // mean of the five per-label means
  std::size_t records = 0;
};

/// Joins on paper_id; output sorted by paper_id. Throws
/// Error{insufficient_data} when no paper appears on both sides.
std::vector<BridgePair> link_papers(const std::vector<classify::ProbabilityRow>& probabilities,
                                    const std::vector<hnsi::PaperHnsi>& papers);

/// Throws Error{insufficient_data} for n < 3 or unequal lengths and
/// Error{degenerate} when either series has zero variance.
double pearson_r(std::span<const double> x, std::span<const double> y);

struct Interval {
  double low = 0;
  double high = 0;
};

/// tanh(atanh(r) ∓ z_crit / √(n − 3)). Throws Error{degenerate} for |r| ≥ 1
/// and Error{insufficient_data} for n < 4.
Interval fisher_ci(double r, std::size_t n, double level = 0.95);

/// Two-sided p from Student's t with n − 2 degrees of freedom. Same
/// preconditions as fisher_ci.
double correlation_p_value(double r, std::size_t n);

/// "***" p < 0.001, "**" p < 0.01, "*" p < 0.05, otherwise "".
std::string significance_stars(double p);

struct CorrelationResult {
  std::string feature;
  double r = 0;
  double p_value = 1;
  Interval ci;
  std::size_t n = 0;
  std::string stars;
  std::string error;  // non-empty when the correlation is undefined
  bool ok() const { return error.empty(); }
};

/// One result per label probability plus the composite. A feature whose
/// correlation is undefined carries the reason in `error`. Throws
/// Error{insufficient_data} for fewer than 4 pairs.
std::vector<CorrelationResult> bridge_report(const std::vector<BridgePair>& pairs);

/// model, feature, r, p, significance, ci_low, ci_high, n.
csv::Table report_table(const std::string& model, const std::vector<CorrelationResult>& results);

/// paper_id, hnsi, records, per-label mean probabilities, composite.
csv::Table pairs_table(const std::vector<BridgePair>& pairs);

}  // namespace ahmkit::bridge
