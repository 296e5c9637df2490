#pragma once

// Dual-backend extraction with symmetric cross-evaluation, weighted scoring,
// bounded iterative refinement with early stopping, and winner selection.

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ahmkit/error.hpp"

namespace ahmkit::orchestrator {

enum class Dimension {
  completeness,
  quantitative_accuracy,
  symptom_extraction,
  head_movement_classification,
  schema_compliance,
  edge_case_handling,
};
inline constexpr std::size_t kDimensionCount = 6;
std::string_view to_string(Dimension d);
std::optional<Dimension> parse_dimension(std::string_view s);

struct Issue {
  std::string severity;  // "high", "medium", "low"
  std::vector<Dimension> dimensions;
  std::string description;
};

struct EvaluationReport {
  std::array<double, kDimensionCount> scores{};  // indexed by Dimension, each in [1,5]
  double overall_score = 0;                      // unweighted mean of `scores`
  std::string justification;
  std::vector<Issue> issues;

  double score(Dimension d) const { return scores[static_cast<std::size_t>(d)]; }
  std::size_t high_severity_count() const;
};

/// JSON object with "scores" (dimension → number), optional
/// "justification" and optional "issues". The overall score is always
/// recomputed as the mean of the six dimensions. Throws Error{parse} for
/// malformed JSON and Error{schema} for missing/out-of-range scores.
EvaluationReport parse_report(std::string_view json_text);
std::string serialize_report(const EvaluationReport& report);

/// Empty when consistent; otherwise why a high-severity issue conflicts
/// with a dimension score above 2.
std::optional<std::string> report_inconsistency(const EvaluationReport& report);

/// 0.25 head movement + 0.25 completeness + 0.20 quantitative + 0.20
/// symptom + 0.05 schema + 0.05 edge case.
double weighted_score(const EvaluationReport& report);

inline constexpr double kExcellent = 4.2;
inline constexpr double kAcceptable = 4.0;
inline constexpr double kMinImprovement = 0.2;
inline constexpr double kTieMargin = 0.1;
inline constexpr int kDefaultMaxRounds = 3;

enum class StopReason { none, excellent, both_acceptable, converged, max_rounds };
std::string_view to_string(StopReason r);

struct RoundScores {
  double s_a = 0;
  double s_b = 0;
  std::size_t h_a = 0;
  std::size_t h_b = 0;

  friend bool operator==(const RoundScores&, const RoundScores&) = default;
};

/// Rules in priority order: excellent, both_acceptable, converged (round ≥ 2
/// and the larger of the two improvements < 0.2), max_rounds (round ==
/// max_rounds). StopReason::none means continue.
StopReason check_stop(int round, const RoundScores& current,
                      const std::optional<RoundScores>& previous,
                      int max_rounds = kDefaultMaxRounds);

enum class Side { a, b };

/// |W_A − W_B| < 0.1 → higher overall score; otherwise higher weighted
/// score. Exact ties go to A.
Side select_winner(double w_a, double w_b, double overall_a, double overall_b);

/// Identifies the call for deterministic backends and error messages.
struct CallContext {
  std::string paper_id;
  int round = 1;
};

/// Raised by backends for network-level failures; the pipeline retries
/// these. Any other exception is not retried.
class TransportError : public Error {
 public:
  explicit TransportError(const std::string& what) : Error(ErrorCategory::io, what) {}
};

class ExtractorBackend {
 public:
  virtual ~ExtractorBackend() = default;
  virtual std::string id() const = 0;
  /// Returns a candidate extraction document (JSON text).
  virtual std::string extract(std::string_view markdown, const CallContext& ctx) = 0;
  /// Returns an evaluation report (JSON text). Never sees the paper text.
  virtual std::string evaluate(std::string_view document, const CallContext& ctx) = 0;
  /// Returns a revised document given the evaluator's feedback.
  virtual std::string refine(std::string_view document, const EvaluationReport& feedback,
                             const CallContext& ctx) = 0;
};

class PipelineError : public Error {
 public:
  PipelineError(std::string paper_id, int round, std::string backend_id, std::string phase,
                const std::string& detail);
  const std::string& paper_id() const { return paper_id_; }
  int round() const { return round_; }
  const std::string& backend_id() const { return backend_id_; }
  const std::string& phase() const { return phase_; }

 private:
  std::string paper_id_;
  int round_;
  std::string backend_id_;
  std::string phase_;
};

struct PipelineOptions {
  int max_rounds = kDefaultMaxRounds;
  int transport_retries = 2;
  int inconsistent_report_retries = 1;
  bool concurrent_calls = true;  // run the two calls of a phase in parallel
};

struct PipelineResult {
  std::string paper_id;
  std::string backend_a;
  std::string backend_b;
  Side winner = Side::a;
  std::string winner_backend_id;
  std::string winning_document;  // canonical serialization
  int rounds_used = 0;
  std::vector<RoundScores> trace;
  StopReason stop_reason = StopReason::none;
  double w_a = 0;
  double w_b = 0;
  double overall_a = 0;
  double overall_b = 0;
  std::vector<std::string> audit;  // one JSON line per phase call
};

/// Throws PipelineError on backend failure after retries, on a malformed
/// document, or when the winning document fails validation.
PipelineResult run_pipeline(std::string_view markdown, const std::string& paper_id,
                            ExtractorBackend& backend_a, ExtractorBackend& backend_b,
                            const PipelineOptions& options = {});

/// Replays check_stop over a trace; true iff it reproduces `reason` at the
/// last round and never stops earlier.
bool trace_consistent(const std::vector<RoundScores>& trace, StopReason reason,
                      int max_rounds = kDefaultMaxRounds);

/// Pretty JSON summary (no documents) for result files.
std::string result_json(const PipelineResult& result);

}  // namespace ahmkit::orchestrator
