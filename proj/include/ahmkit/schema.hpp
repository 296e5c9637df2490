#pragma once

// Hierarchical extraction record: study → patient groups → movement,
// quantitative measurements, pain, eye findings and clinical scales.
//
// Wire format is UTF-8 JSON with snake_case keys. Any optional leaf may be
// the string "NR" (not reported); a missing key parses as NR. Unknown keys
// are rejected at every level.

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "ahmkit/reported.hpp"

namespace ahmkit::schema {

enum class StudyType {
  cross_sectional,
  case_report,
  case_series,
  prospective,
  review,
  retrospective,
  cohort,
  randomized_controlled_trial,
  other,
};

enum class ConditionCategory { disease, disorder };

std::string_view to_string(StudyType t);
std::string_view to_string(ConditionCategory c);
std::optional<StudyType> parse_study_type(std::string_view s);
std::optional<ConditionCategory> parse_condition_category(std::string_view s);

using TermSet = std::set<std::string>;

struct HeadMovement {
  Reported<std::string> movement_type;  // key "type"
  Reported<std::string> direction;
  Reported<std::string> laterality;
  Reported<std::string> degree;
  Reported<std::string> frequency;  // descriptive, e.g. "intermittent"
  Reported<std::string> consistency;
  Reported<std::string> pattern;

  friend bool operator==(const HeadMovement&, const HeadMovement&) = default;
};

struct QuantMeasurement {
  Reported<bool> measurement_performed;
  Reported<std::string> measurement_system;
  Reported<std::string> measurement_location;
  Reported<double> frequency_value;
  Reported<std::string> frequency_unit;
  Reported<double> velocity_value;
  Reported<std::string> velocity_unit;
  Reported<double> amplitude_value;
  Reported<std::string> amplitude_unit;
  Reported<std::string> amplitude_direction;
  Reported<double> latency_value;
  Reported<std::string> latency_unit;

  /// True when any of the four kinematic values is reported.
  bool has_kinematics() const;

  friend bool operator==(const QuantMeasurement&, const QuantMeasurement&) = default;
};

struct PainAssessment {
  Reported<bool> pain_present;
  Reported<double> pain_severity;
  Reported<std::string> pain_severity_scale;
  Reported<std::string> pain_location;
  Reported<std::string> pain_characteristics;

  friend bool operator==(const PainAssessment&, const PainAssessment&) = default;
};

struct ClinicalScaleRecord {
  Reported<std::string> scale_name;
  Reported<std::string> scale_type;
  Reported<std::string> subscale;
  Reported<std::string> score_range;
  Reported<double> baseline_value;
  Reported<double> post_treatment_value;
  Reported<double> change_value;
  Reported<double> p_value;
  Reported<std::string> measurement_timepoint;

  friend bool operator==(const ClinicalScaleRecord&, const ClinicalScaleRecord&) = default;
};

struct PatientGroup {
  std::string group_id;
  std::string condition_name;
  ConditionCategory condition_category = ConditionCategory::disorder;
  Reported<std::int64_t> n_patients;
  Reported<std::string> age;
  Reported<std::string> age_range;
  Reported<std::string> gender;
  Reported<std::string> gender_distribution;
  Reported<bool> causes_ahm;
  Reported<TermSet> head_symptoms;
  Reported<TermSet> general_symptoms;
  std::optional<HeadMovement> head_movement;
  std::optional<QuantMeasurement> measurement;
  std::optional<PainAssessment> pain;
  Reported<std::string> eye_abnormalities;
  std::vector<ClinicalScaleRecord> scales;

  friend bool operator==(const PatientGroup&, const PatientGroup&) = default;
};

struct StudyExtraction {
  std::string paper_id;
  Reported<std::string> study_title;
  StudyType study_type = StudyType::other;
  Reported<std::int64_t> total_sample_size;
  Reported<std::string> study_age_range;
  Reported<std::string> study_gender_distribution;
  std::vector<PatientGroup> groups;

  friend bool operator==(const StudyExtraction&, const StudyExtraction&) = default;
};

struct ScoreRange {
  double lo = 0;
  double hi = 0;
};

/// Accepts "lo-hi" with optional whitespace around the separator, which may
/// be '-' or an en dash. Returns nullopt for anything else.
std::optional<ScoreRange> parse_score_range(std::string_view text);

/// Non-fatal notes raised while parsing (e.g. an opaque score_range).
struct ParseDiagnostics {
  std::vector<std::string> warnings;
};

/// Throws Error{parse} for malformed JSON (message carries the byte
/// position) and Error{schema} for unknown keys, type mismatches and
/// scientific-notation numbers (message carries the JSON path).
StudyExtraction parse_extraction(std::string_view json_text,
                                 ParseDiagnostics* diagnostics = nullptr);

/// One record per non-blank line.
std::vector<StudyExtraction> parse_corpus_lines(std::string_view jsonl_text,
                                                ParseDiagnostics* diagnostics = nullptr);

/// indent < 0 produces a single line (the corpus-file form).
std::string serialize_extraction(const StudyExtraction& record, int indent = 2);

struct Violation {
  std::string path;
  std::string code;
  std::string message;
};

struct ValidationReport {
  std::vector<Violation> violations;
  bool ok() const { return violations.empty(); }
};

/// Checks every record invariant without modifying the record.
ValidationReport validate(const StudyExtraction& record);

}  // namespace ahmkit::schema
