#pragma once

// Kinematic rows → model-ready feature matrix and multi-label targets:
// label synonym mapping, unit normalization, plausibility cleaning,
// cohort-median imputation and categorical encodings.

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ahmkit/corpus.hpp"
#include "ahmkit/csv.hpp"

namespace ahmkit::features {

enum class Label { torticollis, laterocollis, anterocollis, retrocollis, head_tremor };
inline constexpr std::size_t kLabelCount = 5;
inline constexpr std::array<Label, kLabelCount> kLabels{
    Label::torticollis, Label::laterocollis, Label::anterocollis, Label::retrocollis,
    Label::head_tremor};

std::string_view to_string(Label l);

using LabelSet = std::array<bool, kLabelCount>;

std::size_t label_count(const LabelSet& s);
/// Powerset key, e.g. "torticollis+head_tremor"; "" for the empty set.
std::string label_key(const LabelSet& s);

/// Single folded term → canonical label, or nullopt when unmapped.
std::optional<Label> standardize_term(std::string_view term);

struct LabelResult {
  LabelSet labels{};
  std::vector<std::string> unmapped;  // terms with no mapping
};

/// Splits a multi-term movement descriptor and maps each term.
LabelResult standardize_labels(std::string_view raw_movement_type);

enum class AmplitudeUnit { degrees, millimetres, centimetres, emg_percent, dimensionless, unknown };
std::string_view to_string(AmplitudeUnit u);
AmplitudeUnit canonical_amplitude_unit(std::string_view unit);

enum class UnitClass { degrees, millimetres, other };
std::string_view to_string(UnitClass c);

struct Amplitude {
  double value = 0;
  UnitClass unit_class = UnitClass::other;
  AmplitudeUnit reported_unit = AmplitudeUnit::unknown;
};

/// cm → mm (×10); degrees and mm unchanged; everything else keeps its value
/// under unit class "other".
Amplitude normalize_amplitude(double value, std::string_view unit);

inline constexpr double kFrequencyMinHz = 1.0;
inline constexpr double kFrequencyMaxHz = 11.0;

/// Closed plausibility window [1, 11] Hz; outside → nullopt.
std::optional<double> clean_frequency(double hz);

/// ms kept, s ×1000, anything else → nullopt.
std::optional<double> clean_latency(double value, std::string_view unit);

/// 0 EMG, 1 accelerometer/IMU, 2 optical motion capture, 3 goniometer,
/// 4 eye tracking/VOG, 5 video, 6 MRI, 7 other. Lowest matching code wins.
int encode_measurement_system(std::string_view system);

/// A numeric column with missing cells.
using SparseColumn = std::vector<std::optional<double>>;

struct Imputation {
  std::vector<std::vector<double>> columns;   // kept columns, fully filled
  std::vector<std::vector<bool>> imputed;     // parallel to `columns`
  std::vector<std::size_t> kept;              // source index of each kept column
  std::vector<std::size_t> dropped;           // columns missing in every row
};

/// Fills each missing cell with the median of that column over rows that
/// share at least one label with the row; falls back to the global column
/// median when that cohort has no donors.
Imputation impute_by_class_median(const std::vector<SparseColumn>& columns,
                                  const std::vector<LabelSet>& labels);

/// Lower-middle/upper-middle average for even counts. Throws on empty input.
double median(std::vector<double> values);

struct FeatureMatrix {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;  // row-major, width == columns.size()
  std::vector<LabelSet> labels;
  std::vector<std::string> paper_ids;
  std::vector<std::string> group_ids;
  std::vector<std::string> warnings;
  std::size_t excluded = 0;  // input rows without a usable label

  std::size_t size() const { return rows.size(); }
  std::size_t width() const { return columns.size(); }
};

/// Column order: amplitude, frequency_hz, latency_ms, velocity,
/// measurement_system, amp_unit_degrees, amp_unit_mm, amp_unit_cm, then one
/// <field>_imputed indicator per kinematic column. Kinematic columns that
/// are missing everywhere are dropped together with their indicator.
/// Throws Error{insufficient_data} when no row survives.
FeatureMatrix build_feature_matrix(const std::vector<corpus::KinematicRow>& rows);

/// Columns: paper_id, group_id, the feature columns, then one 0/1 column per
/// label.
csv::Table feature_table(const FeatureMatrix& m);
FeatureMatrix feature_matrix_from_table(const csv::Table& t);

}  // namespace ahmkit::features
