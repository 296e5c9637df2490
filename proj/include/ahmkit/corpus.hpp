#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ahmkit/csv.hpp"
#include "ahmkit/schema.hpp"

namespace ahmkit::corpus {

enum class FolderRole { abnormal_head_movements, kinematics_quantitative, severity_scales };

std::string_view to_string(FolderRole role);
std::optional<FolderRole> parse_folder_role(std::string_view s);

/// role → files or directories. Directories are searched recursively for
/// *.json (one record) and *.jsonl (one record per line).
struct Manifest {
  std::map<FolderRole, std::vector<std::string>> paths;
  bool empty() const { return paths.empty(); }
};

/// `role=path` per line; '#' starts a comment. Relative paths resolve
/// against `base_dir`.
Manifest parse_manifest(std::string_view text, const std::string& base_dir = ".");
Manifest read_manifest(const std::string& path);

struct Corpus {
  std::vector<schema::StudyExtraction> records;  // sorted by paper_id, ids unique
  Manifest source_manifest;
};

/// Field-wise union of two extractions of the same paper. Conflicting
/// reported scalars throw Error{conflict} naming the paper and field.
schema::StudyExtraction merge_records(const schema::StudyExtraction& a,
                                      const schema::StudyExtraction& b);

/// Merges duplicates (in input order) and sorts by paper_id.
Corpus from_records(std::vector<schema::StudyExtraction> records);

Corpus load_corpus(const Manifest& manifest);

/// Keeps groups whose folded condition_name equals the folded `name`; papers
/// left without groups are dropped.
Corpus filter_condition(const Corpus& corpus, std::string_view name);

struct KinematicRow {
  std::string paper_id;
  std::string group_id;
  schema::QuantMeasurement measurement;
  std::optional<schema::HeadMovement> movement;

  friend bool operator==(const KinematicRow&, const KinematicRow&) = default;
};

struct ScaleRow {
  std::string paper_id;
  std::string group_id;
  schema::ClinicalScaleRecord scale;

  friend bool operator==(const ScaleRow&, const ScaleRow&) = default;
};

struct CdPartition {
  std::vector<KinematicRow> cd_q;
  std::vector<ScaleRow> cd_cs;
};

/// One row per group carrying a measurement block, before quality filtering.
std::vector<KinematicRow> kinematic_candidates(const Corpus& corpus);

/// Drops rows whose four kinematic values are all NR. Order-preserving.
std::vector<KinematicRow> quality_filter_kinematics(std::vector<KinematicRow> rows);

/// Expects a condition-filtered corpus.
CdPartition partition_cd(const Corpus& corpus);

template <typename Row>
std::size_t count_papers(const std::vector<Row>& rows) {
  std::vector<std::string> ids;
  for (const auto& r : rows) ids.push_back(r.paper_id);
  std::sort(ids.begin(), ids.end());
  return static_cast<std::size_t>(std::unique(ids.begin(), ids.end()) - ids.begin());
}

csv::Table cd_q_table(const std::vector<KinematicRow>& rows);
std::vector<KinematicRow> cd_q_from_table(const csv::Table& table);
csv::Table cd_cs_table(const std::vector<ScaleRow>& rows);
std::vector<ScaleRow> cd_cs_from_table(const csv::Table& table);

}  // namespace ahmkit::corpus
