#include "ahmkit/corpus.hpp"

#include <filesystem>
#include <functional>
#include <map>

#include "ahmkit/error.hpp"
#include "ahmkit/text.hpp"

namespace ahmkit::corpus {

namespace fs = std::filesystem;
using namespace ahmkit::schema;

std::string_view to_string(FolderRole role) {
  switch (role) {
    case FolderRole::abnormal_head_movements: return "abnormal-head-movements";
    case FolderRole::kinematics_quantitative: return "kinematics-quantitative";
    case FolderRole::severity_scales: return "severity-scales";
  }
  return "";
}

std::optional<FolderRole> parse_folder_role(std::string_view s) {
  auto f = text::fold(s);
  for (auto r : {FolderRole::abnormal_head_movements, FolderRole::kinematics_quantitative,
                 FolderRole::severity_scales}) {
    if (f == to_string(r)) return r;
  }
  return std::nullopt;
}

Manifest parse_manifest(std::string_view text, const std::string& base_dir) {
  Manifest m;
  std::size_t line_no = 0;
  for (const auto& raw : text::split_any(text, "\n")) {
    ++line_no;
    auto line = text::trim(raw.substr(0, raw.find('#')));
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCategory::parse, "manifest line " + std::to_string(line_no) +
                                            ": expected role=path");
    }
    auto role = parse_folder_role(line.substr(0, eq));
    if (!role) {
      throw Error(ErrorCategory::parse,
                  "manifest: unknown role '" + text::trim(line.substr(0, eq)) + "'");
    }
    fs::path p(text::trim(line.substr(eq + 1)));
    if (p.is_relative()) p = fs::path(base_dir) / p;
    m.paths[*role].push_back(p.lexically_normal().string());
  }
  return m;
}

Manifest read_manifest(const std::string& path) {
  auto base = fs::path(path).parent_path().string();
  return parse_manifest(text::read_file(path), base.empty() ? "." : base);
}

namespace {

[[noreturn]] void conflict(const std::string& paper, const std::string& field) {
  throw Error(ErrorCategory::conflict,
              "conflicting values for paper '" + paper + "' at " + field);
}

template <typename T>
Reported<T> merge_value(const Reported<T>& a, const Reported<T>& b, const std::string& paper,
                        const std::string& field) {
  if (a.is_nr()) return b;
  if (b.is_nr()) return a;
  if (!(a.value() == b.value())) conflict(paper, field);
  return a;
}

Reported<TermSet> merge_terms(const Reported<TermSet>& a, const Reported<TermSet>& b) {
  if (a.is_nr()) return b;
  if (b.is_nr()) return a;
  TermSet out = a.value();
  out.insert(b.value().begin(), b.value().end());
  return out;
}

template <typename T>
void require_equal(const T& a, const T& b, const std::string& paper, const std::string& field) {
  if (!(a == b)) conflict(paper, field);
}

HeadMovement merge(const HeadMovement& a, const HeadMovement& b, const std::string& p,
                   const std::string& at) {
  HeadMovement m;
  m.movement_type = merge_value(a.movement_type, b.movement_type, p, at + ".type");
  m.direction = merge_value(a.direction, b.direction, p, at + ".direction");
  m.laterality = merge_value(a.laterality, b.laterality, p, at + ".laterality");
  m.degree = merge_value(a.degree, b.degree, p, at + ".degree");
  m.frequency = merge_value(a.frequency, b.frequency, p, at + ".frequency");
  m.consistency = merge_value(a.consistency, b.consistency, p, at + ".consistency");
  m.pattern = merge_value(a.pattern, b.pattern, p, at + ".pattern");
  return m;
}

QuantMeasurement merge(const QuantMeasurement& a, const QuantMeasurement& b,
                       const std::string& p, const std::string& at) {
  QuantMeasurement m;
#define AHMKIT_MERGE(f) m.f = merge_value(a.f, b.f, p, at + "." #f)
  AHMKIT_MERGE(measurement_performed);
  AHMKIT_MERGE(measurement_system);
  AHMKIT_MERGE(measurement_location);
  AHMKIT_MERGE(frequency_value);
  AHMKIT_MERGE(frequency_unit);
  AHMKIT_MERGE(velocity_value);
  AHMKIT_MERGE(velocity_unit);
  AHMKIT_MERGE(amplitude_value);
  AHMKIT_MERGE(amplitude_unit);
  AHMKIT_MERGE(amplitude_direction);
  AHMKIT_MERGE(latency_value);
  AHMKIT_MERGE(latency_unit);
  return m;
}

PainAssessment merge(const PainAssessment& a, const PainAssessment& b, const std::string& p,
                     const std::string& at) {
  PainAssessment m;
  AHMKIT_MERGE(pain_present);
  AHMKIT_MERGE(pain_severity);
  AHMKIT_MERGE(pain_severity_scale);
  AHMKIT_MERGE(pain_location);
  AHMKIT_MERGE(pain_characteristics);
  return m;
}

template <typename T>
std::optional<T> merge_block(const std::optional<T>& a, const std::optional<T>& b,
                             const std::string& p, const std::string& at) {
  if (!a) return b;
  if (!b) return a;
  return merge(*a, *b, p, at);
}

PatientGroup merge(const PatientGroup& a, const PatientGroup& b, const std::string& p,
                   const std::string& at) {
  PatientGroup m;
  m.group_id = a.group_id;
  require_equal(a.condition_name, b.condition_name, p, at + ".condition_name");
  m.condition_name = a.condition_name;
  require_equal(a.condition_category, b.condition_category, p, at + ".condition_category");
  m.condition_category = a.condition_category;
  AHMKIT_MERGE(n_patients);
  AHMKIT_MERGE(age);
  AHMKIT_MERGE(age_range);
  AHMKIT_MERGE(gender);
  AHMKIT_MERGE(gender_distribution);
  AHMKIT_MERGE(causes_ahm);
  AHMKIT_MERGE(eye_abnormalities);
#undef AHMKIT_MERGE
  m.head_symptoms = merge_terms(a.head_symptoms, b.head_symptoms);
  m.general_symptoms = merge_terms(a.general_symptoms, b.general_symptoms);
  m.head_movement = merge_block(a.head_movement, b.head_movement, p, at + ".head_movement");
  m.measurement = merge_block(a.measurement, b.measurement, p, at + ".measurement");
  m.pain = merge_block(a.pain, b.pain, p, at + ".pain");
  m.scales = a.scales;
  for (const auto& s : b.scales) {
    if (std::find(m.scales.begin(), m.scales.end(), s) == m.scales.end()) m.scales.push_back(s);
  }
  return m;
}

void collect_files(const fs::path& p, std::vector<std::string>& out) {
  std::error_code ec;
  if (fs::is_directory(p, ec)) {
    std::vector<std::string> found;
    for (const auto& e : fs::recursive_directory_iterator(p)) {
      if (!e.is_regular_file()) continue;
      auto ext = e.path().extension().string();
      if (ext == ".json" || ext == ".jsonl") found.push_back(e.path().string());
    }
    std::sort(found.begin(), found.end());
    out.insert(out.end(), found.begin(), found.end());
  } else if (fs::exists(p, ec)) {
    out.push_back(p.string());
  } else {
    throw Error(ErrorCategory::io, "manifest path does not exist: " + p.string());
  }
}

std::vector<StudyExtraction> load_file(const std::string& path) {
  auto body = text::read_file(path);
  try {
    if (fs::path(path).extension() == ".jsonl") return parse_corpus_lines(body);
    return {parse_extraction(body)};
  } catch (const Error& e) {
    throw Error(e.category(), path + ": " + e.what());
  }
}

}  // namespace

StudyExtraction merge_records(const StudyExtraction& a, const StudyExtraction& b) {
  const std::string& p = a.paper_id;
  if (a.paper_id != b.paper_id) conflict(p, "paper_id");
  StudyExtraction m;
  m.paper_id = a.paper_id;
  m.study_title = merge_value(a.study_title, b.study_title, p, "study_title");
  require_equal(a.study_type, b.study_type, p, "study_type");
  m.study_type = a.study_type;
  m.total_sample_size = merge_value(a.total_sample_size, b.total_sample_size, p, "total_sample_size");
  m.study_age_range = merge_value(a.study_age_range, b.study_age_range, p, "study_age_range");
  m.study_gender_distribution =
      merge_value(a.study_gender_distribution, b.study_gender_distribution, p,
                  "study_gender_distribution");
  m.groups = a.groups;
  for (const auto& g : b.groups) {
    auto it = std::find_if(m.groups.begin(), m.groups.end(),
                           [&](const PatientGroup& x) { return x.group_id == g.group_id; });
    if (it == m.groups.end()) {
      m.groups.push_back(g);
    } else {
      *it = merge(*it, g, p, "groups[" + g.group_id + "]");
    }
  }
  return m;
}

Corpus from_records(std::vector<StudyExtraction> records) {
  std::map<std::string, StudyExtraction> by_id;
  for (auto& r : records) {
    auto it = by_id.find(r.paper_id);
    if (it == by_id.end()) {
      by_id.emplace(r.paper_id, std::move(r));
    } else {
      it->second = merge_records(it->second, r);
    }
  }
  Corpus c;
  for (auto& [id, rec] : by_id) c.records.push_back(std::move(rec));
  return c;
}

Corpus load_corpus(const Manifest& manifest) {
  std::vector<std::string> files;
  for (const auto& [role, paths] : manifest.paths) {
    for (const auto& p : paths) collect_files(p, files);
  }
  // Files parse independently; merge order stays the manifest order.
  std::vector<std::vector<StudyExtraction>> parsed(files.size());
  std::vector<std::string> failures(files.size());
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(files.size()); ++i) {
    auto k = static_cast<std::size_t>(i);
    try {
      parsed[k] = load_file(files[k]);
    } catch (const std::exception& e) {
      failures[k] = e.what();
    }
  }
  std::vector<StudyExtraction> all;
  for (std::size_t k = 0; k < files.size(); ++k) {
    if (!failures[k].empty()) {
      // Re-run serially to rethrow with the original category.
      load_file(files[k]);
    }
    for (auto& r : parsed[k]) all.push_back(std::move(r));
  }
  Corpus c = from_records(std::move(all));
  c.source_manifest = manifest;
  return c;
}

Corpus filter_condition(const Corpus& corpus, std::string_view name) {
  const auto wanted = text::fold(name);
  Corpus out;
  out.source_manifest = corpus.source_manifest;
  for (const auto& rec : corpus.records) {
    StudyExtraction kept = rec;
    kept.groups.clear();
    for (const auto& g : rec.groups) {
      if (text::fold(g.condition_name) == wanted) kept.groups.push_back(g);
    }
    if (!kept.groups.empty()) out.records.push_back(std::move(kept));
  }
  return out;
}

std::vector<KinematicRow> kinematic_candidates(const Corpus& corpus) {
  std::vector<KinematicRow> rows;
  for (const auto& rec : corpus.records) {
    for (const auto& g : rec.groups) {
      if (!g.measurement) continue;
      rows.push_back({rec.paper_id, g.group_id, *g.measurement, g.head_movement});
    }
  }
  return rows;
}

std::vector<KinematicRow> quality_filter_kinematics(std::vector<KinematicRow> rows) {
  std::erase_if(rows, [](const KinematicRow& r) { return !r.measurement.has_kinematics(); });
  return rows;
}

CdPartition partition_cd(const Corpus& corpus) {
  CdPartition part;
  part.cd_q = quality_filter_kinematics(kinematic_candidates(corpus));
  for (const auto& rec : corpus.records) {
    for (const auto& g : rec.groups) {
      for (const auto& s : g.scales) {
        if (s.scale_name.reported()) part.cd_cs.push_back({rec.paper_id, g.group_id, s});
      }
    }
  }
  return part;
}

// ------------------------------------------------------------------ CSV

namespace {

std::string cell(const Reported<std::string>& v) {
  return v.reported() ? v.value() : std::string(kNotReported);
}
std::string cell(const Reported<double>& v) {
  return v.reported() ? text::format_decimal(v.value()) : std::string(kNotReported);
}
std::string cell(const Reported<bool>& v) {
  return v.reported() ? (v.value() ? "yes" : "no") : std::string(kNotReported);
}

Reported<std::string> text_cell(const std::string& s) {
  if (s == kNotReported) return NR;
  return s;
}
Reported<double> number_cell(const std::string& s, std::size_t row, std::string_view col) {
  if (s == kNotReported || text::trim(s).empty()) return NR;
  auto t = text::trim(s);
  if (!text::is_plain_decimal(t)) {
    throw Error(ErrorCategory::parse, "csv row " + std::to_string(row + 2) + " column " +
                                          std::string(col) + ": not a number '" + s + "'");
  }
  return std::stod(t);
}
Reported<bool> bool_cell(const std::string& s) {
  auto f = text::fold(s);
  if (f == "yes" || f == "true") return true;
  if (f == "no" || f == "false") return false;
  return NR;
}

const csv::Row kCdQHeader{"paper_id",          "group_id",          "movement_type",
                          "direction",         "laterality",        "measurement_performed",
                          "measurement_system", "measurement_location", "frequency_value",
                          "frequency_unit",    "velocity_value",    "velocity_unit",
                          "amplitude_value",   "amplitude_unit",    "amplitude_direction",
                          "latency_value",     "latency_unit"};

const csv::Row kCdCsHeader{"paper_id",       "group_id",          "scale_name",
                           "scale_type",     "subscale",          "score_range",
                           "baseline_value", "post_treatment_value", "change_value",
                           "p_value",        "measurement_timepoint"};

}  // namespace

csv::Table cd_q_table(const std::vector<KinematicRow>& rows) {
  csv::Table t;
  t.header = kCdQHeader;
  for (const auto& r : rows) {
    const auto& m = r.measurement;
    HeadMovement mv = r.movement.value_or(HeadMovement{});
    t.rows.push_back({r.paper_id, r.group_id, cell(mv.movement_type), cell(mv.direction),
                      cell(mv.laterality), cell(m.measurement_performed),
                      cell(m.measurement_system), cell(m.measurement_location),
                      cell(m.frequency_value), cell(m.frequency_unit), cell(m.velocity_value),
                      cell(m.velocity_unit), cell(m.amplitude_value), cell(m.amplitude_unit),
                      cell(m.amplitude_direction), cell(m.latency_value), cell(m.latency_unit)});
  }
  return t;
}

std::vector<KinematicRow> cd_q_from_table(const csv::Table& t) {
  std::vector<std::size_t> idx;
  for (const auto& h : kCdQHeader) idx.push_back(t.column(h));
  std::vector<KinematicRow> rows;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const auto& row = t.rows[i];
    auto at = [&](std::size_t k) -> const std::string& { return row[idx[k]]; };
    KinematicRow r;
    r.paper_id = at(0);
    r.group_id = at(1);
    HeadMovement mv;
    mv.movement_type = text_cell(at(2));
    mv.direction = text_cell(at(3));
    mv.laterality = text_cell(at(4));
    if (mv.movement_type.reported() || mv.direction.reported() || mv.laterality.reported()) {
      r.movement = mv;
    }
    auto& m = r.measurement;
    m.measurement_performed = bool_cell(at(5));
    m.measurement_system = text_cell(at(6));
    m.measurement_location = text_cell(at(7));
    m.frequency_value = number_cell(at(8), i, kCdQHeader[8]);
    m.frequency_unit = text_cell(at(9));
    m.velocity_value = number_cell(at(10), i, kCdQHeader[10]);
    m.velocity_unit = text_cell(at(11));
    m.amplitude_value = number_cell(at(12), i, kCdQHeader[12]);
    m.amplitude_unit = text_cell(at(13));
    m.amplitude_direction = text_cell(at(14));
    m.latency_value = number_cell(at(15), i, kCdQHeader[15]);
    m.latency_unit = text_cell(at(16));
    rows.push_back(std::move(r));
  }
  return rows;
}

csv::Table cd_cs_table(const std::vector<ScaleRow>& rows) {
  csv::Table t;
  t.header = kCdCsHeader;
  for (const auto& r : rows) {
    const auto& s = r.scale;
    t.rows.push_back({r.paper_id, r.group_id, cell(s.scale_name), cell(s.scale_type),
                      cell(s.subscale), cell(s.score_range), cell(s.baseline_value),
                      cell(s.post_treatment_value), cell(s.change_value), cell(s.p_value),
                      cell(s.measurement_timepoint)});
  }
  return t;
}

std::vector<ScaleRow> cd_cs_from_table(const csv::Table& t) {
  std::vector<std::size_t> idx;
  for (const auto& h : kCdCsHeader) idx.push_back(t.column(h));
  std::vector<ScaleRow> rows;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const auto& row = t.rows[i];
    auto at = [&](std::size_t k) -> const std::string& { return row[idx[k]]; };
    ScaleRow r;
    r.paper_id = at(0);
    r.group_id = at(1);
    r.scale.scale_name = text_cell(at(2));
    r.scale.scale_type = text_cell(at(3));
    r.scale.subscale = text_cell(at(4));
    r.scale.score_range = text_cell(at(5));
    r.scale.baseline_value = number_cell(at(6), i, kCdCsHeader[6]);
    r.scale.post_treatment_value = number_cell(at(7), i, kCdCsHeader[7]);
    r.scale.change_value = number_cell(at(8), i, kCdCsHeader[8]);
    r.scale.p_value = number_cell(at(9), i, kCdCsHeader[9]);
    r.scale.measurement_timepoint = text_cell(at(10));
    rows.push_back(std::move(r));
  }
  return rows;
}

}  // namespace ahmkit::corpus
