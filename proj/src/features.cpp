#include "ahmkit/features.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>

#include "ahmkit/error.hpp"
#include "ahmkit/text.hpp"

namespace ahmkit::features {

namespace {

constexpr std::array<std::string_view, kLabelCount> kLabelNames{
    "torticollis", "laterocollis", "anterocollis", "retrocollis", "head_tremor"};

// Whole-token match for short acronyms so that e.g. "stimulus" never hits "imu".
std::vector<std::string> tokens(std::string_view s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : text::fold(s)) {
    if (std::isalnum(static_cast<unsigned char>(c))) {
      cur.push_back(c);
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

struct SystemRule {
  int code;
  std::vector<std::string_view> tokens;
  std::vector<std::string_view> phrases;
};

const std::vector<SystemRule>& system_rules() {
  static const std::vector<SystemRule> rules{
      {0, {"emg", "semg"}, {"electromyograph"}},
      {1, {"imu", "imus", "accelerometer", "accelerometers", "accelerometry", "gyroscope"},
       {"inertial", "acceleromet"}},
      {2, {"vicon", "mocap", "optoelectronic"}, {"motion capture", "optical", "optokinetic tracking"}},
      {3, {"goniometer", "goniometry"}, {"goniomet"}},
      {4, {"vog", "eog"}, {"eye tracking", "eye-tracking", "eye tracker", "oculograph"}},
      {5, {"video"}, {"video"}},
      {6, {"mri", "fmri"}, {"magnetic resonance"}},
  };
  return rules;
}

std::string format_cell(double v) { return text::format_decimal(v); }

}  // namespace

std::string_view to_string(Label l) { return kLabelNames[static_cast<std::size_t>(l)]; }

std::size_t label_count(const LabelSet& s) {
  return static_cast<std::size_t>(std::count(s.begin(), s.end(), true));
}

std::string label_key(const LabelSet& s) {
  std::string key;
  for (std::size_t i = 0; i < kLabelCount; ++i) {
    if (!s[i]) continue;
    if (!key.empty()) key += '+';
    key += kLabelNames[i];
  }
  return key;
}

std::optional<Label> standardize_term(std::string_view term) {
  static const std::map<std::string, Label, std::less<>> table{
      {"torticollis", Label::torticollis},
      {"laterocollis", Label::laterocollis},
      {"anterocollis", Label::anterocollis},
      {"retrocollis", Label::retrocollis},
      {"head tremor", Label::head_tremor},
      {"head_tremor", Label::head_tremor},
      {"dystonic", Label::torticollis},
      {"dystonia", Label::torticollis},
      {"rotational cd", Label::torticollis},
      {"spasmodic torticollis", Label::torticollis},
      {"oscillation", Label::head_tremor},
      {"jerky", Label::head_tremor},
  };
  auto it = table.find(text::fold(term));
  if (it == table.end()) return std::nullopt;
  return it->second;
}

LabelResult standardize_labels(std::string_view raw) {
  LabelResult r;
  for (const auto& term : text::split_terms(raw)) {
    if (auto l = standardize_term(term)) {
      r.labels[static_cast<std::size_t>(*l)] = true;
    } else {
      r.unmapped.push_back(term);
    }
  }
  return r;
}

std::string_view to_string(AmplitudeUnit u) {
  switch (u) {
    case AmplitudeUnit::degrees: return "degrees";
    case AmplitudeUnit::millimetres: return "mm";
    case AmplitudeUnit::centimetres: return "cm";
    case AmplitudeUnit::emg_percent: return "emg_percent";
    case AmplitudeUnit::dimensionless: return "dimensionless";
    case AmplitudeUnit::unknown: return "unknown";
  }
  return "";
}

AmplitudeUnit canonical_amplitude_unit(std::string_view unit) {
  const auto u = text::fold(unit);
  if (u == "deg" || u == "degree" || u == "degrees" || u == "\xC2\xB0" || u == "angle") {
    return AmplitudeUnit::degrees;
  }
  if (u == "mm" || u == "millimeter" || u == "millimeters" || u == "millimetre" ||
      u == "millimetres") {
    return AmplitudeUnit::millimetres;
  }
  if (u == "cm" || u == "centimeter" || u == "centimeters" || u == "centimetre" ||
      u == "centimetres") {
    return AmplitudeUnit::centimetres;
  }
  if (u == "%" || text::contains(u, "emg") || text::contains(u, "mvc") || text::contains(u, "%")) {
    return AmplitudeUnit::emg_percent;
  }
  if (u == "dimensionless" || u == "a.u." || u == "au" || u == "ratio" || u == "normalized" ||
      u == "normalised" || u == "unitless" || u == "none") {
    return AmplitudeUnit::dimensionless;
  }
  return AmplitudeUnit::unknown;
}

std::string_view to_string(UnitClass c) {
  switch (c) {
    case UnitClass::degrees: return "degrees";
    case UnitClass::millimetres: return "mm";
    case UnitClass::other: return "other";
  }
  return "";
}

Amplitude normalize_amplitude(double value, std::string_view unit) {
  Amplitude a{value, UnitClass::other, canonical_amplitude_unit(unit)};
  switch (a.reported_unit) {
    case AmplitudeUnit::degrees: a.unit_class = UnitClass::degrees; break;
    case AmplitudeUnit::millimetres: a.unit_class = UnitClass::millimetres; break;
    case AmplitudeUnit::centimetres:
      a.value = value * 10.0;
      a.unit_class = UnitClass::millimetres;
      break;
    default: break;
  }
  return a;
}

std::optional<double> clean_frequency(double hz) {
  if (!std::isfinite(hz) || hz < kFrequencyMinHz || hz > kFrequencyMaxHz) return std::nullopt;
  return hz;
}

std::optional<double> clean_latency(double value, std::string_view unit) {
  if (!std::isfinite(value)) return std::nullopt;
  const auto u = text::fold(unit);
  if (u == "ms" || u == "msec" || u == "millisecond" || u == "milliseconds") return value;
  if (u == "s" || u == "sec" || u == "second" || u == "seconds") return value * 1000.0;
  return std::nullopt;
}

int encode_measurement_system(std::string_view system) {
  const auto folded = text::fold(system);
  const auto toks = tokens(system);
  for (const auto& rule : system_rules()) {
    for (auto t : rule.tokens) {
      if (std::find(toks.begin(), toks.end(), t) != toks.end()) return rule.code;
    }
    for (auto p : rule.phrases) {
      if (text::contains(folded, p)) return rule.code;
    }
  }
  return 7;
}

double median(std::vector<double> v) {
  if (v.empty()) throw Error(ErrorCategory::insufficient_data, "median of empty set");
  std::sort(v.begin(), v.end());
  const auto n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

Imputation impute_by_class_median(const std::vector<SparseColumn>& columns,
                                  const std::vector<LabelSet>& labels) {
  Imputation out;
  const std::size_t n = labels.size();
  for (std::size_t c = 0; c < columns.size(); ++c) {
    const auto& col = columns[c];
    if (col.size() != n) throw Error(ErrorCategory::schema, "imputation: column length mismatch");
    std::vector<double> observed;
    for (const auto& v : col) {
      if (v) observed.push_back(*v);
    }
    if (observed.empty()) {
      out.dropped.push_back(c);
      continue;
    }
    const double global = median(observed);

    // Cache by label key: records with the same label set share a cohort.
    std::map<std::string, double> cohort_median;
    std::vector<double> filled(n);
    std::vector<bool> flags(n, false);
    for (std::size_t i = 0; i < n; ++i) {
      if (col[i]) {
        filled[i] = *col[i];
        continue;
      }
      flags[i] = true;
      const auto key = label_key(labels[i]);
      auto it = cohort_median.find(key);
      if (it == cohort_median.end()) {
        std::vector<double> donors;
        for (std::size_t j = 0; j < n; ++j) {
          if (!col[j]) continue;
          bool shares = false;
          for (std::size_t l = 0; l < kLabelCount; ++l) shares |= labels[i][l] && labels[j][l];
          if (shares) donors.push_back(*col[j]);
        }
        it = cohort_median.emplace(key, donors.empty() ? global : median(std::move(donors))).first;
      }
      filled[i] = it->second;
    }
    out.columns.push_back(std::move(filled));
    out.imputed.push_back(std::move(flags));
    out.kept.push_back(c);
  }
  return out;
}

FeatureMatrix build_feature_matrix(const std::vector<corpus::KinematicRow>& rows) {
  FeatureMatrix m;
  static const std::array<std::string, 4> kKinematic{"amplitude", "frequency_hz", "latency_ms",
                                                     "velocity"};
  std::vector<SparseColumn> kin(4);
  std::vector<int> system_code;
  std::vector<std::array<double, 3>> unit_onehot;

  for (const auto& row : rows) {
    const std::string where = row.paper_id + "/" + row.group_id;
    if (!row.movement || row.movement->movement_type.is_nr()) {
      m.warnings.push_back("no-movement-type: " + where + " excluded");
      ++m.excluded;
      continue;
    }
    auto lr = standardize_labels(row.movement->movement_type.value());
    if (!lr.unmapped.empty() || label_count(lr.labels) == 0) {
      std::string terms;
      for (const auto& t : lr.unmapped) terms += (terms.empty() ? "" : ", ") + t;
      m.warnings.push_back("unmapped-label: " + where + " '" + terms + "' excluded");
      ++m.excluded;
      continue;
    }
    const auto& q = row.measurement;

    std::optional<double> amplitude;
    std::array<double, 3> onehot{0, 0, 0};
    if (const double* v = q.amplitude_value.get()) {
      const std::string unit = q.amplitude_unit.reported() ? q.amplitude_unit.value() : "";
      auto a = normalize_amplitude(*v, unit);
      if (a.reported_unit == AmplitudeUnit::unknown) {
        m.warnings.push_back("unknown-amplitude-unit: " + where + " '" + unit + "'");
      }
      amplitude = a.value;
      if (a.reported_unit == AmplitudeUnit::degrees) onehot[0] = 1;
      if (a.reported_unit == AmplitudeUnit::millimetres) onehot[1] = 1;
      if (a.reported_unit == AmplitudeUnit::centimetres) onehot[2] = 1;
    }

    std::optional<double> frequency;
    if (const double* v = q.frequency_value.get()) {
      const std::string unit = q.frequency_unit.reported() ? text::fold(q.frequency_unit.value()) : "hz";
      if (unit == "hz" || unit == "hertz") frequency = clean_frequency(*v);
    }

    std::optional<double> latency;
    if (const double* v = q.latency_value.get()) {
      latency = clean_latency(*v, q.latency_unit.reported() ? q.latency_unit.value() : "");
    }

    std::optional<double> velocity = q.velocity_value.to_optional();

    kin[0].push_back(amplitude);
    kin[1].push_back(frequency);
    kin[2].push_back(latency);
    kin[3].push_back(velocity);
    system_code.push_back(
        encode_measurement_system(q.measurement_system.reported() ? q.measurement_system.value() : ""));
    unit_onehot.push_back(onehot);
    m.labels.push_back(lr.labels);
    m.paper_ids.push_back(row.paper_id);
    m.group_ids.push_back(row.group_id);
  }
  if (m.labels.empty()) {
    throw Error(ErrorCategory::insufficient_data, "feature matrix: no labelled kinematic rows");
  }

  auto imp = impute_by_class_median(kin, m.labels);
  for (auto c : imp.dropped) {
    m.warnings.push_back("dropped-column: " + kKinematic[c] + " missing in every row");
  }
  for (auto c : imp.kept) m.columns.push_back(kKinematic[c]);
  m.columns.insert(m.columns.end(),
                   {"measurement_system", "amp_unit_degrees", "amp_unit_mm", "amp_unit_cm"});
  for (auto c : imp.kept) m.columns.push_back(kKinematic[c] + "_imputed");

  const std::size_t n = m.labels.size();
  m.rows.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto& r = m.rows[i];
    for (const auto& col : imp.columns) r.push_back(col[i]);
    r.push_back(system_code[i]);
    r.insert(r.end(), unit_onehot[i].begin(), unit_onehot[i].end());
    for (const auto& flags : imp.imputed) r.push_back(flags[i] ? 1.0 : 0.0);
  }
  return m;
}

csv::Table feature_table(const FeatureMatrix& m) {
  csv::Table t;
  t.header = {"paper_id", "group_id"};
  t.header.insert(t.header.end(), m.columns.begin(), m.columns.end());
  for (auto name : kLabelNames) t.header.emplace_back(name);
  for (std::size_t i = 0; i < m.size(); ++i) {
    csv::Row row{m.paper_ids[i], m.group_ids[i]};
    for (double v : m.rows[i]) row.push_back(format_cell(v));
    for (bool b : m.labels[i]) row.push_back(b ? "1" : "0");
    t.rows.push_back(std::move(row));
  }
  return t;
}

FeatureMatrix feature_matrix_from_table(const csv::Table& t) {
  FeatureMatrix m;
  const auto cp = t.column("paper_id");
  const auto cg = t.column("group_id");
  std::array<std::size_t, kLabelCount> lc{};
  for (std::size_t l = 0; l < kLabelCount; ++l) lc[l] = t.column(std::string(kLabelNames[l]));
  std::vector<std::size_t> fc;
  for (std::size_t c = 0; c < t.header.size(); ++c) {
    if (c == cp || c == cg || std::find(lc.begin(), lc.end(), c) != lc.end()) continue;
    fc.push_back(c);
    m.columns.push_back(t.header[c]);
  }
  for (const auto& row : t.rows) {
    m.paper_ids.push_back(row[cp]);
    m.group_ids.push_back(row[cg]);
    std::vector<double> x;
    for (auto c : fc) {
      auto cell = text::trim(row[c]);
      if (!text::is_plain_decimal(cell)) {
        throw Error(ErrorCategory::parse, "feature csv: non-numeric cell '" + cell + "' in " + t.header[c]);
      }
      x.push_back(std::stod(cell));
    }
    m.rows.push_back(std::move(x));
    LabelSet s{};
    for (std::size_t l = 0; l < kLabelCount; ++l) s[l] = text::trim(row[lc[l]]) == "1";
    m.labels.push_back(s);
  }
  return m;
}

}  // namespace ahmkit::features
