#include "ahmkit/schema.hpp"

#include <array>
#include <cmath>
#include <set>
#include <utility>

#include <json.hpp>

#include "ahmkit/error.hpp"
#include "ahmkit/text.hpp"

namespace ahmkit::schema {

using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

namespace {

constexpr std::array<std::pair<StudyType, std::string_view>, 9> kStudyTypes{{
    {StudyType::cross_sectional, "cross-sectional"},
    {StudyType::case_report, "case report"},
    {StudyType::case_series, "case series"},
    {StudyType::prospective, "prospective"},
    {StudyType::review, "review"},
    {StudyType::retrospective, "retrospective"},
    {StudyType::cohort, "cohort"},
    {StudyType::randomized_controlled_trial, "randomized controlled trial"},
    {StudyType::other, "other"},
}};

[[noreturn]] void schema_error(const std::string& path, const std::string& what) {
  throw Error(ErrorCategory::schema, path + ": " + what);
}

// nlohmann accepts exponents; plain-decimal provenance forbids them, so the
// raw text is scanned for number tokens before parsing.
void reject_exponent_numbers(std::string_view s) {
  bool in_string = false;
  for (std::size_t i = 0; i < s.size(); ++i) {
    char c = s[i];
    if (in_string) {
      if (c == '\\') ++i;
      else if (c == '"') in_string = false;
      continue;
    }
    if (c == '"') {
      in_string = true;
    } else if (c == '-' || (c >= '0' && c <= '9')) {
      std::size_t j = i;
      while (j < s.size() && (std::string_view("0123456789+-.eE").find(s[j]) != std::string_view::npos)) {
        if (s[j] == 'e' || s[j] == 'E') {
          throw Error(ErrorCategory::schema,
                      "scientific notation is not accepted (byte " + std::to_string(i) + ")");
        }
        ++j;
      }
      i = j - 1;
    }
  }
}

class ObjectReader {
 public:
  ObjectReader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) schema_error(path_, "expected object");
  }

  std::string child(std::string_view key) const { return path_ + "." + std::string(key); }

  const json* find(std::string_view key) {
    seen_.insert(std::string(key));
    auto it = j_.find(std::string(key));
    return it == j_.end() ? nullptr : &*it;
  }

  std::string required_text(std::string_view key) {
    const json* v = find(key);
    if (!v) schema_error(child(key), "required field missing");
    if (!v->is_string()) schema_error(child(key), "expected string");
    return v->get<std::string>();
  }

  Reported<std::string> text(std::string_view key) {
    const json* v = find(key);
    if (!v || v->is_null()) return NR;
    if (!v->is_string()) schema_error(child(key), "expected string or \"NR\"");
    auto s = v->get<std::string>();
    if (s == kNotReported) return NR;
    return s;
  }

  Reported<double> number(std::string_view key) {
    const json* v = find(key);
    if (!v || v->is_null()) return NR;
    if (v->is_number()) {
      double d = v->get<double>();
      if (!std::isfinite(d)) schema_error(child(key), "non-finite number");
      return d;
    }
    if (v->is_string()) {
      auto s = v->get<std::string>();
      if (s == kNotReported) return NR;
      auto t = text::trim(s);
      if (text::is_plain_decimal(t)) return std::stod(t);
    }
    schema_error(child(key), "expected plain decimal number or \"NR\"");
  }

  Reported<std::int64_t> integer(std::string_view key) {
    const json* v = find(key);
    if (!v || v->is_null()) return NR;
    if (v->is_number_integer()) return v->get<std::int64_t>();
    if (v->is_number_float()) {
      double d = v->get<double>();
      if (std::isfinite(d) && std::floor(d) == d && std::fabs(d) < 9.0e15) {
        return static_cast<std::int64_t>(d);
      }
    }
    if (v->is_string()) {
      auto s = v->get<std::string>();
      if (s == kNotReported) return NR;
      auto t = text::trim(s);
      if (text::is_plain_decimal(t) && t.find('.') == std::string::npos) return std::stoll(t);
    }
    schema_error(child(key), "expected integer or \"NR\"");
  }

  // yes / no / NR; JSON booleans are accepted as well.
  Reported<bool> tristate(std::string_view key) {
    const json* v = find(key);
    if (!v || v->is_null()) return NR;
    if (v->is_boolean()) return v->get<bool>();
    if (v->is_string()) {
      auto s = text::fold(v->get<std::string>());
      if (s == "yes" || s == "true") return true;
      if (s == "no" || s == "false") return false;
      if (s == "nr") return NR;
    }
    schema_error(child(key), "expected yes/no/NR");
  }

  Reported<TermSet> terms(std::string_view key) {
    const json* v = find(key);
    if (!v || v->is_null()) return NR;
    if (v->is_string() && v->get<std::string>() == kNotReported) return NR;
    if (!v->is_array()) schema_error(child(key), "expected array of strings or \"NR\"");
    TermSet out;
    for (std::size_t i = 0; i < v->size(); ++i) {
      const auto& e = (*v)[i];
      if (!e.is_string()) {
        schema_error(child(key) + "[" + std::to_string(i) + "]", "expected string");
      }
      out.insert(e.get<std::string>());
    }
    return out;
  }

  void reject_unknown() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!seen_.count(it.key())) schema_error(child(it.key()), "unknown field '" + it.key() + "'");
    }
  }

  const std::string& path() const { return path_; }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

bool absent(const json* v) {
  return !v || v->is_null() || (v->is_string() && v->get<std::string>() == kNotReported);
}

HeadMovement read_head_movement(const json& j, const std::string& path) {
  ObjectReader r(j, path);
  HeadMovement m;
  m.movement_type = r.text("type");
  m.direction = r.text("direction");
  m.laterality = r.text("laterality");
  m.degree = r.text("degree");
  m.frequency = r.text("frequency");
  m.consistency = r.text("consistency");
  m.pattern = r.text("pattern");
  r.reject_unknown();
  return m;
}

QuantMeasurement read_measurement(const json& j, const std::string& path) {
  ObjectReader r(j, path);
  QuantMeasurement m;
  m.measurement_performed = r.tristate("measurement_performed");
  m.measurement_system = r.text("measurement_system");
  m.measurement_location = r.text("measurement_location");
  m.frequency_value = r.number("frequency_value");
  m.frequency_unit = r.text("frequency_unit");
  m.velocity_value = r.number("velocity_value");
  m.velocity_unit = r.text("velocity_unit");
  m.amplitude_value = r.number("amplitude_value");
  m.amplitude_unit = r.text("amplitude_unit");
  m.amplitude_direction = r.text("amplitude_direction");
  m.latency_value = r.number("latency_value");
  m.latency_unit = r.text("latency_unit");
  r.reject_unknown();
  return m;
}

PainAssessment read_pain(const json& j, const std::string& path) {
  ObjectReader r(j, path);
  PainAssessment p;
  p.pain_present = r.tristate("pain_present");
  p.pain_severity = r.number("pain_severity");
  p.pain_severity_scale = r.text("pain_severity_scale");
  p.pain_location = r.text("pain_location");
  p.pain_characteristics = r.text("pain_characteristics");
  r.reject_unknown();
  return p;
}

ClinicalScaleRecord read_scale(const json& j, const std::string& path, ParseDiagnostics* diag) {
  ObjectReader r(j, path);
  ClinicalScaleRecord s;
  s.scale_name = r.text("scale_name");
  s.scale_type = r.text("scale_type");
  s.subscale = r.text("subscale");
  s.score_range = r.text("score_range");
  s.baseline_value = r.number("baseline_value");
  s.post_treatment_value = r.number("post_treatment_value");
  s.change_value = r.number("change_value");
  s.p_value = r.number("p_value");
  s.measurement_timepoint = r.text("measurement_timepoint");
  r.reject_unknown();
  if (diag && s.score_range.reported() && !parse_score_range(s.score_range.value())) {
    diag->warnings.push_back(path + ".score_range: opaque range text '" +
                             s.score_range.value() + "'");
  }
  return s;
}

PatientGroup read_group(const json& j, const std::string& path, ParseDiagnostics* diag) {
  ObjectReader r(j, path);
  PatientGroup g;
  g.group_id = r.required_text("group_id");
  g.condition_name = r.required_text("condition_name");
  auto cat = r.required_text("condition_category");
  auto parsed_cat = parse_condition_category(cat);
  if (!parsed_cat) schema_error(r.child("condition_category"), "unknown category '" + cat + "'");
  g.condition_category = *parsed_cat;
  g.n_patients = r.integer("n_patients");
  g.age = r.text("age");
  g.age_range = r.text("age_range");
  g.gender = r.text("gender");
  g.gender_distribution = r.text("gender_distribution");
  g.causes_ahm = r.tristate("causes_ahm");
  g.head_symptoms = r.terms("head_symptoms");
  g.general_symptoms = r.terms("general_symptoms");
  if (const json* v = r.find("head_movement"); !absent(v)) {
    g.head_movement = read_head_movement(*v, r.child("head_movement"));
  }
  if (const json* v = r.find("measurement"); !absent(v)) {
    g.measurement = read_measurement(*v, r.child("measurement"));
  }
  if (const json* v = r.find("pain"); !absent(v)) {
    g.pain = read_pain(*v, r.child("pain"));
  }
  g.eye_abnormalities = r.text("eye_abnormalities");
  if (const json* v = r.find("scales"); !absent(v)) {
    if (!v->is_array()) schema_error(r.child("scales"), "expected array");
    for (std::size_t i = 0; i < v->size(); ++i) {
      g.scales.push_back(
          read_scale((*v)[i], r.child("scales") + "[" + std::to_string(i) + "]", diag));
    }
  }
  r.reject_unknown();
  return g;
}

StudyExtraction read_study(const json& j, ParseDiagnostics* diag) {
  ObjectReader r(j, "$");
  StudyExtraction s;
  s.paper_id = r.required_text("paper_id");
  s.study_title = r.text("study_title");
  auto st = r.required_text("study_type");
  auto parsed = parse_study_type(st);
  if (!parsed) schema_error(r.child("study_type"), "unknown study type '" + st + "'");
  s.study_type = *parsed;
  s.total_sample_size = r.integer("total_sample_size");
  s.study_age_range = r.text("study_age_range");
  s.study_gender_distribution = r.text("study_gender_distribution");
  const json* groups = r.find("groups");
  if (groups) {
    if (!groups->is_array()) schema_error(r.child("groups"), "expected array");
    for (std::size_t i = 0; i < groups->size(); ++i) {
      s.groups.push_back(read_group((*groups)[i], "$.groups[" + std::to_string(i) + "]", diag));
    }
  }
  r.reject_unknown();
  return s;
}

// ---------------------------------------------------------------- writing

ojson nr_or(const Reported<std::string>& v) {
  return v.reported() ? ojson(v.value()) : ojson(kNotReported);
}

ojson nr_or(const Reported<double>& v) {
  if (v.is_nr()) return ojson(kNotReported);
  double d = v.value();
  ojson num = d;
  // Keep the plain-decimal contract when the JSON writer would use an exponent.
  auto dumped = num.dump();
  if (dumped.find_first_of("eE") != std::string::npos) return ojson(text::format_decimal(d));
  return num;
}

ojson nr_or(const Reported<std::int64_t>& v) {
  return v.reported() ? ojson(v.value()) : ojson(kNotReported);
}

ojson yes_no(const Reported<bool>& v) {
  if (v.is_nr()) return ojson(kNotReported);
  return ojson(v.value() ? "yes" : "no");
}

ojson terms_or(const Reported<TermSet>& v) {
  if (v.is_nr()) return ojson(kNotReported);
  ojson arr = ojson::array();
  for (const auto& t : v.value()) arr.push_back(t);
  return arr;
}

ojson write_group(const PatientGroup& g) {
  ojson o;
  o["group_id"] = g.group_id;
  o["condition_name"] = g.condition_name;
  o["condition_category"] = to_string(g.condition_category);
  o["n_patients"] = nr_or(g.n_patients);
  o["age"] = nr_or(g.age);
  o["age_range"] = nr_or(g.age_range);
  o["gender"] = nr_or(g.gender);
  o["gender_distribution"] = nr_or(g.gender_distribution);
  o["causes_ahm"] = yes_no(g.causes_ahm);
  o["head_symptoms"] = terms_or(g.head_symptoms);
  o["general_symptoms"] = terms_or(g.general_symptoms);
  if (g.head_movement) {
    const auto& m = *g.head_movement;
    ojson h;
    h["type"] = nr_or(m.movement_type);
    h["direction"] = nr_or(m.direction);
    h["laterality"] = nr_or(m.laterality);
    h["degree"] = nr_or(m.degree);
    h["frequency"] = nr_or(m.frequency);
    h["consistency"] = nr_or(m.consistency);
    h["pattern"] = nr_or(m.pattern);
    o["head_movement"] = std::move(h);
  } else {
    o["head_movement"] = nullptr;
  }
  if (g.measurement) {
    const auto& m = *g.measurement;
    ojson q;
    q["measurement_performed"] =
        m.measurement_performed.reported() ? ojson(m.measurement_performed.value())
                                           : ojson(kNotReported);
    q["measurement_system"] = nr_or(m.measurement_system);
    q["measurement_location"] = nr_or(m.measurement_location);
    q["frequency_value"] = nr_or(m.frequency_value);
    q["frequency_unit"] = nr_or(m.frequency_unit);
    q["velocity_value"] = nr_or(m.velocity_value);
    q["velocity_unit"] = nr_or(m.velocity_unit);
    q["amplitude_value"] = nr_or(m.amplitude_value);
    q["amplitude_unit"] = nr_or(m.amplitude_unit);
    q["amplitude_direction"] = nr_or(m.amplitude_direction);
    q["latency_value"] = nr_or(m.latency_value);
    q["latency_unit"] = nr_or(m.latency_unit);
    o["measurement"] = std::move(q);
  } else {
    o["measurement"] = nullptr;
  }
  if (g.pain) {
    const auto& p = *g.pain;
    ojson q;
    q["pain_present"] = yes_no(p.pain_present);
    q["pain_severity"] = nr_or(p.pain_severity);
    q["pain_severity_scale"] = nr_or(p.pain_severity_scale);
    q["pain_location"] = nr_or(p.pain_location);
    q["pain_characteristics"] = nr_or(p.pain_characteristics);
    o["pain"] = std::move(q);
  } else {
    o["pain"] = nullptr;
  }
  o["eye_abnormalities"] = nr_or(g.eye_abnormalities);
  ojson scales = ojson::array();
  for (const auto& s : g.scales) {
    ojson c;
    c["scale_name"] = nr_or(s.scale_name);
    c["scale_type"] = nr_or(s.scale_type);
    c["subscale"] = nr_or(s.subscale);
    c["score_range"] = nr_or(s.score_range);
    c["baseline_value"] = nr_or(s.baseline_value);
    c["post_treatment_value"] = nr_or(s.post_treatment_value);
    c["change_value"] = nr_or(s.change_value);
    c["p_value"] = nr_or(s.p_value);
    c["measurement_timepoint"] = nr_or(s.measurement_timepoint);
    scales.push_back(std::move(c));
  }
  o["scales"] = std::move(scales);
  return o;
}

void check_value(ValidationReport& rep, const std::string& path, const Reported<double>& value,
                 const Reported<std::string>& unit) {
  if (value.is_nr()) return;
  double v = value.value();
  if (!std::isfinite(v)) {
    rep.violations.push_back({path, "value_nonfinite", "numeric value must be finite"});
  } else if (v < 0) {
    rep.violations.push_back({path, "value_negative", "numeric value must be >= 0"});
  }
  if (unit.is_nr() || text::trim(unit.value()).empty()) {
    rep.violations.push_back({path, "unit_missing", "reported value has no unit"});
  }
}

}  // namespace

std::string_view to_string(StudyType t) {
  for (const auto& [k, name] : kStudyTypes) {
    if (k == t) return name;
  }
  return "other";
}

std::string_view to_string(ConditionCategory c) {
  return c == ConditionCategory::disease ? "disease" : "disorder";
}

std::optional<StudyType> parse_study_type(std::string_view s) {
  auto f = text::fold(s);
  for (const auto& [k, name] : kStudyTypes) {
    if (f == name) return k;
  }
  return std::nullopt;
}

std::optional<ConditionCategory> parse_condition_category(std::string_view s) {
  auto f = text::fold(s);
  if (f == "disease") return ConditionCategory::disease;
  if (f == "disorder") return ConditionCategory::disorder;
  return std::nullopt;
}

bool QuantMeasurement::has_kinematics() const {
  return amplitude_value.reported() || frequency_value.reported() ||
         latency_value.reported() || velocity_value.reported();
}

std::optional<ScoreRange> parse_score_range(std::string_view raw) {
  static constexpr std::string_view kEnDash = "\xE2\x80\x93";
  std::string s = text::trim(raw);
  std::size_t sep = std::string::npos;
  std::size_t sep_len = 0;
  // The first '-' after position 0 (a leading '-' would be a sign).
  for (std::size_t i = 1; i < s.size(); ++i) {
    if (s[i] == '-') {
      sep = i;
      sep_len = 1;
      break;
    }
    if (s.compare(i, kEnDash.size(), kEnDash) == 0) {
      sep = i;
      sep_len = kEnDash.size();
      break;
    }
  }
  if (sep == std::string::npos) return std::nullopt;
  auto lo = text::trim(std::string_view(s).substr(0, sep));
  auto hi = text::trim(std::string_view(s).substr(sep + sep_len));
  if (!text::is_plain_decimal(lo) || !text::is_plain_decimal(hi)) return std::nullopt;
  ScoreRange r{std::stod(lo), std::stod(hi)};
  if (r.lo > r.hi) return std::nullopt;
  return r;
}

StudyExtraction parse_extraction(std::string_view json_text, ParseDiagnostics* diagnostics) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCategory::parse, std::string("malformed document: ") + e.what());
  }
  reject_exponent_numbers(json_text);
  return read_study(j, diagnostics);
}

std::vector<StudyExtraction> parse_corpus_lines(std::string_view jsonl_text,
                                                ParseDiagnostics* diagnostics) {
  std::vector<StudyExtraction> out;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= jsonl_text.size()) {
    auto end = jsonl_text.find('\n', start);
    if (end == std::string_view::npos) end = jsonl_text.size();
    ++line_no;
    auto line = jsonl_text.substr(start, end - start);
    if (!text::trim(line).empty()) {
      try {
        out.push_back(parse_extraction(line, diagnostics));
      } catch (const Error& e) {
        throw Error(e.category(), "line " + std::to_string(line_no) + ": " + e.what());
      }
    }
    start = end + 1;
  }
  return out;
}

std::string serialize_extraction(const StudyExtraction& s, int indent) {
  ojson o;
  o["paper_id"] = s.paper_id;
  o["study_title"] = nr_or(s.study_title);
  o["study_type"] = to_string(s.study_type);
  o["total_sample_size"] = nr_or(s.total_sample_size);
  o["study_age_range"] = nr_or(s.study_age_range);
  o["study_gender_distribution"] = nr_or(s.study_gender_distribution);
  ojson groups = ojson::array();
  for (const auto& g : s.groups) groups.push_back(write_group(g));
  o["groups"] = std::move(groups);
  return o.dump(indent);
}

ValidationReport validate(const StudyExtraction& s) {
  ValidationReport rep;
  if (text::trim(s.paper_id).empty()) {
    rep.violations.push_back({"$.paper_id", "paper_id_empty", "paper_id must be nonempty"});
  }
  if (s.total_sample_size.reported() && s.total_sample_size.value() < 0) {
    rep.violations.push_back(
        {"$.total_sample_size", "sample_size_negative", "total_sample_size must be >= 0"});
  }
  if (s.groups.empty()) {
    rep.violations.push_back({"$.groups", "groups_empty", "at least one patient group required"});
  }
  std::set<std::string> seen_ids;
  for (std::size_t gi = 0; gi < s.groups.size(); ++gi) {
    const auto& g = s.groups[gi];
    const std::string gp = "$.groups[" + std::to_string(gi) + "]";
    if (!seen_ids.insert(g.group_id).second) {
      rep.violations.push_back({gp + ".group_id", "group_id_duplicate",
                                "group_id '" + g.group_id + "' repeats within the study"});
    }
    if (g.n_patients.reported() && g.n_patients.value() < 1) {
      rep.violations.push_back(
          {gp + ".n_patients", "n_patients_nonpositive", "n_patients must be >= 1"});
    }
    if (g.head_movement && g.causes_ahm.reported() && g.causes_ahm.value()) {
      const auto& t = g.head_movement->movement_type;
      if (t.is_nr() || text::trim(t.value()).empty()) {
        rep.violations.push_back({gp + ".head_movement.type", "movement_type_missing",
                                  "movement type required when causes_ahm is yes"});
      }
    }
    if (g.measurement) {
      const auto& m = *g.measurement;
      const std::string mp = gp + ".measurement";
      check_value(rep, mp + ".frequency_value", m.frequency_value, m.frequency_unit);
      check_value(rep, mp + ".velocity_value", m.velocity_value, m.velocity_unit);
      check_value(rep, mp + ".amplitude_value", m.amplitude_value, m.amplitude_unit);
      check_value(rep, mp + ".latency_value", m.latency_value, m.latency_unit);
    }
    if (g.pain && g.pain->pain_severity.reported()) {
      const auto& present = g.pain->pain_present;
      if (present.is_nr() || !present.value()) {
        rep.violations.push_back({gp + ".pain.pain_severity", "pain_severity_without_pain",
                                  "pain_severity reported but pain_present is not yes"});
      }
    }
    for (std::size_t si = 0; si < g.scales.size(); ++si) {
      const auto& sc = g.scales[si];
      const std::string sp = gp + ".scales[" + std::to_string(si) + "]";
      if (sc.p_value.reported()) {
        double p = sc.p_value.value();
        if (!(p >= 0.0 && p <= 1.0)) {
          rep.violations.push_back({sp + ".p_value", "p_value_out_of_range",
                                    "p_value must lie in [0, 1]"});
        }
      }
      if (sc.baseline_value.reported() && sc.score_range.reported()) {
        if (auto range = parse_score_range(sc.score_range.value())) {
          double b = sc.baseline_value.value();
          if (b < range->lo || b > range->hi) {
            rep.violations.push_back(
                {sp + ".baseline_value", "baseline_out_of_range",
                 "baseline " + text::format_decimal(b) + " outside " + sc.score_range.value()});
          }
        }
      }
    }
  }
  return rep;
}

}  // namespace ahmkit::schema
