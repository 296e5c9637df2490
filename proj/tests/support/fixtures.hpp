#pragma once

// Record builders, random generators and scripted-backend scenarios shared
// by the unit tests and the acceptance runner.

#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <initializer_list>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <unistd.h>

#include <json.hpp>

#include "ahmkit/classify.hpp"
#include "ahmkit/orchestrator.hpp"
#include "ahmkit/schema.hpp"

namespace fixtures {

namespace fs = std::filesystem;
using namespace ahmkit;

/// Fresh scratch directory under the system temp dir, removed on scope exit.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::uint64_t counter = 0;
    path_ = fs::temp_directory_path() /
            ("ahmkit-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const fs::path& path() const { return path_; }
  std::string str(const std::string& child = "") const {
    return child.empty() ? path_.string() : (path_ / child).string();
  }

 private:
  fs::path path_;
};

// ------------------------------------------------------------------ records

inline schema::ClinicalScaleRecord scale(const std::string& name, double baseline,
                                         const std::string& subscale = "") {
  schema::ClinicalScaleRecord s;
  s.scale_name = name;
  s.baseline_value = baseline;
  if (!subscale.empty()) s.subscale = subscale;
  return s;
}

inline schema::PatientGroup cd_group(const std::string& id) {
  schema::PatientGroup g;
  g.group_id = id;
  g.condition_name = "Cervical dystonia";
  g.condition_category = schema::ConditionCategory::disorder;
  g.n_patients = std::int64_t{12};
  return g;
}

/// A cervical-dystonia group with a movement type and kinematic values.
/// Pass NaN to leave a value unreported.
inline schema::PatientGroup kinematic_group(const std::string& id, const std::string& movement,
                                            double amplitude, const std::string& amp_unit,
                                            double frequency_hz,
                                            double latency = NAN, const std::string& lat_unit = "ms") {
  auto g = cd_group(id);
  g.causes_ahm = true;
  schema::HeadMovement hm;
  hm.movement_type = movement;
  g.head_movement = hm;
  schema::QuantMeasurement m;
  m.measurement_performed = true;
  m.measurement_system = "accelerometer";
  if (!std::isnan(amplitude)) {
    m.amplitude_value = amplitude;
    m.amplitude_unit = amp_unit;
  }
  if (!std::isnan(frequency_hz)) {
    m.frequency_value = frequency_hz;
    m.frequency_unit = "Hz";
  }
  if (!std::isnan(latency)) {
    m.latency_value = latency;
    m.latency_unit = lat_unit;
  }
  g.measurement = m;
  return g;
}

inline schema::StudyExtraction study(const std::string& paper_id,
                                     std::vector<schema::PatientGroup> groups) {
  schema::StudyExtraction s;
  s.paper_id = paper_id;
  s.study_title = "Study " + paper_id;
  s.study_type = schema::StudyType::case_series;
  s.groups = std::move(groups);
  return s;
}

// ------------------------------------------------------------ random records

/// Deterministic generator of schema-valid records covering every field,
/// with each optional leaf independently NR.
class RecordGenerator {
 public:
  explicit RecordGenerator(std::uint64_t seed) : rng_(seed) {}

  schema::StudyExtraction next(const std::string& paper_id) {
    schema::StudyExtraction s;
    s.paper_id = paper_id;
    s.study_title = maybe(word_phrase());
    s.study_type = static_cast<schema::StudyType>(below(9));
    s.total_sample_size = maybe(static_cast<std::int64_t>(below(500)));
    s.study_age_range = maybe(std::to_string(below(40)) + "-" + std::to_string(40 + below(40)));
    s.study_gender_distribution = maybe(word_phrase());
    const std::size_t groups = 1 + below(3);
    for (std::size_t i = 0; i < groups; ++i) s.groups.push_back(group("G" + std::to_string(i + 1)));
    return s;
  }

 private:
  std::size_t below(std::size_t n) { return static_cast<std::size_t>(rng_() % n); }
  bool coin() { return rng_() & 1u; }
  double decimal() {
    // Mix of integers, short decimals and full-precision doubles.
    switch (below(3)) {
      case 0: return static_cast<double>(below(200));
      case 1: return static_cast<double>(below(100000)) / 100.0;
      default: return std::ldexp(static_cast<double>(rng_() >> 11), -53) * 1000.0 - 500.0;
    }
  }
  template <typename T>
  Reported<T> maybe(T v) {
    if (coin()) return NR;
    return Reported<T>(std::move(v));
  }
  std::string word() {
    static const std::array<const char*, 12> words{
        "tremor", "rotation", "Head", "neck", "\"quoted\"", "dystonia",
        "comma, inside", "naïve", "left", "right", "tab\there", "line\nbreak"};
    return words[below(words.size())];
  }
  std::string word_phrase() {
    std::string s = word();
    for (std::size_t i = below(3); i > 0; --i) s += " " + word();
    return s;
  }
  schema::TermSet terms() {
    schema::TermSet t;
    for (std::size_t i = below(4); i > 0; --i) t.insert(word());
    return t;
  }

  schema::PatientGroup group(const std::string& id) {
    schema::PatientGroup g;
    g.group_id = id;
    g.condition_name = coin() ? "cervical dystonia" : word_phrase();
    g.condition_category = coin() ? schema::ConditionCategory::disease
                                  : schema::ConditionCategory::disorder;
    g.n_patients = maybe(static_cast<std::int64_t>(1 + below(80)));
    g.age = maybe(word_phrase());
    g.age_range = maybe(word_phrase());
    g.gender = maybe(word());
    g.gender_distribution = maybe(word_phrase());
    g.head_symptoms = maybe(terms());
    g.general_symptoms = maybe(terms());
    if (coin()) {
      schema::HeadMovement hm;
      hm.movement_type = word_phrase();
      hm.direction = maybe(word());
      hm.laterality = maybe(word());
      hm.degree = maybe(word());
      hm.frequency = maybe(word());
      hm.consistency = maybe(word());
      hm.pattern = maybe(word());
      g.head_movement = hm;
      g.causes_ahm = maybe(coin());
    }
    if (coin()) {
      schema::QuantMeasurement m;
      m.measurement_performed = maybe(coin());
      m.measurement_system = maybe(word());
      m.measurement_location = maybe(word());
      auto value = [&](Reported<double>& v, Reported<std::string>& u, const char* unit) {
        if (coin()) {
          v = decimal();
          u = std::string(unit);
        }
      };
      value(m.frequency_value, m.frequency_unit, "Hz");
      value(m.velocity_value, m.velocity_unit, "deg/s");
      value(m.amplitude_value, m.amplitude_unit, "mm");
      m.amplitude_direction = maybe(word());
      value(m.latency_value, m.latency_unit, "ms");
      g.measurement = m;
    }
    if (coin()) {
      schema::PainAssessment p;
      p.pain_present = maybe(coin());
      if (p.pain_present.reported() && p.pain_present.value()) p.pain_severity = maybe(decimal());
      p.pain_severity_scale = maybe(word());
      p.pain_location = maybe(word());
      p.pain_characteristics = maybe(word_phrase());
      g.pain = p;
    }
    g.eye_abnormalities = maybe(word_phrase());
    for (std::size_t i = below(3); i > 0; --i) {
      schema::ClinicalScaleRecord s;
      s.scale_name = maybe(std::string(coin() ? "TWSTRS" : "Tsui"));
      s.scale_type = maybe(word());
      s.subscale = maybe(word());
      s.baseline_value = maybe(static_cast<double>(below(35)));
      s.score_range = maybe(std::string("0-35"));
      s.post_treatment_value = maybe(decimal());
      s.change_value = maybe(decimal());
      s.p_value = maybe(static_cast<double>(below(1000)) / 1000.0);
      s.measurement_timepoint = maybe(word_phrase());
      g.scales.push_back(s);
    }
    return g;
  }

  std::mt19937_64 rng_;
};

// ----------------------------------------------------------- learner data

struct Dataset {
  classify::Matrix x;
  std::vector<classify::LabelSet> labels;
};

/// Five well-separated clusters, one per label, plus a few two-label rows
/// placed between the torticollis and head-tremor clusters.
inline Dataset separable_dataset(std::size_t per_label = 20, std::uint64_t seed = 7) {
  std::mt19937_64 rng(seed);
  auto jitter = [&] { return (std::ldexp(static_cast<double>(rng() >> 11), -53) - 0.5) * 0.4; };
  Dataset d;
  d.x = classify::Matrix(per_label * classify::kLabelCount, classify::kLabelCount);
  std::size_t r = 0;
  for (std::size_t l = 0; l < classify::kLabelCount; ++l) {
    for (std::size_t i = 0; i < per_label; ++i, ++r) {
      for (std::size_t c = 0; c < classify::kLabelCount; ++c) d.x(r, c) = jitter();
      d.x(r, l) += 4.0;
      classify::LabelSet s{};
      s[l] = true;
      d.labels.push_back(s);
    }
  }
  return d;
}

/// XOR of the signs of two inputs decides the head-tremor label; every row
/// also carries torticollis. The set is closed under x → −x with labels
/// unchanged, so the regularized logistic optimum has zero weights: no
/// linear model beats the class prior on the tremor label.
inline Dataset xor_dataset(std::size_t n = 200, std::uint64_t seed = 11) {
  std::mt19937_64 rng(seed);
  auto u = [&] { return std::ldexp(static_cast<double>(rng() >> 11), -53) * 2.0 - 1.0; };
  Dataset d;
  d.x = classify::Matrix(n, 2);
  for (std::size_t i = 0; i + 1 < n; i += 2) {
    // Corners of the square, away from the axes.
    const double a = (i & 2u) ? 1.0 : -1.0;
    const double b = (i & 4u) ? 1.0 : -1.0;
    d.x(i, 0) = a + 0.3 * u();
    d.x(i, 1) = b + 0.3 * u();
    d.x(i + 1, 0) = -d.x(i, 0);
    d.x(i + 1, 1) = -d.x(i, 1);
    classify::LabelSet s{};
    s[0] = true;
    s[4] = (a > 0) != (b > 0);
    d.labels.push_back(s);
    d.labels.push_back(s);
  }
  return d;
}

// -------------------------------------------------------- scripted backends

/// Evaluation report JSON: six dimension scores and optional issues.
inline nlohmann::json report(const std::array<double, 6>& scores,
                             const std::vector<std::pair<std::string, std::string>>& issues = {}) {
  nlohmann::json s = nlohmann::json::object();
  for (std::size_t d = 0; d < 6; ++d) {
    s[std::string(orchestrator::to_string(static_cast<orchestrator::Dimension>(d)))] = scores[d];
  }
  nlohmann::json j{{"scores", s}, {"justification", "scripted"}};
  if (!issues.empty()) {
    nlohmann::json list = nlohmann::json::array();
    for (const auto& [sev, dim] : issues) {
      list.push_back({{"severity", sev}, {"dimensions", {dim}}, {"description", "scripted issue"}});
    }
    j["issues"] = list;
  }
  return j;
}

inline nlohmann::json flat_report(double v) { return report({v, v, v, v, v, v}); }

/// A minimal valid extraction document for `paper_id`.
inline nlohmann::json document(const std::string& paper_id, const std::string& movement) {
  auto s = study(paper_id, {kinematic_group("G1", movement, 12.5, "deg", 4.2)});
  return nlohmann::json::parse(schema::serialize_extraction(s));
}

/// Scenario builder for ScriptedBackend.
class Scenario {
 public:
  Scenario& add(const std::string& backend, const std::string& paper, int round,
                const std::string& phase, nlohmann::json response, int transport_failures = 0) {
    entries_.push_back({{"backend", backend},
                        {"paper_id", paper},
                        {"round", round},
                        {"phase", phase},
                        {"response", std::move(response)},
                        {"transport_failures", transport_failures}});
    return *this;
  }
  /// Both backends extract and refine to fixed documents for every round.
  Scenario& documents(const std::string& paper) {
    add("A", paper, 0, "extract", document(paper, "torticollis"));
    add("B", paper, 0, "extract", document(paper, "head tremor"));
    add("A", paper, 0, "refine", document(paper, "torticollis"));
    add("B", paper, 0, "refine", document(paper, "head tremor"));
    return *this;
  }
  /// Per-round weighted scores of A's and B's documents (the other backend
  /// is the judge).
  Scenario& scores(const std::string& paper, int round, nlohmann::json report_on_a,
                   nlohmann::json report_on_b) {
    add("B", paper, round, "evaluate", std::move(report_on_a));
    add("A", paper, round, "evaluate", std::move(report_on_b));
    return *this;
  }
  std::string json() const { return nlohmann::json{{"entries", entries_}}.dump(); }

 private:
  nlohmann::json entries_ = nlohmann::json::array();
};

/// Flat-3.0 scores every round: stops as converged in round 2.
inline Scenario converged_scenario(const std::string& paper) {
  Scenario s;
  s.documents(paper).scores(paper, 0, flat_report(3.0), flat_report(3.0));
  return s;
}

/// 3.0 → 3.3 → 3.6: each round improves by 0.3, so only the round limit stops it.
inline Scenario max_rounds_scenario(const std::string& paper) {
  Scenario s;
  s.documents(paper);
  s.scores(paper, 1, flat_report(3.0), flat_report(3.0));
  s.scores(paper, 2, flat_report(3.3), flat_report(3.3));
  s.scores(paper, 3, flat_report(3.6), flat_report(3.6));
  return s;
}

/// A scores 4.5 with no high-severity issue in round 1.
inline Scenario excellent_scenario(const std::string& paper) {
  Scenario s;
  s.documents(paper).scores(paper, 1, flat_report(4.5), flat_report(3.0));
  return s;
}

}  // namespace fixtures
