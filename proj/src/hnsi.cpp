#include "ahmkit/hnsi.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ahmkit/error.hpp"
#include "ahmkit/text.hpp"

namespace ahmkit::hnsi {

ScaleRegistry ScaleRegistry::defaults() {
  ScaleRegistry r;
  r.add({"TWSTRS", 35.0,
         {"severity scale", "tss", "severity of torticollis", "overall severity",
          "torticollis score", "laterocollis score", "retrocollis score",
          "shoulder displacement"},
         "CD specific"});
  r.add({"Tsui", 20.0, {}, "CD specific"});
  r.add({"TRS", 8.0, {"head", "face", "neck", "cranial"}, "Head/Face subscale"});
  r.add({"GDRS", 10.0, {"head", "face", "neck", "cranial"}, "Generalized dystonia"});
  return r;
}

ScaleRegistry ScaleRegistry::from_table(const csv::Table& table) {
  const auto cs = table.column("scale");
  const auto cm = table.column("hn_max");
  const auto ck = table.column("keywords");
  const bool has_scope = table.has_column("scope");
  ScaleRegistry r;
  for (const auto& row : table.rows) {
    auto max_text = text::trim(row[cm]);
    if (!text::is_plain_decimal(max_text)) {
      throw Error(ErrorCategory::parse, "scale registry: bad hn_max '" + row[cm] + "'");
    }
    ScaleSpec spec;
    spec.scale_name = text::trim(row[cs]);
    spec.hn_max = std::stod(max_text);
    for (auto& k : text::split_any(row[ck], "|")) spec.subscale_keywords.push_back(text::fold(k));
    if (has_scope) spec.scope = row[table.column("scope")];
    r.add(std::move(spec));
  }
  return r;
}

void ScaleRegistry::add(ScaleSpec spec) {
  if (!(spec.hn_max > 0) || !std::isfinite(spec.hn_max)) {
    throw Error(ErrorCategory::schema, "scale '" + spec.scale_name + "': hn_max must be > 0");
  }
  if (find(spec.scale_name)) {
    throw Error(ErrorCategory::schema, "scale '" + spec.scale_name + "' registered twice");
  }
  for (auto& k : spec.subscale_keywords) k = text::fold(k);
  specs_.push_back(std::move(spec));
}

const ScaleSpec* ScaleRegistry::find(std::string_view scale_name) const {
  const auto f = text::fold(scale_name);
  for (const auto& s : specs_) {
    if (text::fold(s.scale_name) == f) return &s;
  }
  return nullptr;
}

std::string_view to_string(Band b) {
  switch (b) {
    case Band::mild: return "mild";
    case Band::moderate: return "moderate";
    case Band::severe: return "severe";
  }
  return "";
}

Band band_of(double hnsi) {
  if (hnsi >= kSevereFrom) return Band::severe;
  if (hnsi >= kModerateFrom) return Band::moderate;
  return Band::mild;
}

bool eligible(const schema::ClinicalScaleRecord& record, const ScaleSpec& spec) {
  if (record.baseline_value.is_nr()) return false;
  if (spec.subscale_keywords.empty()) return true;
  if (record.subscale.is_nr()) return false;
  const auto sub = text::fold(record.subscale.value());
  return std::any_of(spec.subscale_keywords.begin(), spec.subscale_keywords.end(),
                     [&](const std::string& k) { return text::contains(sub, k); });
}

double normalize_score(double raw, const ScaleSpec& spec) {
  if (!std::isfinite(raw)) throw Error(ErrorCategory::schema, "non-finite scale score");
  return std::clamp(raw, 0.0, spec.hn_max) / spec.hn_max;
}

PaperHnsi paper_hnsi(const std::vector<ScaleObservation>& observations) {
  if (observations.empty()) {
    throw Error(ErrorCategory::insufficient_data, "HNSI needs at least one observation");
  }
  PaperHnsi p;
  p.paper_id = observations.front().paper_id;
  std::map<std::string, double> sums;
  for (const auto& o : observations) {
    if (o.paper_id != p.paper_id) {
      throw Error(ErrorCategory::schema, "paper_hnsi: observations span several papers");
    }
    sums[o.scale_name] += o.normalized;
    ++p.scale_counts[o.scale_name];
  }
  double total = 0;
  for (const auto& [name, sum] : sums) {
    double mean = sum / static_cast<double>(p.scale_counts[name]);
    p.scale_means[name] = mean;
    total += mean;
  }
  p.scales_present = p.scale_means.size();
  p.hnsi = total / static_cast<double>(p.scales_present);
  p.band = band_of(p.hnsi);
  return p;
}

CohortResult compute_cohort(const std::vector<corpus::ScaleRow>& rows,
                            const ScaleRegistry& registry) {
  CohortResult out;
  for (const auto& row : rows) {
    if (row.scale.scale_name.is_nr()) continue;
    const ScaleSpec* spec = registry.find(row.scale.scale_name.value());
    if (!spec) {
      ++out.unregistered_rows;
      continue;
    }
    if (!eligible(row.scale, *spec)) {
      ++out.ineligible_rows;
      continue;
    }
    double raw = row.scale.baseline_value.value();
    out.observations.push_back({row.paper_id, spec->scale_name, raw, normalize_score(raw, *spec)});
  }
  std::map<std::string, std::vector<ScaleObservation>> by_paper;
  for (const auto& o : out.observations) by_paper[o.paper_id].push_back(o);

  std::vector<std::vector<ScaleObservation>> groups;
  for (auto& [id, obs] : by_paper) groups.push_back(std::move(obs));
  out.papers.resize(groups.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(groups.size()); ++i) {
    out.papers[static_cast<std::size_t>(i)] = paper_hnsi(groups[static_cast<std::size_t>(i)]);
  }
  return out;
}

BandDistribution band_distribution(const std::vector<double>& scores) {
  if (scores.empty()) {
    throw Error(ErrorCategory::insufficient_data, "band distribution needs at least one score");
  }
  BandDistribution d;
  d.total = scores.size();
  std::array<double, 3> sums{};
  for (double s : scores) {
    auto i = static_cast<std::size_t>(band_of(s));
    ++d.bands[i].count;
    sums[i] += s;
  }
  for (std::size_t i = 0; i < 3; ++i) {
    auto& b = d.bands[i];
    b.percent = 100.0 * static_cast<double>(b.count) / static_cast<double>(d.total);
    if (b.count) b.mean_hnsi = sums[i] / static_cast<double>(b.count);
  }
  return d;
}

BandDistribution cohort_band_distribution(const std::vector<PaperHnsi>& papers) {
  if (papers.empty()) {
    throw Error(ErrorCategory::insufficient_data, "band distribution needs at least one paper");
  }
  std::vector<double> scores;
  for (const auto& p : papers) scores.push_back(p.hnsi);
  return band_distribution(scores);
}

BandComparison compare_band_distributions(const BandDistribution& literature,
                                          const std::vector<double>& external,
                                          double reference_max) {
  if (external.empty()) throw Error(ErrorCategory::insufficient_data, "empty external cohort");
  for (double s : external) {
    if (!(s >= 0.0 && s <= 1.0)) {
      throw Error(ErrorCategory::schema, "external score outside [0,1]: " + text::format_decimal(s));
    }
  }
  const auto ext = band_distribution(external);
  BandComparison c;
  c.external_n = external.size();
  const std::array<std::string, 3> thresholds{"HNSI < 0.33", "0.33 <= HNSI < 0.66",
                                              "HNSI >= 0.66"};
  for (auto b : {Band::mild, Band::moderate, Band::severe}) {
    c.rows.push_back({b, thresholds[static_cast<std::size_t>(b)], ext[b].percent,
                      literature[b].percent});
  }
  c.severe_gap = std::fabs(ext[Band::severe].percent - literature[Band::severe].percent);
  c.severe_threshold_raw = kSevereFrom * reference_max;
  return c;
}

std::vector<double> parse_external_scores(std::string_view body, bool raw_twstrs) {
  std::vector<double> out;
  for (const auto& raw : text::split_any(body, "\n")) {
    auto line = text::trim(raw.substr(0, raw.find('#')));
    if (line.empty()) continue;
    if (!text::is_plain_decimal(line)) {
      throw Error(ErrorCategory::parse, "external cohort: not a number '" + line + "'");
    }
    double v = std::stod(line);
    if (raw_twstrs) v = std::clamp(v, 0.0, 35.0) / 35.0;
    out.push_back(v);
  }
  return out;
}

csv::Table papers_table(const std::vector<PaperHnsi>& papers, const ScaleRegistry& registry) {
  csv::Table t;
  t.header = {"paper_id"};
  for (const auto& s : registry.specs()) t.header.push_back(text::fold(s.scale_name) + "_mean");
  t.header.insert(t.header.end(), {"k_p", "hnsi", "band"});
  for (const auto& p : papers) {
    csv::Row row{p.paper_id};
    for (const auto& s : registry.specs()) {
      auto it = p.scale_means.find(s.scale_name);
      row.push_back(it == p.scale_means.end() ? std::string(kNotReported)
                                              : text::format_fixed(it->second, 6));
    }
    row.push_back(std::to_string(p.scales_present));
    row.push_back(text::format_fixed(p.hnsi, 6));
    row.push_back(std::string(to_string(p.band)));
    t.rows.push_back(std::move(row));
  }
  return t;
}

std::vector<PaperHnsi> papers_from_table(const csv::Table& t) {
  const auto cp = t.column("paper_id");
  const auto ch = t.column("hnsi");
  const auto ck = t.column("k_p");
  std::vector<PaperHnsi> out;
  for (const auto& row : t.rows) {
    PaperHnsi p;
    p.paper_id = row[cp];
    auto h = text::trim(row[ch]);
    if (!text::is_plain_decimal(h)) throw Error(ErrorCategory::parse, "hnsi csv: bad hnsi '" + h + "'");
    p.hnsi = std::stod(h);
    p.band = band_of(p.hnsi);
    p.scales_present = static_cast<std::size_t>(std::stoul(row[ck]));
    for (std::size_t c = 0; c < t.header.size(); ++c) {
      const auto& name = t.header[c];
      if (name.size() > 5 && name.ends_with("_mean") && row[c] != kNotReported) {
        p.scale_means[name.substr(0, name.size() - 5)] = std::stod(row[c]);
      }
    }
    out.push_back(std::move(p));
  }
  return out;
}

csv::Table distribution_table(const BandDistribution& d) {
  csv::Table t;
  t.header = {"band", "range", "papers", "percent", "mean_hnsi"};
  const std::array<std::string, 3> ranges{"< 0.33", "0.33 - 0.66", ">= 0.66"};
  for (auto b : {Band::mild, Band::moderate, Band::severe}) {
    const auto& s = d[b];
    t.rows.push_back({std::string(to_string(b)), ranges[static_cast<std::size_t>(b)],
                      std::to_string(s.count), text::format_fixed(s.percent, 1),
                      s.mean_hnsi ? text::format_fixed(*s.mean_hnsi, 3) : std::string(kNotReported)});
  }
  return t;
}

csv::Table comparison_table(const BandComparison& c) {
  csv::Table t;
  t.header = {"band", "threshold", "external_percent", "literature_percent"};
  for (const auto& r : c.rows) {
    t.rows.push_back({std::string(to_string(r.band)), r.threshold,
                      text::format_fixed(r.external_percent, 1),
                      text::format_fixed(r.literature_percent, 1)});
  }
  t.rows.push_back({"severe_gap", "", text::format_fixed(c.severe_gap, 1), ""});
  t.rows.push_back({"severe_threshold_raw", "TWSTRS", text::format_fixed(c.severe_threshold_raw, 1), ""});
  return t;
}

}  // namespace ahmkit::hnsi
