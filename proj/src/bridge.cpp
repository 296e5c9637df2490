#include "ahmkit/bridge.hpp"

#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>
#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "ahmkit/error.hpp"
#include "ahmkit/text.hpp"

namespace ahmkit::bridge {

namespace {

void check_r_n(double r, std::size_t n) {
  if (n < 4) throw Error(ErrorCategory::insufficient_data, "correlation inference needs n >= 4");
  if (!std::isfinite(r) || std::fabs(r) >= 1.0) {
    throw Error(ErrorCategory::degenerate, "|r| = 1: interval and p-value are undefined");
  }
}

std::string p_text(double p) { return p < 0.001 ? "<0.001" : text::format_fixed(p, 3); }

}  // namespace

std::vector<BridgePair> link_papers(const std::vector<classify::ProbabilityRow>& probabilities,
                                    const std::vector<hnsi::PaperHnsi>& papers) {
  std::map<std::string, double> index;
  for (const auto& p : papers) index[p.paper_id] = p.hnsi;
  std::map<std::string, BridgePair> joined;
  for (const auto& row : probabilities) {
    auto it = index.find(row.paper_id);
    if (it == index.end()) continue;
    auto& pair = joined[row.paper_id];
    pair.paper_id = row.paper_id;
    pair.hnsi = it->second;
    for (std::size_t l = 0; l < classify::kLabelCount; ++l) pair.mean_probability[l] += row.p[l];
    ++pair.records;
  }
  if (joined.empty()) {
    throw Error(ErrorCategory::insufficient_data, "no paper has both probabilities and an HNSI score");
  }
  std::vector<BridgePair> out;
  for (auto& [id, pair] : joined) {
    for (auto& m : pair.mean_probability) m /= static_cast<double>(pair.records);
    pair.composite = std::accumulate(pair.mean_probability.begin(), pair.mean_probability.end(), 0.0) /
                     static_cast<double>(classify::kLabelCount);
    out.push_back(pair);
  }
  return out;
}

double pearson_r(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw Error(ErrorCategory::insufficient_data, "series differ in length");
  if (x.size() < 3) throw Error(ErrorCategory::insufficient_data, "correlation needs n >= 3");
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx, dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx <= 0 || syy <= 0) throw Error(ErrorCategory::degenerate, "zero variance: correlation undefined");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

Interval fisher_ci(double r, std::size_t n, double level) {
  check_r_n(r, n);
  if (!(level > 0 && level < 1)) throw Error(ErrorCategory::usage, "confidence level must lie in (0,1)");
  const boost::math::normal_distribution<double> normal;
  const double z_crit = boost::math::quantile(normal, 0.5 + level / 2.0);
  const double z = std::atanh(r);
  const double half = z_crit / std::sqrt(static_cast<double>(n) - 3.0);
  return {std::tanh(z - half), std::tanh(z + half)};
}

double correlation_p_value(double r, std::size_t n) {
  check_r_n(r, n);
  const double df = static_cast<double>(n) - 2.0;
  const double t = r * std::sqrt(df) / std::sqrt(1.0 - r * r);
  const boost::math::students_t_distribution<double> dist(df);
  return std::min(1.0, 2.0 * boost::math::cdf(boost::math::complement(dist, std::fabs(t))));
}

std::string significance_stars(double p) {
  if (p < 0.001) return "***";
  if (p < 0.01) return "**";
  if (p < 0.05) return "*";
  return "";
}

std::vector<CorrelationResult> bridge_report(const std::vector<BridgePair>& pairs) {
  if (pairs.size() < 4) {
    throw Error(ErrorCategory::insufficient_data,
                "bridge analysis needs at least 4 linked papers, got " + std::to_string(pairs.size()));
  }
  std::vector<double> h;
  for (const auto& p : pairs) h.push_back(p.hnsi);

  std::vector<std::pair<std::string, std::vector<double>>> series;
  series.emplace_back("mean_probability", std::vector<double>{});
  for (const auto& p : pairs) series.back().second.push_back(p.composite);
  for (std::size_t l = 0; l < classify::kLabelCount; ++l) {
    std::vector<double> v;
    for (const auto& p : pairs) v.push_back(p.mean_probability[l]);
    series.emplace_back(std::string(features::to_string(features::kLabels[l])) + "_probability", std::move(v));
  }

  std::vector<CorrelationResult> out(series.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(series.size()); ++i) {
    auto& res = out[static_cast<std::size_t>(i)];
    const auto& [name, v] = series[static_cast<std::size_t>(i)];
    res.feature = name;
    res.n = pairs.size();
    try {
      res.r = pearson_r(v, h);
      if (std::fabs(res.r) >= 1.0) {
        res.p_value = 0.0;
        res.ci = {res.r, res.r};
      } else {
        res.p_value = correlation_p_value(res.r, res.n);
        res.ci = fisher_ci(res.r, res.n);
      }
      res.stars = significance_stars(res.p_value);
    } catch (const Error& e) {
      res.error = e.what();
    }
  }
  return out;
}

csv::Table report_table(const std::string& model, const std::vector<CorrelationResult>& results) {
  csv::Table t;
  t.header = {"model", "feature", "r", "p", "significance", "ci_low", "ci_high", "n"};
  for (const auto& r : results) {
    if (!r.ok()) {
      t.rows.push_back({model, r.feature, std::string(kNotReported), std::string(kNotReported),
                        "undefined: " + r.error, std::string(kNotReported), std::string(kNotReported),
                        std::to_string(r.n)});
      continue;
    }
    t.rows.push_back({model, r.feature, text::format_fixed(r.r, 3), p_text(r.p_value), r.stars,
                      text::format_fixed(r.ci.low, 2), text::format_fixed(r.ci.high, 2),
                      std::to_string(r.n)});
  }
  return t;
}

csv::Table pairs_table(const std::vector<BridgePair>& pairs) {
  csv::Table t;
  t.header = {"paper_id", "hnsi", "records"};
  for (auto l : features::kLabels) t.header.push_back("mean_p_" + std::string(features::to_string(l)));
  t.header.push_back("composite");
  for (const auto& p : pairs) {
    csv::Row row{p.paper_id, text::format_fixed(p.hnsi, 6), std::to_string(p.records)};
    for (double m : p.mean_probability) row.push_back(text::format_fixed(m, 6));
    row.push_back(text::format_fixed(p.composite, 6));
    t.rows.push_back(std::move(row));
  }
  return t;
}

}  // namespace ahmkit::bridge
