#include "ahmkit/orchestrator.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <functional>
#include <future>
#include <json.hpp>
#include <utility>

#include "ahmkit/schema.hpp"
#include "ahmkit/text.hpp"

namespace ahmkit::orchestrator {

namespace {

using ojson = nlohmann::ordered_json;

constexpr std::array<std::string_view, kDimensionCount> kDimensionNames{
    "completeness",       "quantitative_accuracy", "symptom_extraction",
    "head_movement_classification", "schema_compliance", "edge_case_handling"};

constexpr std::array<double, kDimensionCount> kWeights{0.25, 0.20, 0.20, 0.25, 0.05, 0.05};

// Runs `a` and `b` (optionally concurrently) and rethrows A's failure first so
// that error reporting does not depend on scheduling.
template <typename T>
std::pair<T, T> run_pair(bool concurrent, const std::function<T()>& a, const std::function<T()>& b) {
  if (!concurrent) {
    T ra = a();
    T rb = b();
    return {std::move(ra), std::move(rb)};
  }
  auto fb = std::async(std::launch::async, b);
  std::exception_ptr ea;
  T ra{};
  try {
    ra = a();
  } catch (...) {
    ea = std::current_exception();
  }
  std::exception_ptr eb;
  T rb{};
  try {
    rb = fb.get();
  } catch (...) {
    eb = std::current_exception();
  }
  if (ea) std::rethrow_exception(ea);
  if (eb) std::rethrow_exception(eb);
  return {std::move(ra), std::move(rb)};
}

struct Call {
  std::string text;
  int attempts = 0;
};

class Runner {
 public:
  Runner(const std::string& paper_id, const PipelineOptions& options)
      : paper_id_(paper_id), options_(options) {}

  // Transport failures are retried; anything else propagates as a
  // PipelineError carrying the call coordinates.
  Call call(ExtractorBackend& backend, int round, const std::string& phase,
            const std::function<std::string()>& fn) const {
    Call c;
    for (;;) {
      ++c.attempts;
      try {
        c.text = fn();
        return c;
      } catch (const TransportError& e) {
        if (c.attempts > options_.transport_retries) {
          throw PipelineError(paper_id_, round, backend.id(), phase,
                              "transport failure after " + std::to_string(c.attempts) +
                                  " attempts: " + e.what());
        }
      } catch (const PipelineError&) {
        throw;
      } catch (const std::exception& e) {
        throw PipelineError(paper_id_, round, backend.id(), phase, e.what());
      }
    }
  }

  // The document must parse as an extraction record for this paper.
  void check_document(const ExtractorBackend& backend, int round, const std::string& phase,
                      const std::string& doc) const {
    schema::StudyExtraction rec;
    try {
      rec = schema::parse_extraction(doc);
    } catch (const Error& e) {
      throw PipelineError(paper_id_, round, backend.id(), phase,
                          std::string("malformed document: ") + e.what());
    }
    if (rec.paper_id != paper_id_) {
      throw PipelineError(paper_id_, round, backend.id(), phase,
                          "document paper_id '" + rec.paper_id + "' does not match");
    }
  }

  struct Evaluated {
    EvaluationReport report;
    int attempts = 0;
  };

  Evaluated evaluate(ExtractorBackend& judge, int round, const std::string& document) const {
    Evaluated ev;
    for (int requests = 0;; ++requests) {
      auto c = call(judge, round, "evaluate", [&] {
        return judge.evaluate(document, CallContext{paper_id_, round});
      });
      ev.attempts += c.attempts;
      try {
        ev.report = parse_report(c.text);
      } catch (const Error& e) {
        throw PipelineError(paper_id_, round, judge.id(), "evaluate",
                            std::string("malformed report: ") + e.what());
      }
      auto why = report_inconsistency(ev.report);
      if (!why) return ev;
      if (requests >= options_.inconsistent_report_retries) {
        throw PipelineError(paper_id_, round, judge.id(), "evaluate",
                            "inconsistent report: " + *why);
      }
    }
  }

 private:
  const std::string& paper_id_;
  const PipelineOptions& options_;
};

std::string audit_line(const std::string& paper_id, int round, std::string_view phase,
                       const std::string& backend, const std::string& subject, int attempts,
                       const EvaluationReport* report) {
  ojson j;
  j["paper_id"] = paper_id;
  j["round"] = round;
  j["phase"] = phase;
  j["backend"] = backend;
  j["subject"] = subject;
  j["attempts"] = attempts;
  if (report) {
    ojson scores = ojson::object();
    for (std::size_t d = 0; d < kDimensionCount; ++d) scores[kDimensionNames[d]] = report->scores[d];
    j["scores"] = scores;
    j["overall"] = report->overall_score;
    j["weighted"] = weighted_score(*report);
    j["H"] = report->high_severity_count();
  }
  return j.dump();
}

}  // namespace

std::string_view to_string(Dimension d) { return kDimensionNames[static_cast<std::size_t>(d)]; }

std::optional<Dimension> parse_dimension(std::string_view s) {
  const auto f = text::fold(s);
  for (std::size_t i = 0; i < kDimensionCount; ++i) {
    if (kDimensionNames[i] == f) return static_cast<Dimension>(i);
  }
  return std::nullopt;
}

std::size_t EvaluationReport::high_severity_count() const {
  return static_cast<std::size_t>(std::count_if(issues.begin(), issues.end(), [](const Issue& i) {
    return text::fold(i.severity) == "high";
  }));
}

EvaluationReport parse_report(std::string_view json_text) {
  ojson j;
  try {
    j = ojson::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCategory::parse, std::string("report: ") + e.what());
  }
  if (!j.is_object() || !j.contains("scores") || !j["scores"].is_object()) {
    throw Error(ErrorCategory::schema, "report: missing 'scores' object");
  }
  EvaluationReport r;
  std::array<bool, kDimensionCount> seen{};
  for (const auto& [key, val] : j["scores"].items()) {
    auto d = parse_dimension(key);
    if (!d) throw Error(ErrorCategory::schema, "report: unknown dimension '" + key + "'");
    if (!val.is_number()) throw Error(ErrorCategory::schema, "report: score '" + key + "' not a number");
    double v = val.get<double>();
    if (!(v >= 1.0 && v <= 5.0)) {
      throw Error(ErrorCategory::schema, "report: score '" + key + "' outside [1,5]");
    }
    r.scores[static_cast<std::size_t>(*d)] = v;
    seen[static_cast<std::size_t>(*d)] = true;
  }
  for (std::size_t i = 0; i < kDimensionCount; ++i) {
    if (!seen[i]) {
      throw Error(ErrorCategory::schema, "report: missing score '" + std::string(kDimensionNames[i]) + "'");
    }
  }
  double sum = 0;
  for (double s : r.scores) sum += s;
  r.overall_score = sum / static_cast<double>(kDimensionCount);
  if (j.contains("justification") && j["justification"].is_string()) {
    r.justification = j["justification"].get<std::string>();
  }
  if (j.contains("issues")) {
    if (!j["issues"].is_array()) throw Error(ErrorCategory::schema, "report: 'issues' must be an array");
    for (const auto& ji : j["issues"]) {
      Issue issue;
      if (!ji.is_object() || !ji.contains("severity") || !ji["severity"].is_string()) {
        throw Error(ErrorCategory::schema, "report: issue without severity");
      }
      issue.severity = ji["severity"].get<std::string>();
      if (ji.contains("dimensions")) {
        for (const auto& jd : ji["dimensions"]) {
          auto d = jd.is_string() ? parse_dimension(jd.get<std::string>()) : std::nullopt;
          if (!d) throw Error(ErrorCategory::schema, "report: issue names an unknown dimension");
          issue.dimensions.push_back(*d);
        }
      }
      if (ji.contains("description") && ji["description"].is_string()) {
        issue.description = ji["description"].get<std::string>();
      }
      r.issues.push_back(std::move(issue));
    }
  }
  return r;
}

std::string serialize_report(const EvaluationReport& r) {
  ojson j;
  ojson scores = ojson::object();
  for (std::size_t d = 0; d < kDimensionCount; ++d) scores[kDimensionNames[d]] = r.scores[d];
  j["scores"] = scores;
  j["overall_score"] = r.overall_score;
  j["justification"] = r.justification;
  ojson issues = ojson::array();
  for (const auto& i : r.issues) {
    ojson ji;
    ji["severity"] = i.severity;
    ojson dims = ojson::array();
    for (auto d : i.dimensions) dims.push_back(to_string(d));
    ji["dimensions"] = dims;
    ji["description"] = i.description;
    issues.push_back(ji);
  }
  j["issues"] = issues;
  return j.dump();
}

std::optional<std::string> report_inconsistency(const EvaluationReport& report) {
  for (const auto& issue : report.issues) {
    if (text::fold(issue.severity) != "high") continue;
    for (auto d : issue.dimensions) {
      if (report.score(d) > 2.0) {
        return "high-severity issue on " + std::string(to_string(d)) + " but score " +
               text::format_decimal(report.score(d)) + " > 2";
      }
    }
  }
  return std::nullopt;
}

double weighted_score(const EvaluationReport& report) {
  double s = 0;
  for (std::size_t d = 0; d < kDimensionCount; ++d) s += kWeights[d] * report.scores[d];
  return s;
}

std::string_view to_string(StopReason r) {
  switch (r) {
    case StopReason::none: return "none";
    case StopReason::excellent: return "excellent";
    case StopReason::both_acceptable: return "both_acceptable";
    case StopReason::converged: return "converged";
    case StopReason::max_rounds: return "max_rounds";
  }
  return "";
}

StopReason check_stop(int round, const RoundScores& cur, const std::optional<RoundScores>& prev,
                      int max_rounds) {
  if ((cur.s_a >= kExcellent && cur.h_a == 0) || (cur.s_b >= kExcellent && cur.h_b == 0)) {
    return StopReason::excellent;
  }
  if (cur.s_a >= kAcceptable && cur.s_b >= kAcceptable && cur.h_a == 0 && cur.h_b == 0) {
    return StopReason::both_acceptable;
  }
  if (round >= 2 && prev) {
    const double improvement = std::max(cur.s_a - prev->s_a, cur.s_b - prev->s_b);
    if (improvement < kMinImprovement) return StopReason::converged;
  }
  if (round >= max_rounds) return StopReason::max_rounds;
  return StopReason::none;
}

Side select_winner(double w_a, double w_b, double overall_a, double overall_b) {
  if (std::fabs(w_a - w_b) < kTieMargin) return overall_b > overall_a ? Side::b : Side::a;
  return w_b > w_a ? Side::b : Side::a;
}

PipelineError::PipelineError(std::string paper_id, int round, std::string backend_id,
                             std::string phase, const std::string& detail)
    : Error(ErrorCategory::pipeline, "paper '" + paper_id + "' round " + std::to_string(round) +
                                         " backend '" + backend_id + "' " + phase + ": " + detail),
      paper_id_(std::move(paper_id)),
      round_(round),
      backend_id_(std::move(backend_id)),
      phase_(std::move(phase)) {}

PipelineResult run_pipeline(std::string_view markdown, const std::string& paper_id,
                            ExtractorBackend& backend_a, ExtractorBackend& backend_b,
                            const PipelineOptions& options) {
  if (options.max_rounds < 1) throw Error(ErrorCategory::usage, "max_rounds must be >= 1");
  Runner run(paper_id, options);
  PipelineResult res;
  res.paper_id = paper_id;
  res.backend_a = backend_a.id();
  res.backend_b = backend_b.id();

  auto [ca, cb] = run_pair<Call>(
      options.concurrent_calls,
      [&] { return run.call(backend_a, 1, "extract", [&] {
              return backend_a.extract(markdown, CallContext{paper_id, 1}); }); },
      [&] { return run.call(backend_b, 1, "extract", [&] {
              return backend_b.extract(markdown, CallContext{paper_id, 1}); }); });
  run.check_document(backend_a, 1, "extract", ca.text);
  run.check_document(backend_b, 1, "extract", cb.text);
  res.audit.push_back(audit_line(paper_id, 1, "extract", res.backend_a, res.backend_a, ca.attempts, nullptr));
  res.audit.push_back(audit_line(paper_id, 1, "extract", res.backend_b, res.backend_b, cb.attempts, nullptr));
  std::string doc_a = std::move(ca.text);
  std::string doc_b = std::move(cb.text);

  std::optional<RoundScores> prev;
  EvaluationReport rep_a, rep_b;
  for (int round = 1;; ++round) {
    // Symmetric cross-judging: B scores A's document and A scores B's.
    auto [ea, eb] = run_pair<Runner::Evaluated>(
        options.concurrent_calls, [&] { return run.evaluate(backend_b, round, doc_a); },
        [&] { return run.evaluate(backend_a, round, doc_b); });
    rep_a = std::move(ea.report);
    rep_b = std::move(eb.report);
    res.audit.push_back(audit_line(paper_id, round, "evaluate", res.backend_b, res.backend_a,
                                   ea.attempts, &rep_a));
    res.audit.push_back(audit_line(paper_id, round, "evaluate", res.backend_a, res.backend_b,
                                   eb.attempts, &rep_b));

    RoundScores cur{weighted_score(rep_a), weighted_score(rep_b), rep_a.high_severity_count(),
                    rep_b.high_severity_count()};
    res.trace.push_back(cur);
    const auto reason = check_stop(round, cur, prev, options.max_rounds);
    if (reason != StopReason::none) {
      res.stop_reason = reason;
      res.rounds_used = round;
      break;
    }
    prev = cur;

    auto [ra, rb] = run_pair<Call>(
        options.concurrent_calls,
        [&] { return run.call(backend_a, round, "refine", [&] {
                return backend_a.refine(doc_a, rep_a, CallContext{paper_id, round}); }); },
        [&] { return run.call(backend_b, round, "refine", [&] {
                return backend_b.refine(doc_b, rep_b, CallContext{paper_id, round}); }); });
    run.check_document(backend_a, round, "refine", ra.text);
    run.check_document(backend_b, round, "refine", rb.text);
    res.audit.push_back(audit_line(paper_id, round, "refine", res.backend_a, res.backend_a, ra.attempts, nullptr));
    res.audit.push_back(audit_line(paper_id, round, "refine", res.backend_b, res.backend_b, rb.attempts, nullptr));
    doc_a = std::move(ra.text);
    doc_b = std::move(rb.text);
  }

  res.w_a = res.trace.back().s_a;
  res.w_b = res.trace.back().s_b;
  res.overall_a = rep_a.overall_score;
  res.overall_b = rep_b.overall_score;
  res.winner = select_winner(res.w_a, res.w_b, res.overall_a, res.overall_b);
  res.winner_backend_id = res.winner == Side::a ? res.backend_a : res.backend_b;

  const auto rec = schema::parse_extraction(res.winner == Side::a ? doc_a : doc_b);
  const auto report = schema::validate(rec);
  if (!report.ok()) {
    const auto& v = report.violations.front();
    throw PipelineError(paper_id, res.rounds_used, res.winner_backend_id, "select",
                        "winning document invalid: " + v.path + " " + v.code);
  }
  res.winning_document = schema::serialize_extraction(rec);
  return res;
}

bool trace_consistent(const std::vector<RoundScores>& trace, StopReason reason, int max_rounds) {
  if (trace.empty() || static_cast<int>(trace.size()) > max_rounds) return false;
  std::optional<RoundScores> prev;
  for (std::size_t i = 0; i < trace.size(); ++i) {
    const auto r = check_stop(static_cast<int>(i + 1), trace[i], prev, max_rounds);
    const bool last = i + 1 == trace.size();
    if (last) return r == reason;
    if (r != StopReason::none) return false;
    prev = trace[i];
  }
  return false;
}

std::string result_json(const PipelineResult& r) {
  ojson j;
  j["paper_id"] = r.paper_id;
  j["backend_a"] = r.backend_a;
  j["backend_b"] = r.backend_b;
  j["winner"] = r.winner_backend_id;
  j["rounds_used"] = r.rounds_used;
  j["stop_reason"] = to_string(r.stop_reason);
  ojson trace = ojson::array();
  for (const auto& t : r.trace) {
    trace.push_back({{"S_A", t.s_a}, {"S_B", t.s_b}, {"H_A", t.h_a}, {"H_B", t.h_b}});
  }
  j["trace"] = trace;
  j["W_A"] = r.w_a;
  j["W_B"] = r.w_b;
  j["overall_A"] = r.overall_a;
  j["overall_B"] = r.overall_b;
  return j.dump(2) + "\n";
}

}  // namespace ahmkit::orchestrator
