// Acceptance runner: prints one PASS/FAIL/SKIP line per criterion and exits
// nonzero if any criterion fails. Criterion 8 needs the published corpus:
// pass its manifest as the first argument or in AHMKIT_DATASET.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "ahmkit/agreement.hpp"
#include "ahmkit/backends.hpp"
#include "ahmkit/bridge.hpp"
#include "ahmkit/classify.hpp"
#include "ahmkit/cli.hpp"
#include "ahmkit/corpus.hpp"
#include "ahmkit/features.hpp"
#include "ahmkit/hnsi.hpp"
#include "ahmkit/kernels.hpp"
#include "ahmkit/orchestrator.hpp"
#include "ahmkit/schema.hpp"
#include "ahmkit/text.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace ahmkit;

namespace {

enum class Verdict { pass, fail, skip };

/// Collects failed checks for one criterion.
struct Checker {
  std::vector<std::string> failures;
  void operator()(bool ok, const std::string& what) {
    if (!ok) failures.push_back(what);
  }
};

struct Criterion {
  int number;
  std::string title;
  double budget_seconds;
  std::function<Verdict(Checker&)> body;
};

// ------------------------------------------------------------ 1: statistics

Verdict statistics(Checker& check) {
  std::vector<agreement::LabelPair> pairs;
  for (int i = 0; i < 20; ++i) {
    const bool a = i < 10;
    const bool b = (i < 7) || (i >= 10 && i < 13);
    pairs.emplace_back(a ? "yes" : "no", b ? "yes" : "no");
  }
  check(std::fabs(agreement::cohen_kappa(pairs).kappa - 0.4) < 1e-12, "kappa example != 0.4");

  std::vector<std::array<double, 2>> offset{{1, 2}, {2, 3}, {3, 4}, {4, 5}};
  check(std::fabs(agreement::icc_2_1(offset).icc - 10.0 / 13.0) < 1e-9, "ICC example != 10/13");

  std::mt19937_64 rng(17);
  const std::vector<std::string> alphabet{"a", "b", "c", "d"};
  for (int done = 0; done < 100;) {
    std::vector<agreement::LabelPair> p;
    const std::size_t n = 2 + rng() % 20, k = 2 + rng() % 3;
    for (std::size_t i = 0; i < n; ++i) p.emplace_back(alphabet[rng() % k], alphabet[rng() % k]);
    const double ref = oracle::kappa(p);
    if (!std::isfinite(ref)) continue;
    check(std::fabs(agreement::cohen_kappa(p).kappa - ref) < 1e-9, "kappa differs from oracle");
    ++done;
  }
  std::uniform_real_distribution<double> u(0.0, 50.0);
  for (int t = 0; t < 100; ++t) {
    std::vector<std::array<double, 2>> r(3 + rng() % 15);
    for (auto& row : r) row = {u(rng), u(rng)};
    check(std::fabs(agreement::icc_2_1(r).icc - oracle::icc_2_1(r)) < 1e-9, "ICC differs from oracle");
  }
  return Verdict::pass;
}

// ------------------------------------------------- 2: correlation table rows

Verdict correlation_rows(Checker& check) {
  for (const auto& row : oracle::kPrintedCorrelations) {
    const std::string tag = "r=" + text::format_fixed(row.r, 3);
    const auto ci = bridge::fisher_ci(row.r, oracle::kPrintedN);
    check(text::format_fixed(ci.low, 2) == text::format_fixed(row.ci_low, 2), tag + " CI low");
    check(text::format_fixed(ci.high, 2) == text::format_fixed(row.ci_high, 2), tag + " CI high");
    const double p = bridge::correlation_p_value(row.r, oracle::kPrintedN);
    if (row.p == 0.0) {
      check(p < 0.001, tag + " p not < .001");
    } else {
      check(text::format_fixed(p, 3) == text::format_fixed(row.p, 3), tag + " p");
    }
  }
  return Verdict::pass;
}

// ------------------------------------------------------------- 3: HNSI units

Verdict hnsi_units(Checker& check) {
  const auto reg = hnsi::ScaleRegistry::defaults();
  const auto& tw = *reg.find("TWSTRS");
  check(std::fabs(hnsi::normalize_score(20, tw) - 0.5714) < 1e-4, "TWSTRS 20");
  check(hnsi::normalize_score(-1, tw) == 0.0, "clip at 0");
  check(hnsi::normalize_score(50, tw) == 1.0, "clip at hn_max");
  check(hnsi::band_of(0.3299999) == hnsi::Band::mild, "below 0.33");
  check(hnsi::band_of(0.33) == hnsi::Band::moderate, "at 0.33");
  check(hnsi::band_of(0.6599999) == hnsi::Band::moderate, "below 0.66");
  check(hnsi::band_of(0.66) == hnsi::Band::severe, "at 0.66");

  std::mt19937_64 rng(99);
  const std::vector<std::pair<std::string, std::string>> scales{
      {"TWSTRS", "severity scale"}, {"Tsui", ""}, {"TRS", "head"}, {"GDRS", "neck"}};
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<corpus::ScaleRow> rows;
    std::map<std::string, std::vector<double>> normalized;
    for (const auto& [name, sub] : scales) {
      const double max = reg.find(name)->hn_max;
      for (std::size_t i = 0, n = rng() % 4; i < n; ++i) {
        const double raw = static_cast<double>(rng() % 1000) / 1000.0 * (max * 1.4) - max * 0.2;
        rows.push_back({"P", "G1", fixtures::scale(name, raw, sub)});
        normalized[name].push_back(std::clamp(raw, 0.0, max) / max);
      }
    }
    if (rows.empty()) continue;
    double expected = 0;
    for (const auto& [name, v] : normalized) {
      double s = 0;
      for (double x : v) s += x;
      expected += s / static_cast<double>(v.size());
    }
    expected /= static_cast<double>(normalized.size());
    const auto c = hnsi::compute_cohort(rows, reg);
    check(c.papers.size() == 1 && std::fabs(c.papers[0].hnsi - expected) < 1e-12,
          "equal-weight aggregation, trial " + std::to_string(trial));
  }
  return Verdict::pass;
}

// ------------------------------------------------------ 4: validation harness

Verdict validation_harness(Checker& check) {
  std::string file = "10\n";
  for (int i = 0; i < 27; ++i) file += "15\n";
  file += "30\n33.5\n";
  const auto scores = hnsi::parse_external_scores(file, true);
  const auto cmp = hnsi::compare_band_distributions(hnsi::band_distribution({0.1, 0.5, 0.7}), scores);
  const char* expected[] = {"3.3", "90.0", "6.7"};
  for (std::size_t i = 0; i < 3; ++i) {
    check(text::format_fixed(cmp.rows.at(i).external_percent, 1) == expected[i],
          std::string("band share ") + expected[i]);
  }
  check(text::format_fixed(cmp.severe_threshold_raw, 1) == "23.1", "severe threshold readout");
  return Verdict::pass;
}

// ---------------------------------------------------------- 5: orchestration

Verdict orchestration(Checker& check) {
  using namespace orchestrator;
  auto run = [](const fixtures::Scenario& s, PipelineOptions o = {}) {
    backends::ScriptedBackend a("A", s.json()), b("B", s.json());
    return run_pipeline("# paper", "P1", a, b, o);
  };
  struct Case {
    fixtures::Scenario scenario;
    int rounds;
    StopReason reason;
  };
  const Case cases[] = {{fixtures::excellent_scenario("P1"), 1, StopReason::excellent},
                        {fixtures::converged_scenario("P1"), 2, StopReason::converged},
                        {fixtures::max_rounds_scenario("P1"), 3, StopReason::max_rounds}};
  for (const auto& c : cases) {
    const auto r = run(c.scenario);
    const std::string name(to_string(c.reason));
    check(r.rounds_used == c.rounds, name + " rounds");
    check(r.stop_reason == c.reason, name + " stop reason");
    PipelineOptions seq;
    seq.concurrent_calls = false;
    check(result_json(run(c.scenario)) == result_json(r) && result_json(run(c.scenario, seq)) == result_json(r),
          name + " rerun differs");
  }
  check(select_winner(4.00, 4.05, 4.5, 4.0) == Side::a, "tie margin, A higher overall");
  check(select_winner(4.00, 4.05, 4.0, 4.5) == Side::b, "tie margin, B higher overall");
  check(select_winner(4.00, 4.20, 4.9, 3.0) == Side::b, "outside margin");

  // Inside the pipeline: B's weighted score is 0.02 higher, A's overall wins.
  fixtures::Scenario tie;
  tie.documents("P1").scores("P1", 0, fixtures::report({4.2, 4, 4, 4.2, 4, 4}),
                             fixtures::report({4.5, 3.9, 3.9, 4.3, 3.5, 3.5}));
  const auto t = run(tie);
  check(t.winner == Side::a, "pipeline tie-margin winner");
  return Verdict::pass;
}

// --------------------------------------------------------------- 6: learners

double rel_error(double a, double b) {
  const double scale = std::max(std::fabs(a), std::fabs(b));
  return scale < 1e-7 ? std::fabs(a - b) : std::fabs(a - b) / scale;
}

Verdict learners(Checker& check) {
  using namespace kernels;
  std::mt19937_64 rng(1);
  std::normal_distribution<double> g(0.0, 1.0);
  const std::size_t n = 40, d = 5, h = 6, k = 5;
  Matrix x(n, d), y(n, k);
  for (auto& v : x.data) v = g(rng);
  for (auto& v : y.data) v = (rng() & 1u) ? 1.0 : 0.0;
  std::vector<double> ylr(n), s(n, 1.0), w(d);
  for (std::size_t i = 0; i < n; ++i) ylr[i] = y(i, 0);
  for (auto& v : w) v = 0.5 * g(rng);
  const LrProblem lp{x, ylr, s, 0.8};
  std::vector<double> gw(d), scratch(d);
  double gb = 0, sb = 0;
  lr_loss_grad_serial(lp, w, 0.1, gw, gb);
  constexpr double step = 1e-5;
  double worst = 0;
  for (std::size_t j = 0; j < d; ++j) {
    auto wp = w, wm = w;
    wp[j] += step;
    wm[j] -= step;
    const double fd = (lr_loss_grad_serial(lp, wp, 0.1, scratch, sb) - lr_loss_grad_serial(lp, wm, 0.1, scratch, sb)) / (2 * step);
    worst = std::max(worst, rel_error(gw[j], fd));
  }
  const MlpShape shape{d, h, k};
  std::vector<double> params(shape.parameter_count()), grad(params.size()), tmp(params.size());
  for (auto& v : params) v = 0.5 * g(rng);
  mlp_loss_grad_serial(shape, x, y, params, grad);
  for (std::size_t j = 0; j < params.size(); ++j) {
    auto pp = params, pm = params;
    pp[j] += step;
    pm[j] -= step;
    const double fd = (mlp_loss_grad_serial(shape, x, y, pp, tmp) - mlp_loss_grad_serial(shape, x, y, pm, tmp)) / (2 * step);
    worst = std::max(worst, rel_error(grad[j], fd));
  }
  check(worst < 1e-4, "finite-difference relative error " + text::format_decimal(worst));

  const auto sep = fixtures::separable_dataset();
  const auto lr_sep = classify::train_lr(sep.x, sep.labels, {});
  const auto sep_probs = classify::predict_proba(lr_sep, sep.x);
  check(classify::evaluate(classify::predict(sep_probs), sep_probs, sep.labels).f1 == 1.0,
        "LR F1 on separable set");

  const auto xr = fixtures::xor_dataset();
  const auto lr_xor = classify::train_lr(xr.x, xr.labels, {});
  const auto lr_pred = classify::predict(classify::predict_proba(lr_xor, xr.x));
  std::size_t lr_ok = 0;
  for (std::size_t i = 0; i < xr.labels.size(); ++i) lr_ok += lr_pred[i][4] == xr.labels[i][4];
  check(lr_ok * 2 == xr.labels.size(), "LR not at chance on the XOR label");
  const auto mlp = classify::train_mlp(xr.x, xr.labels, {});
  const auto mlp_probs = classify::predict_proba(mlp, xr.x);
  check(classify::evaluate(classify::predict(mlp_probs), mlp_probs, xr.labels).accuracy > 0.9,
        "MLP accuracy on XOR");
  check(classify::train_mlp(xr.x, xr.labels, {}).weights == mlp.weights, "MLP retraining differs");
  const auto lr_again = classify::train_lr(xr.x, xr.labels, {});
  for (std::size_t l = 0; l < features::kLabelCount; ++l) {
    check(lr_again.heads[l].w == lr_xor.heads[l].w, "LR retraining differs");
  }
  return Verdict::pass;
}

// ---------------------------------------------------------- 7: preprocessing

corpus::KinematicRow krow(const std::string& paper, const std::string& movement, double amp,
                          const std::string& unit, double hz, double latency = NAN,
                          const std::string& lat_unit = "ms") {
  auto g = fixtures::kinematic_group("G1", movement, amp, unit, hz, latency, lat_unit);
  return {paper, g.group_id, *g.measurement, g.head_movement};
}

Verdict preprocessing(Checker& check) {
  using namespace features;
  const auto a = normalize_amplitude(2.5, "cm");
  check(a.value == 25.0 && a.unit_class == UnitClass::millimetres, "cm to mm");
  check(normalize_amplitude(a.value, "mm").value == a.value, "amplitude idempotent");
  check(clean_latency(0.12, "s") == 120.0, "s to ms");
  check(clean_latency(*clean_latency(0.12, "s"), "ms") == 120.0, "latency idempotent");
  check(!clean_frequency(0.5) && !clean_frequency(15.0) && clean_frequency(1.0) && clean_frequency(11.0),
        "frequency window");
  check(standardize_term("spasmodic torticollis") == Label::torticollis, "spasmodic torticollis");
  check(standardize_term("oscillation") == Label::head_tremor, "oscillation");

  const std::vector<corpus::KinematicRow> rows{
      krow("P1", "torticollis", 2.0, "cm", 4.0, 0.1, "s"), krow("P2", "torticollis", 3.0, "mm", 15.0),
      krow("P3", "head tremor", 1.0, "mm", 6.0, 80), krow("P4", "oscillation", 1.5, "mm", 0.2)};
  const auto m = build_feature_matrix(rows);
  std::size_t freq = m.width(), flag = m.width();
  for (std::size_t c = 0; c < m.width(); ++c) {
    if (m.columns[c] == "frequency_hz") freq = c;
    if (m.columns[c] == "frequency_hz_imputed") flag = c;
  }
  check(freq < m.width() && flag < m.width(), "frequency columns present");
  if (freq < m.width() && flag < m.width()) {
    check(m.rows[1][flag] == 1.0 && m.rows[3][flag] == 1.0, "out-of-window frequency imputed");
    check(m.rows[0][flag] == 0.0 && m.rows[0][freq] == 4.0, "in-window frequency kept");
  }
  const auto again = build_feature_matrix(rows);
  check(again.rows == m.rows && again.columns == m.columns, "feature matrix not deterministic");
  const auto reparsed = feature_matrix_from_table(feature_table(m));
  check(csv::format(feature_table(reparsed)) == csv::format(feature_table(m)), "feature table round-trip");
  return Verdict::pass;
}

// ----------------------------------------------------- 8: published corpus

Verdict published_corpus(Checker& check, const std::string& dataset) {
  if (dataset.empty()) return Verdict::skip;
  fixtures::TempDir dir("acceptance");
  std::string all;
  for (const std::vector<std::string> args :
       {std::vector<std::string>{"hnsi"}, {"classify", "--model", "lr"}, {"bridge"}}) {
    std::vector<std::string> argv{"ahmkit", "--dataset", dataset, "--out", dir.str(), "--with-published-data"};
    argv.insert(argv.end(), args.begin(), args.end());
    std::vector<const char*> raw;
    for (const auto& a : argv) raw.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = cli::run(static_cast<int>(raw.size()), raw.data(), out, err);
    check(code == 0, args[0] + " exited " + std::to_string(code) + ": " + err.str());
    std::cout << out.str();
    all += out.str();
  }
  std::size_t readouts = 0;
  std::istringstream lines(all);
  for (std::string line; std::getline(lines, line);) {
    if (line.rfind("reference ", 0) != 0) continue;
    ++readouts;
    check(line.size() >= 5 && line.compare(line.size() - 5, 5, "MATCH") == 0, line);
  }
  check(readouts == 11, "expected 11 published readouts, saw " + std::to_string(readouts));
  return Verdict::pass;
}

// -------------------------------------------------------- 9: schema and NR

Verdict schema_round_trip(Checker& check) {
  fixtures::RecordGenerator gen(2024);
  for (int i = 0; i < 50; ++i) {
    const auto rec = gen.next("paper-" + std::to_string(i));
    const auto text = schema::serialize_extraction(rec);
    const auto back = schema::parse_extraction(text);
    check(back == rec && schema::serialize_extraction(back) == text,
          "round-trip of record " + std::to_string(i));
  }
  const auto s = schema::parse_extraction(R"({"paper_id": "P1", "study_type": "case series",
    "groups": [{"group_id": "G1", "condition_name": "Cervical dystonia",
      "condition_category": "disorder", "n_patients": "NR", "causes_ahm": "NR",
      "measurement": {"measurement_performed": "NR", "amplitude_value": "NR", "amplitude_unit": "NR"},
      "scales": [{"scale_name": "TWSTRS", "baseline_value": "NR", "subscale": "NR"}]}]})");
  const auto& g = s.groups.at(0);
  check(g.n_patients.is_nr(), "n_patients NR");
  check(g.causes_ahm.is_nr(), "causes_ahm NR");
  check(g.measurement->measurement_performed.is_nr(), "measurement_performed NR");
  check(g.measurement->amplitude_value.is_nr(), "amplitude NR");
  check(g.measurement->amplitude_unit.is_nr(), "amplitude unit NR");
  check(g.scales.at(0).baseline_value.is_nr(), "baseline NR");
  check(!(Reported<double>(0.0) == Reported<double>(NR)), "0 equals NR");
  check(!(Reported<bool>(false) == Reported<bool>(NR)), "false equals NR");
  check(!(Reported<std::string>("") == Reported<std::string>(NR)), "empty equals NR");
  const auto j = nlohmann::json::parse(schema::serialize_extraction(s));
  check(j["groups"][0]["n_patients"] == "NR", "NR not serialized as the sentinel");
  return Verdict::pass;
}

}  // namespace

int main(int argc, char** argv) {
  std::string dataset = argc > 1 ? argv[1] : "";
  if (dataset.empty()) {
    if (const char* env = std::getenv("AHMKIT_DATASET")) dataset = env;
  }
  const std::vector<Criterion> criteria{
      {1, "agreement statistics match hand-derived values and oracles", 1, statistics},
      {2, "correlation rows reproduce at printed precision", 1, correlation_rows},
      {3, "severity index normalization, clipping, bands and aggregation", 1, hnsi_units},
      {4, "external-cohort band shares and threshold readout", 1, validation_harness},
      {5, "dual-backend pipeline scenarios, winner rule and reruns", 5, orchestration},
      {6, "learner gradients, separability, XOR and reproducibility", 60, learners},
      {7, "preprocessing conversions, synonyms and determinism", 1, preprocessing},
      {8, "published corpus statistics", 300,
       [&](Checker& c) { return published_corpus(c, dataset); }},
      {9, "schema round-trip and NR semantics", 1, schema_round_trip},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    Checker check;
    const auto start = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = c.body(check);
    } catch (const std::exception& e) {
      check(false, std::string("exception: ") + e.what());
      v = Verdict::fail;
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (v != Verdict::skip && seconds > c.budget_seconds) {
      check(false, "took " + text::format_fixed(seconds, 2) + " s, budget " + text::format_decimal(c.budget_seconds) + " s");
    }
    if (!check.failures.empty()) v = Verdict::fail;
    const char* word = v == Verdict::pass ? "PASS" : v == Verdict::skip ? "SKIP" : "FAIL";
    std::cout << word << " criterion " << c.number << ": " << c.title;
    if (v == Verdict::skip) std::cout << " (no dataset; set AHMKIT_DATASET)";
    if (v != Verdict::skip) std::cout << " [" << text::format_fixed(seconds, 2) << " s]";
    std::cout << "\n";
    for (const auto& f : check.failures) std::cout << "    " << f << "\n";
    failed += v == Verdict::fail;
  }
  return failed == 0 ? 0 : 1;
}
