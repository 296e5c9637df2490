#include <CLI11.hpp>
#include <algorithm>
#include <cmath>
#include <filesystem>
#include <ostream>
#include <json.hpp>
#include <map>
#include <sstream>

#include "ahmkit/agreement.hpp"
#include "ahmkit/backends.hpp"
#include "ahmkit/bridge.hpp"
#include "ahmkit/classify.hpp"
#include "ahmkit/cli.hpp"
#include "ahmkit/corpus.hpp"
#include "ahmkit/csv.hpp"
#include "ahmkit/features.hpp"
#include "ahmkit/hnsi.hpp"
#include "ahmkit/orchestrator.hpp"
#include "ahmkit/text.hpp"

namespace ahmkit::cli {

namespace {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

// Collects the provenance of one command run and writes manifest.json.
class RunManifest {
 public:
  RunManifest(std::string command, const RunConfig& c, std::string dir)
      : dir_(std::move(dir)) {
    j_["command"] = std::move(command);
    j_["seed"] = c.seed;
    j_["with_published_data"] = c.with_published_data;
    j_["parameters"] = ojson::object();
    j_["inputs"] = ojson::array();
    j_["outputs"] = ojson::array();
  }

  template <typename T>
  void param(const std::string& key, const T& value) {
    j_["parameters"][key] = value;
  }

  void input(const std::string& path) {
    if (fs::is_directory(path)) {
      std::vector<std::string> files;
      for (const auto& e : fs::recursive_directory_iterator(path)) {
        if (e.is_regular_file()) files.push_back(e.path().string());
      }
      std::sort(files.begin(), files.end());
      for (const auto& f : files) add_input(f);
    } else {
      add_input(path);
    }
  }

  void output(const std::string& name, std::string_view contents) {
    text::write_file((fs::path(dir_) / name).string(), contents);
    j_["outputs"].push_back({{"path", name}, {"fnv1a", text::fnv1a_hex(contents)}});
  }

  void output(const std::string& name, const csv::Table& table) { output(name, csv::format(table)); }

  void finish() { text::write_file((fs::path(dir_) / "manifest.json").string(), j_.dump(2) + "\n"); }

 private:
  void add_input(const std::string& path) {
    j_["inputs"].push_back({{"path", path}, {"fnv1a", text::fnv1a_hex(text::read_file(path))}});
  }

  std::string dir_;
  ojson j_;
};

std::string command_dir(const RunConfig& c, const std::string& command) {
  return (fs::path(c.out) / command).string();
}

corpus::Corpus load_dataset(const RunConfig& c, RunManifest& m, const std::string& command) {
  if (c.dataset.empty()) {
    throw Error(ErrorCategory::usage, command + " needs --dataset <corpus manifest>");
  }
  const auto manifest = corpus::read_manifest(c.dataset);
  m.input(c.dataset);
  for (const auto& [role, paths] : manifest.paths) {
    for (const auto& p : paths) m.input(p);
  }
  return corpus::load_corpus(manifest);
}

// Published-corpus reference readouts, printed only with --with-published-data.
void reference(std::ostream& out, const RunConfig& c, const std::string& what, double got,
               double expected, double tolerance) {
  if (!c.with_published_data) return;
  const bool ok = std::fabs(got - expected) <= tolerance;
  out << "reference " << what << ": " << text::format_decimal(got) << " (published "
      << text::format_decimal(expected) << ", tolerance " << text::format_decimal(tolerance) << ") "
      << (ok ? "MATCH" : "DIFFER") << "\n";
}

std::string prerequisite_path(const RunConfig& c, const std::string& command, const std::string& file) {
  return (fs::path(command_dir(c, command)) / file).string();
}

void require_outputs(const std::vector<std::pair<std::string, bool>>& missing_by_command,
                     const std::string& consumer) {
  std::vector<std::string> missing;
  for (const auto& [cmd, present] : missing_by_command) {
    if (!present) missing.push_back(cmd);
  }
  if (missing.empty()) return;
  std::string names;
  for (const auto& m : missing) names += (names.empty() ? "" : ", ") + std::string("'") + m + "'";
  throw Error(ErrorCategory::prerequisite,
              consumer + " needs the output of " + names + "; run `ahmkit " + missing.front() +
                  "` first");
}

std::string resolve_against(const fs::path& base, const std::string& p) {
  if (p.empty()) return p;
  fs::path path(p);
  return path.is_absolute() ? p : (base / path).string();
}

}  // namespace

int exit_code(ErrorCategory c) { return 2 + static_cast<int>(c); }

RunConfig load_run_config(RunConfig c) {
  if (c.config_path.empty()) return c;
  ojson j;
  try {
    j = ojson::parse(text::read_file(c.config_path));
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCategory::parse, "config " + c.config_path + ": " + e.what());
  }
  if (!j.is_object()) throw Error(ErrorCategory::schema, "config must be a JSON object");
  const fs::path base = fs::path(c.config_path).parent_path();
  try {
    for (const auto& [key, v] : j.items()) {
      if (key == "backends") continue;  // consumed by extract
      if (key == "condition") {
        c.condition = v.get<std::string>();
      } else if (key == "similarity_threshold") {
        c.similarity_threshold = v.get<double>();
      } else if (key == "similarity_matrix") {
        c.similarity_matrix = resolve_against(base, v.get<std::string>());
      } else if (key == "scale_registry") {
        c.scale_registry = resolve_against(base, v.get<std::string>());
      } else if (key == "folds") {
        c.folds = v.get<std::size_t>();
      } else if (key == "optimize_thresholds") {
        c.optimize_thresholds = v.get<bool>();
      } else if (key == "lr") {
        for (const auto& [k, x] : v.items()) {
          if (k == "lambda") c.lr.lambda = x.get<double>();
          else if (k == "learning_rate") c.lr.learning_rate = x.get<double>();
          else if (k == "max_steps") c.lr.max_steps = x.get<int>();
          else if (k == "tolerance") c.lr.tolerance = x.get<double>();
          else if (k == "balanced") c.lr.balanced = x.get<bool>();
          else throw Error(ErrorCategory::schema, "config: unknown key lr." + k);
        }
      } else if (key == "mlp") {
        for (const auto& [k, x] : v.items()) {
          if (k == "hidden") c.mlp.hidden = x.get<std::size_t>();
          else if (k == "learning_rate") c.mlp.learning_rate = x.get<double>();
          else if (k == "epochs") c.mlp.epochs = x.get<int>();
          else throw Error(ErrorCategory::schema, "config: unknown key mlp." + k);
        }
      } else {
        throw Error(ErrorCategory::schema, "config: unknown key '" + key + "'");
      }
    }
  } catch (const nlohmann::json::type_error& e) {
    throw Error(ErrorCategory::schema, std::string("config: ") + e.what());
  }
  return c;
}

ExtractSummary cmd_extract(const RunConfig& c, const std::vector<std::string>& papers_in,
                           std::ostream& out) {
  if (c.config_path.empty()) throw Error(ErrorCategory::usage, "extract needs --config <backend config>");
  const auto dir = command_dir(c, "extract");
  RunManifest m("extract", c, dir);
  m.input(c.config_path);
  auto backends = backends::load_backends(c.config_path);

  // Paper ids are file stems; process them in id order and refuse two
  // files that would claim the same id.
  std::vector<std::string> papers = papers_in;
  auto stem = [](const std::string& p) { return fs::path(p).stem().string(); };
  std::sort(papers.begin(), papers.end(), [&](const std::string& x, const std::string& y) {
    return std::pair(stem(x), x) < std::pair(stem(y), y);
  });
  for (std::size_t i = 1; i < papers.size(); ++i) {
    if (stem(papers[i]) == stem(papers[i - 1])) {
      throw Error(ErrorCategory::usage, "papers '" + papers[i - 1] + "' and '" + papers[i] +
                                            "' share the paper id '" + stem(papers[i]) + "'");
    }
  }
  std::string audit;
  csv::Table errors;
  errors.header = {"paper_id", "category", "message"};
  ExtractSummary summary;
  for (const auto& path : papers) {
    const std::string paper_id = stem(path);
    m.input(path);
    try {
      const auto markdown = text::read_file(path);
      auto res = orchestrator::run_pipeline(markdown, paper_id, *backends[0], *backends[1]);
      for (const auto& line : res.audit) audit += line + "\n";
      m.output("results/" + paper_id + ".json", orchestrator::result_json(res));
      m.output("corpus/abnormal-head-movements/" + paper_id + ".json", res.winning_document + "\n");
      ++summary.succeeded;
      out << paper_id << ": winner " << res.winner_backend_id << ", rounds " << res.rounds_used
          << ", stop " << orchestrator::to_string(res.stop_reason) << "\n";
    } catch (const Error& e) {
      errors.rows.push_back({paper_id, std::string(to_string(e.category())), e.what()});
      summary.failed.push_back(paper_id + ": " + e.what());
      out << paper_id << ": FAILED (" << to_string(e.category()) << ") " << e.what() << "\n";
    }
  }
  m.param("papers", papers.size());
  m.param("max_rounds", orchestrator::kDefaultMaxRounds);
  m.output("audit.jsonl", audit);
  m.output("errors.csv", errors);
  m.finish();
  return summary;
}

void cmd_agreement(const RunConfig& c, const std::string& a, const std::string& b,
                   std::ostream& out) {
  const auto dir = command_dir(c, "agreement");
  RunManifest m("agreement", c, dir);
  m.input(a);
  m.input(b);
  auto load_side = [](const std::string& p) {
    corpus::Manifest man;
    man.paths[corpus::FolderRole::abnormal_head_movements].push_back(p);
    return corpus::load_corpus(man).records;
  };
  agreement::ReportOptions opts;
  opts.similarity_threshold = c.similarity_threshold;
  if (!c.similarity_matrix.empty()) {
    m.input(c.similarity_matrix);
    opts.matrix = agreement::SimilarityMatrix::from_table(csv::read(c.similarity_matrix));
  }
  const auto report = agreement::field_agreement_report(load_side(a), load_side(b), opts);
  m.param("similarity_threshold", c.similarity_threshold);
  m.output("agreement.csv", agreement::report_table(report));
  std::string notes;
  for (const auto& n : report.notes) notes += n + "\n";
  m.output("notes.txt", notes);
  m.finish();
  out << "papers compared: " << report.papers_compared << ", groups matched: " << report.groups_matched
      << ", fields: " << report.entries.size() << "\n";
}

void cmd_hnsi(const RunConfig& c, std::ostream& out) {
  const auto dir = command_dir(c, "hnsi");
  RunManifest m("hnsi", c, dir);
  const auto corpus = load_dataset(c, m, "hnsi");
  const auto cd = corpus::filter_condition(corpus, c.condition);
  const auto part = corpus::partition_cd(cd);
  m.param("condition", c.condition);
  m.output("cd_cs.csv", corpus::cd_cs_table(part.cd_cs));

  auto registry = hnsi::ScaleRegistry::defaults();
  if (!c.scale_registry.empty()) {
    m.input(c.scale_registry);
    registry = hnsi::ScaleRegistry::from_table(csv::read(c.scale_registry));
  }
  const auto cohort = hnsi::compute_cohort(part.cd_cs, registry);
  const auto dist = hnsi::cohort_band_distribution(cohort.papers);
  m.output("hnsi_papers.csv", hnsi::papers_table(cohort.papers, registry));
  m.output("hnsi_bands.csv", hnsi::distribution_table(dist));
  m.param("unregistered_rows", cohort.unregistered_rows);
  m.param("ineligible_rows", cohort.ineligible_rows);
  m.finish();

  out << "condition papers: " << cd.records.size() << "\n";
  out << "clinical-scale records: " << part.cd_cs.size() << " across "
      << corpus::count_papers(part.cd_cs) << " papers\n";
  if (cohort.unregistered_rows) {
    out << "warning: " << cohort.unregistered_rows << " rows use scales outside the registry\n";
  }
  out << "HNSI papers: " << cohort.papers.size() << "\n";
  for (auto b : {hnsi::Band::mild, hnsi::Band::moderate, hnsi::Band::severe}) {
    out << "  " << hnsi::to_string(b) << ": " << dist[b].count << " ("
        << text::format_fixed(dist[b].percent, 1) << "%)\n";
  }
  reference(out, c, "condition papers", static_cast<double>(cd.records.size()), 202, 0);
  reference(out, c, "clinical-scale records", static_cast<double>(part.cd_cs.size()), 809, 0);
  reference(out, c, "clinical-scale papers", static_cast<double>(corpus::count_papers(part.cd_cs)), 137, 0);
  reference(out, c, "HNSI papers", static_cast<double>(cohort.papers.size()), 66, 0);
  reference(out, c, "mild %", dist[hnsi::Band::mild].percent, 47, 3);
  reference(out, c, "moderate %", dist[hnsi::Band::moderate].percent, 42, 3);
  reference(out, c, "severe %", dist[hnsi::Band::severe].percent, 11, 3);
}

void cmd_classify(const RunConfig& c, const std::vector<classify::ModelKind>& models,
                  std::ostream& out) {
  const auto dir = command_dir(c, "classify");
  RunManifest m("classify", c, dir);
  const auto corpus = load_dataset(c, m, "classify");
  const auto cd = corpus::filter_condition(corpus, c.condition);
  const auto rows = corpus::quality_filter_kinematics(corpus::kinematic_candidates(cd));
  m.param("condition", c.condition);
  m.output("cd_q.csv", corpus::cd_q_table(rows));

  const auto fm = features::build_feature_matrix(rows);
  m.output("features.csv", features::feature_table(fm));
  std::string warnings;
  for (const auto& w : fm.warnings) warnings += w + "\n";
  m.output("feature_warnings.txt", warnings);

  const auto x = classify::to_matrix(fm.rows);
  const auto plan = classify::make_cv_plan(fm.labels, c.seed, c.folds);
  m.param("folds", c.folds);
  m.param("fold_hash", plan.hash());
  out << "kinematic rows: " << rows.size() << " across " << corpus::count_papers(rows)
      << " papers; labelled rows: " << fm.size() << " (excluded " << fm.excluded << ")\n";
  reference(out, c, "kinematic rows", static_cast<double>(rows.size()), 113, 0);
  reference(out, c, "kinematic papers", static_cast<double>(corpus::count_papers(rows)), 45, 0);

  for (auto kind : models) {
    classify::CvOptions opt;
    opt.model = kind;
    opt.lr = c.lr;
    opt.mlp = c.mlp;
    opt.mlp.seed = c.seed;
    opt.optimize_thresholds = c.optimize_thresholds;
    const auto res = classify::cross_validate(x, fm.labels, plan, opt);
    const std::string name(classify::to_string(kind));
    m.output("probabilities_" + name + ".csv",
             classify::probability_table(fm.paper_ids, fm.group_ids, res.probabilities));
    m.output("metrics_" + name + ".csv", classify::metrics_table(res.metrics));
    m.output("run_" + name + ".txt", classify::run_manifest(plan, opt, res));
    out << name << ": macro F1 " << text::format_fixed(res.metrics.f1, 4) << ", Hamming "
        << text::format_fixed(res.metrics.hamming_loss, 4) << ", exact-match "
        << text::format_fixed(res.metrics.accuracy, 4) << "\n";
    if (kind == classify::ModelKind::lr) reference(out, c, "LR macro F1", res.metrics.f1, 0.85, 0.05);
  }
  m.finish();
}

void cmd_bridge(const RunConfig& c, std::ostream& out) {
  const auto hnsi_csv = prerequisite_path(c, "hnsi", "hnsi_papers.csv");
  std::vector<std::pair<std::string, std::string>> prob_files;
  for (auto kind : {classify::ModelKind::lr, classify::ModelKind::mlp}) {
    const std::string name(classify::to_string(kind));
    const auto p = prerequisite_path(c, "classify", "probabilities_" + name + ".csv");
    if (fs::exists(p)) prob_files.emplace_back(name, p);
  }
  require_outputs({{"classify", !prob_files.empty()}, {"hnsi", fs::exists(hnsi_csv)}}, "bridge");

  const auto dir = command_dir(c, "bridge");
  RunManifest m("bridge", c, dir);
  m.input(hnsi_csv);
  const auto papers = hnsi::papers_from_table(csv::read(hnsi_csv));
  csv::Table report;
  for (const auto& [name, path] : prob_files) {
    m.input(path);
    const auto pairs = bridge::link_papers(classify::probabilities_from_table(csv::read(path)), papers);
    const auto results = bridge::bridge_report(pairs);
    const auto table = bridge::report_table(name, results);
    if (report.header.empty()) report.header = table.header;
    report.rows.insert(report.rows.end(), table.rows.begin(), table.rows.end());
    m.output("bridge_pairs_" + name + ".csv", bridge::pairs_table(pairs));
    out << name << ": " << pairs.size() << " linked papers";
    for (const auto& r : results) {
      if (r.feature == "mean_probability" && r.ok()) {
        out << ", composite r " << text::format_fixed(r.r, 3) << " [" << text::format_fixed(r.ci.low, 2)
            << ", " << text::format_fixed(r.ci.high, 2) << "]";
      }
    }
    out << "\n";
    reference(out, c, name + " linked papers", static_cast<double>(pairs.size()), 24, 0);
  }
  m.output("bridge.csv", report);
  m.finish();
}

void cmd_validate(const RunConfig& c, const std::string& external, bool raw_twstrs,
                  std::ostream& out) {
  const auto hnsi_csv = prerequisite_path(c, "hnsi", "hnsi_papers.csv");
  require_outputs({{"hnsi", fs::exists(hnsi_csv)}}, "validate");
  const auto dir = command_dir(c, "validate");
  RunManifest m("validate", c, dir);
  m.input(hnsi_csv);
  m.input(external);
  const auto papers = hnsi::papers_from_table(csv::read(hnsi_csv));
  const auto literature = hnsi::cohort_band_distribution(papers);
  const auto scores = hnsi::parse_external_scores(text::read_file(external), raw_twstrs);
  const auto cmp = hnsi::compare_band_distributions(literature, scores);
  m.param("raw_twstrs", raw_twstrs);
  m.output("validation.csv", hnsi::comparison_table(cmp));
  m.finish();
  out << "external cohort: " << cmp.external_n << " scores\n";
  for (const auto& r : cmp.rows) {
    out << "  " << hnsi::to_string(r.band) << ": external " << text::format_fixed(r.external_percent, 1)
        << "%, literature " << text::format_fixed(r.literature_percent, 1) << "%\n";
  }
  out << "severe-band gap: " << text::format_fixed(cmp.severe_gap, 1) << " points\n";
  out << "severe threshold in TWSTRS units: " << text::format_fixed(cmp.severe_threshold_raw, 1) << "\n";
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"ahmkit: extraction, reliability, severity and classification toolkit"};
  app.require_subcommand(1);
  app.fallthrough();
  RunConfig cfg;
  app.add_option("--config", cfg.config_path, "JSON config (backends and analysis settings)");
  app.add_option("--seed", cfg.seed, "Seed for every random choice")->capture_default_str();
  app.add_option("--out", cfg.out, "Output directory")->capture_default_str();
  app.add_option("--dataset", cfg.dataset, "Corpus manifest (role=path lines)");
  app.add_flag("--with-published-data", cfg.with_published_data,
               "Print readouts against the published corpus statistics");

  auto* extract = app.add_subcommand("extract", "Run dual-backend extraction on markdown papers");
  std::vector<std::string> papers;
  extract->add_option("papers", papers, "Markdown files")->required()->check(CLI::ExistingFile);

  auto* agree = app.add_subcommand("agreement", "Field-level agreement between two extractors");
  std::string side_a, side_b;
  agree->add_option("--a", side_a, "Extractions from the first extractor")->required()->check(CLI::ExistingPath);
  agree->add_option("--b", side_b, "Extractions from the second extractor")->required()->check(CLI::ExistingPath);
  std::optional<double> threshold;
  agree->add_option("--threshold", threshold, "Semantic similarity threshold")->check(CLI::Range(0.0, 1.0));
  std::string matrix;
  agree->add_option("--similarity", matrix, "Similarity matrix CSV")->check(CLI::ExistingFile);

  auto* hn = app.add_subcommand("hnsi", "Head-neck severity index over the clinical-scale partition");
  std::string registry;
  hn->add_option("--registry", registry, "Scale registry CSV")->check(CLI::ExistingFile);

  auto* cls = app.add_subcommand("classify", "Cross-validated movement-type classifiers");
  std::string model = "both";
  cls->add_option("--model", model, "lr, mlp or both")
      ->check(CLI::IsMember({"lr", "mlp", "both"}))
      ->capture_default_str();
  bool optimize = false;
  cls->add_flag("--optimize-thresholds", optimize, "Per-label F1-optimal thresholds");

  auto* br = app.add_subcommand("bridge", "Correlate HNSI with classifier probabilities");

  auto* val = app.add_subcommand("validate", "Compare severity bands with an external cohort");
  std::string external;
  val->add_option("--external", external, "One score per line")->required()->check(CLI::ExistingFile);
  bool raw = false;
  val->add_flag("--raw-twstrs", raw, "Scores are raw TWSTRS values (divided by 35)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : exit_code(ErrorCategory::usage);
  }

  try {
    auto c = load_run_config(cfg);
    if (threshold) c.similarity_threshold = *threshold;
    if (!matrix.empty()) c.similarity_matrix = matrix;
    if (!registry.empty()) c.scale_registry = registry;
    if (optimize) c.optimize_thresholds = true;

    if (*extract) {
      const auto s = cmd_extract(c, papers, out);
      out << s.succeeded << " succeeded, " << s.failed.size() << " failed\n";
      return s.failed.empty() ? 0 : exit_code(ErrorCategory::pipeline);
    }
    if (*agree) cmd_agreement(c, side_a, side_b, out);
    if (*hn) cmd_hnsi(c, out);
    if (*cls) {
      std::vector<classify::ModelKind> kinds;
      if (model != "mlp") kinds.push_back(classify::ModelKind::lr);
      if (model != "lr") kinds.push_back(classify::ModelKind::mlp);
      cmd_classify(c, kinds, out);
    }
    if (*br) cmd_bridge(c, out);
    if (*val) cmd_validate(c, external, raw, out);
  } catch (const Error& e) {
    err << "error[" << to_string(e.category()) << "]: " << e.what() << "\n";
    return exit_code(e.category());
  } catch (const std::exception& e) {
    err << "error[io]: " << e.what() << "\n";
    return exit_code(ErrorCategory::io);
  }
  return 0;
}

}  // namespace ahmkit::cli
