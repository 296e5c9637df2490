#pragma once

// Operator commands. Every command writes its outputs under
// <out>/<command>/ together with a manifest.json holding the seed, the
// parameters and FNV-1a hashes of every input and output file.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "ahmkit/classify.hpp"
#include "ahmkit/error.hpp"

namespace ahmkit::cli {

struct RunConfig {
  std::string config_path;  // JSON: optional "backends" plus analysis settings
  std::string dataset;      // corpus manifest (role=path lines)
  std::string out = "ahmkit-out";
  std::uint64_t seed = 42;
  bool with_published_data = false;

  std::string condition = "cervical dystonia";
  double similarity_threshold = 0.7;
  std::string similarity_matrix;  // CSV term_a, term_b, score; empty = defaults
  std::string scale_registry;     // CSV scale, hn_max, keywords; empty = defaults
  std::size_t folds = 5;
  classify::LrParams lr;
  classify::MlpParams mlp;
  bool optimize_thresholds = false;
};

/// Reads analysis settings from the JSON file at `config_path` (if set) on
/// top of `base`. Unknown keys are rejected. Relative paths in the file
/// resolve against its directory.
RunConfig load_run_config(RunConfig base);

/// 0 success; every category has its own nonzero status.
int exit_code(ErrorCategory c);

struct ExtractSummary {
  std::size_t succeeded = 0;
  std::vector<std::string> failed;  // "paper_id: message"
};

/// One pipeline per markdown file (paper id = file stem). Failures are
/// isolated per paper and listed in errors.csv.
ExtractSummary cmd_extract(const RunConfig& config, const std::vector<std::string>& papers,
                           std::ostream& out);
/// `a` and `b` are extraction files or directories from two extractors.
void cmd_agreement(const RunConfig& config, const std::string& a, const std::string& b,
                   std::ostream& out);
void cmd_hnsi(const RunConfig& config, std::ostream& out);
void cmd_classify(const RunConfig& config, const std::vector<classify::ModelKind>& models,
                  std::ostream& out);
/// Needs the outputs of `hnsi` and `classify`.
void cmd_bridge(const RunConfig& config, std::ostream& out);
/// Needs the output of `hnsi`.
void cmd_validate(const RunConfig& config, const std::string& external_scores, bool raw_twstrs,
                  std::ostream& out);

/// Parses arguments and dispatches. Errors are printed to `err` as
/// "error[<category>]: <message>".
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace ahmkit::cli
