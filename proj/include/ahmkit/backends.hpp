#pragma once

// Concrete extractor backends: a scripted mock driven by a scenario file and
// an HTTP adapter for OpenAI-compatible chat-completion endpoints.

#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <tuple>
#include <vector>

#include "ahmkit/orchestrator.hpp"

namespace ahmkit::backends {

/// Scenario file: {"entries": [{"backend": "A", "paper_id": "P1",
/// "round": 1, "phase": "extract"|"evaluate"|"refine", "response": <object
/// or raw string>, "transport_failures": 0}, ...]}. A round of 0 matches any
/// round that has no exact entry. Responses given as objects are emitted
/// with dump(); raw strings are emitted verbatim (used to script malformed
/// output).
class ScriptedBackend final : public orchestrator::ExtractorBackend {
 public:
  ScriptedBackend(std::string id, const std::string& scenario_json);

  std::string id() const override { return id_; }
  std::string extract(std::string_view markdown, const orchestrator::CallContext& ctx) override;
  std::string evaluate(std::string_view document, const orchestrator::CallContext& ctx) override;
  std::string refine(std::string_view document, const orchestrator::EvaluationReport& feedback,
                     const orchestrator::CallContext& ctx) override;

  /// Number of calls served so far, including injected failures.
  std::size_t calls() const;

 private:
  using Key = std::tuple<std::string, int, std::string>;  // paper, round, phase
  struct Entry {
    std::string response;
    int transport_failures = 0;
  };
  std::string respond(const orchestrator::CallContext& ctx, const std::string& phase);

  std::string id_;
  std::map<Key, Entry> entries_;
  std::map<Key, int> failures_served_;
  std::size_t calls_ = 0;
  mutable std::mutex mu_;
};

struct HttpConfig {
  std::string id;
  std::string endpoint;  // full URL, e.g. http://localhost:8080/v1/chat/completions
  std::string model;
  int timeout_seconds = 120;
  std::string api_key_env;  // name of the environment variable; may be empty
  std::string extract_prompt;
  std::string evaluate_prompt;
  std::string refine_prompt;
};

/// Chat-completions adapter. Temperature is pinned to 0. Connection errors,
/// HTTP 429 and 5xx raise TransportError; other non-2xx statuses and
/// responses without message content raise Error{io}.
class HttpBackend final : public orchestrator::ExtractorBackend {
 public:
  explicit HttpBackend(HttpConfig config);

  std::string id() const override { return config_.id; }
  std::string extract(std::string_view markdown, const orchestrator::CallContext& ctx) override;
  std::string evaluate(std::string_view document, const orchestrator::CallContext& ctx) override;
  std::string refine(std::string_view document, const orchestrator::EvaluationReport& feedback,
                     const orchestrator::CallContext& ctx) override;

 private:
  std::string chat(const std::string& system_prompt, const std::string& user_message);

  HttpConfig config_;
  std::string origin_;
  std::string path_;
};

/// Removes a surrounding ``` / ```json fence if present.
std::string strip_code_fence(std::string_view s);

/// Backend config: {"backends": [{"id", "kind": "scripted"|"http", ...}]}
/// with exactly two entries. Scripted entries name a "scenario" file; http
/// entries give "endpoint", "model", "timeout_seconds", "api_key_env" and a
/// "prompts" object of file paths. Relative paths resolve against the
/// config file's directory. A literal credential key in the file is
/// rejected.
std::vector<std::unique_ptr<orchestrator::ExtractorBackend>> load_backends(
    const std::string& config_path);

}  // namespace ahmkit::backends
