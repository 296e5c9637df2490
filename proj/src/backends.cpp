#include "ahmkit/backends.hpp"

#include <cstdlib>
#include <filesystem>
#include <httplib.h>
#include <json.hpp>

#include "ahmkit/error.hpp"
#include "ahmkit/text.hpp"

namespace ahmkit::backends {

namespace {

using json = nlohmann::json;
namespace fs = std::filesystem;

json parse_json(const std::string& body, const std::string& what) {
  try {
    return json::parse(body);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCategory::parse, what + ": " + e.what());
  }
}

std::string get_string(const json& j, const char* key, const std::string& what) {
  if (!j.contains(key) || !j[key].is_string()) {
    throw Error(ErrorCategory::schema, what + ": missing string '" + key + "'");
  }
  return j[key].get<std::string>();
}

std::string resolve(const fs::path& base, const std::string& p) {
  fs::path path(p);
  return path.is_absolute() ? path.string() : (base / path).string();
}

}  // namespace

// ---------------------------------------------------------------- scripted

ScriptedBackend::ScriptedBackend(std::string id, const std::string& scenario_json)
    : id_(std::move(id)) {
  const auto j = parse_json(scenario_json, "scenario");
  if (!j.is_object() || !j.contains("entries") || !j["entries"].is_array()) {
    throw Error(ErrorCategory::schema, "scenario: expected an 'entries' array");
  }
  for (const auto& e : j["entries"]) {
    if (get_string(e, "backend", "scenario entry") != id_) continue;
    const auto phase = get_string(e, "phase", "scenario entry");
    if (phase != "extract" && phase != "evaluate" && phase != "refine") {
      throw Error(ErrorCategory::schema, "scenario: unknown phase '" + phase + "'");
    }
    const int round = e.value("round", 0);
    if (!e.contains("response")) throw Error(ErrorCategory::schema, "scenario entry without response");
    Entry entry;
    entry.response = e["response"].is_string() ? e["response"].get<std::string>() : e["response"].dump();
    entry.transport_failures = e.value("transport_failures", 0);
    Key key{get_string(e, "paper_id", "scenario entry"), round, phase};
    if (!entries_.emplace(key, std::move(entry)).second) {
      throw Error(ErrorCategory::conflict, "scenario: duplicate entry for backend '" + id_ + "'");
    }
  }
}

std::size_t ScriptedBackend::calls() const {
  std::lock_guard lock(mu_);
  return calls_;
}

std::string ScriptedBackend::respond(const orchestrator::CallContext& ctx, const std::string& phase) {
  std::lock_guard lock(mu_);
  ++calls_;
  Key key{ctx.paper_id, ctx.round, phase};
  auto it = entries_.find(key);
  if (it == entries_.end()) {
    key = Key{ctx.paper_id, 0, phase};
    it = entries_.find(key);
  }
  if (it == entries_.end()) {
    throw Error(ErrorCategory::schema, "scenario has no " + phase + " response for paper '" +
                                           ctx.paper_id + "' round " + std::to_string(ctx.round));
  }
  int& served = failures_served_[Key{ctx.paper_id, ctx.round, phase}];
  if (served < it->second.transport_failures) {
    ++served;
    throw orchestrator::TransportError("scripted transport failure");
  }
  return it->second.response;
}

std::string ScriptedBackend::extract(std::string_view, const orchestrator::CallContext& ctx) {
  return respond(ctx, "extract");
}

std::string ScriptedBackend::evaluate(std::string_view, const orchestrator::CallContext& ctx) {
  return respond(ctx, "evaluate");
}

std::string ScriptedBackend::refine(std::string_view, const orchestrator::EvaluationReport&,
                                    const orchestrator::CallContext& ctx) {
  return respond(ctx, "refine");
}

// ---------------------------------------------------------------- http

std::string strip_code_fence(std::string_view s) {
  auto t = text::trim(s);
  if (!t.starts_with("```")) return t;
  auto first_nl = t.find('\n');
  auto last = t.rfind("```");
  if (first_nl == std::string::npos || last <= first_nl) return t;
  return text::trim(std::string_view(t).substr(first_nl + 1, last - first_nl - 1));
}

HttpBackend::HttpBackend(HttpConfig config) : config_(std::move(config)) {
  const auto& url = config_.endpoint;
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) {
    throw Error(ErrorCategory::schema, "backend '" + config_.id + "': endpoint must be a URL");
  }
  const auto path_start = url.find('/', scheme_end + 3);
  origin_ = path_start == std::string::npos ? url : url.substr(0, path_start);
  path_ = path_start == std::string::npos ? "/" : url.substr(path_start);
}

std::string HttpBackend::chat(const std::string& system_prompt, const std::string& user_message) {
  httplib::Client client(origin_);
  client.set_connection_timeout(config_.timeout_seconds, 0);
  client.set_read_timeout(config_.timeout_seconds, 0);
  client.set_write_timeout(config_.timeout_seconds, 0);

  httplib::Headers headers;
  if (!config_.api_key_env.empty()) {
    const char* key = std::getenv(config_.api_key_env.c_str());
    if (!key || !*key) {
      throw Error(ErrorCategory::usage, "backend '" + config_.id + "': environment variable " +
                                            config_.api_key_env + " is not set");
    }
    headers.emplace("Authorization", std::string("Bearer ") + key);
  }

  json body;
  body["model"] = config_.model;
  body["temperature"] = 0.0;
  body["messages"] = json::array({{{"role", "system"}, {"content", system_prompt}},
                                  {{"role", "user"}, {"content", user_message}}});

  auto res = client.Post(path_, headers, body.dump(), "application/json");
  if (!res) {
    throw orchestrator::TransportError("backend '" + config_.id + "': " + httplib::to_string(res.error()));
  }
  if (res->status == 429 || res->status >= 500) {
    throw orchestrator::TransportError("backend '" + config_.id + "': HTTP " + std::to_string(res->status));
  }
  if (res->status < 200 || res->status >= 300) {
    throw Error(ErrorCategory::io, "backend '" + config_.id + "': HTTP " + std::to_string(res->status));
  }
  json reply;
  try {
    reply = json::parse(res->body);
    return strip_code_fence(reply.at("choices").at(0).at("message").at("content").get<std::string>());
  } catch (const json::exception& e) {
    throw Error(ErrorCategory::io, "backend '" + config_.id + "': unexpected response: " + e.what());
  }
}

std::string HttpBackend::extract(std::string_view markdown, const orchestrator::CallContext& ctx) {
  return chat(config_.extract_prompt,
              "Paper ID: " + ctx.paper_id + "\n\n" + std::string(markdown));
}

std::string HttpBackend::evaluate(std::string_view document, const orchestrator::CallContext& ctx) {
  return chat(config_.evaluate_prompt,
              "Paper ID: " + ctx.paper_id + "\n\nExtraction JSON:\n" + std::string(document));
}

std::string HttpBackend::refine(std::string_view document,
                                const orchestrator::EvaluationReport& feedback,
                                const orchestrator::CallContext& ctx) {
  return chat(config_.refine_prompt, "Paper ID: " + ctx.paper_id + "\n\nCurrent extraction:\n" +
                                         std::string(document) + "\n\nEvaluator feedback:\n" +
                                         orchestrator::serialize_report(feedback));
}

// ---------------------------------------------------------------- config

std::vector<std::unique_ptr<orchestrator::ExtractorBackend>> load_backends(
    const std::string& config_path) {
  const auto j = parse_json(text::read_file(config_path), "backend config");
  const fs::path base = fs::path(config_path).parent_path();
  if (!j.is_object() || !j.contains("backends") || !j["backends"].is_array() ||
      j["backends"].size() != 2) {
    throw Error(ErrorCategory::schema, "backend config: 'backends' must list exactly two entries");
  }
  std::vector<std::unique_ptr<orchestrator::ExtractorBackend>> out;
  for (const auto& b : j["backends"]) {
    for (const char* forbidden : {"api_key", "token", "password", "secret"}) {
      if (b.contains(forbidden)) {
        throw Error(ErrorCategory::schema, std::string("backend config: '") + forbidden +
                                               "' must come from an environment variable");
      }
    }
    const auto id = get_string(b, "id", "backend config");
    const auto kind = get_string(b, "kind", "backend '" + id + "'");
    if (kind == "scripted") {
      const auto path = resolve(base, get_string(b, "scenario", "backend '" + id + "'"));
      out.push_back(std::make_unique<ScriptedBackend>(id, text::read_file(path)));
    } else if (kind == "http") {
      HttpConfig c;
      c.id = id;
      c.endpoint = get_string(b, "endpoint", "backend '" + id + "'");
      c.model = get_string(b, "model", "backend '" + id + "'");
      c.timeout_seconds = b.value("timeout_seconds", 120);
      c.api_key_env = b.value("api_key_env", std::string());
      if (!b.contains("prompts") || !b["prompts"].is_object()) {
        throw Error(ErrorCategory::schema, "backend '" + id + "': missing 'prompts'");
      }
      const auto& p = b["prompts"];
      c.extract_prompt = text::read_file(resolve(base, get_string(p, "extract", "prompts")));
      c.evaluate_prompt = text::read_file(resolve(base, get_string(p, "evaluate", "prompts")));
      c.refine_prompt = text::read_file(resolve(base, get_string(p, "refine", "prompts")));
      out.push_back(std::make_unique<HttpBackend>(std::move(c)));
    } else {
      throw Error(ErrorCategory::schema, "backend '" + id + "': unknown kind '" + kind + "'");
    }
  }
  if (out[0]->id() == out[1]->id()) {
    throw Error(ErrorCategory::schema, "backend config: backend ids must differ");
  }
  return out;
}

}  // namespace ahmkit::backends
