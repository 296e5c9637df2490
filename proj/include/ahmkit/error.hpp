#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ahmkit {

/// Machine-readable failure classes. The CLI maps each one to a distinct
/// exit status and prints the name in its error line.
enum class ErrorCategory {
  usage,
  io,
  parse,
  schema,
  conflict,
  insufficient_data,
  degenerate,
  prerequisite,
  pipeline,
  divergence,
};

constexpr std::string_view to_string(ErrorCategory c) {
  switch (c) {
    case ErrorCategory::usage: return "usage";
    case ErrorCategory::io: return "io";
    case ErrorCategory::parse: return "parse";
    case ErrorCategory::schema: return "schema";
    case ErrorCategory::conflict: return "conflict";
    case ErrorCategory::insufficient_data: return "insufficient_data";
    case ErrorCategory::degenerate: return "degenerate";
    case ErrorCategory::prerequisite: return "prerequisite";
    case ErrorCategory::pipeline: return "pipeline";
    case ErrorCategory::divergence: return "divergence";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& message)
      : std::runtime_error(message), category_(category) {}

  ErrorCategory category() const noexcept { return category_; }

 private:
  ErrorCategory category_;
};

}  // namespace ahmkit
