#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <type_traits>
#include <utility>

#include "ahmkit/error.hpp"

namespace ahmkit {

/// Literal used on the wire for "not reported".
inline constexpr std::string_view kNotReported = "NR";

struct NotReported {
  friend constexpr bool operator==(NotReported, NotReported) { return true; }
};
inline constexpr NotReported NR{};

/// A value that a source document may leave unreported.
///
/// There is deliberately no implicit conversion to T and no operator bool:
/// NR must never turn into 0, false or "" by accident. Callers either test
/// `reported()` or use `value()`, which throws on NR.
template <typename T>
class Reported {
 public:
  constexpr Reported() = default;
  constexpr Reported(NotReported) {}
  constexpr Reported(T value) : value_(std::move(value)) {}
  /// String literals for text fields (only for T = std::string, so a
  /// literal can never become a bool).
  template <typename U>
    requires(std::is_same_v<T, std::string> && std::is_convertible_v<const U&, std::string_view> &&
             !std::is_same_v<U, std::string>)
  Reported(const U& text) : value_(std::string(std::string_view(text))) {}

  constexpr bool reported() const { return value_.has_value(); }
  constexpr bool is_nr() const { return !value_.has_value(); }

  const T& value() const {
    if (!value_) throw Error(ErrorCategory::schema, "value is NR");
    return *value_;
  }

  /// Pointer to the value, or nullptr when NR.
  const T* get() const { return value_ ? &*value_ : nullptr; }

  std::optional<T> to_optional() const { return value_; }

  friend bool operator==(const Reported&, const Reported&) = default;

 private:
  std::optional<T> value_;
};

}  // namespace ahmkit
