#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace ahmkit::text {

std::string trim(std::string_view s);

/// ASCII lowercase of the trimmed input. Non-ASCII bytes pass through.
std::string fold(std::string_view s);

bool contains(std::string_view haystack, std::string_view needle);

/// Split on any character in `delims`, trimming pieces and dropping empties.
std::vector<std::string> split_any(std::string_view s, std::string_view delims);

/// Splits a multi-term descriptor ("torticollis, laterocollis and tremor")
/// into folded terms. Separators: , ; / + & and the words "and", "with".
std::vector<std::string> split_terms(std::string_view s);

/// Shortest decimal that round-trips the double. Never uses an exponent.
std::string format_decimal(double v);

/// Fixed-point with the given digits after the point.
std::string format_fixed(double v, int digits);

/// True for an optional '-', digits, and an optional fraction ("12", "-0.5").
bool is_plain_decimal(std::string_view s);

/// FNV-1a 64-bit, rendered as 16 lowercase hex digits.
std::string fnv1a_hex(std::string_view bytes);

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view contents);

}  // namespace ahmkit::text
