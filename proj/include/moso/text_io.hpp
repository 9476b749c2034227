#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace moso {

/// Shortest decimal form that round-trips the exact double (via
/// std::to_chars). "nan"/"inf" come out as such.
std::string format_double(double value);

/// Strict full-string parses. On failure they throw std::invalid_argument
/// with the offending token; file readers translate that into ParseError.
double parse_double(std::string_view token);
long long parse_int(std::string_view token);
std::uint64_t parse_u64(std::string_view token);

std::vector<std::string_view> split(std::string_view line, char sep);

/// Looks up "key=value" in a space-separated header tail; throws
/// std::invalid_argument when the key is missing.
std::string_view header_field(std::string_view header, std::string_view key);

/// FNV-1a 64 over the given text, as 16 lowercase hex digits.
std::string content_digest(std::string_view text);

}  // namespace moso
