#include "moso/text_io.hpp"

#include <array>
#include <charconv>
#include <stdexcept>
#include <system_error>

namespace moso {

std::string format_double(double value) {
  std::array<char, 64> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  return std::string(buf.data(), res.ptr);
}

namespace {

[[noreturn]] void bad_token(std::string_view what, std::string_view token) {
  throw std::invalid_argument(std::string(what) + ": '" + std::string(token) +
                              "'");
}

}  // namespace

double parse_double(std::string_view token) {
  double value = 0.0;
  const auto res =
      std::from_chars(token.data(), token.data() + token.size(), value);
  if (res.ec != std::errc{} || res.ptr != token.data() + token.size()) {
    bad_token("not a number", token);
  }
  return value;
}

long long parse_int(std::string_view token) {
  long long value = 0;
  const auto res =
      std::from_chars(token.data(), token.data() + token.size(), value);
  if (res.ec != std::errc{} || res.ptr != token.data() + token.size()) {
    bad_token("not an integer", token);
  }
  return value;
}

std::uint64_t parse_u64(std::string_view token) {
  std::uint64_t value = 0;
  const auto res =
      std::from_chars(token.data(), token.data() + token.size(), value);
  if (res.ec != std::errc{} || res.ptr != token.data() + token.size()) {
    bad_token("not an unsigned integer", token);
  }
  return value;
}

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(sep, start);
    if (pos == std::string_view::npos) {
      parts.push_back(line.substr(start));
      return parts;
    }
    parts.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

std::string_view header_field(std::string_view header, std::string_view key) {
  const std::string needle = std::string(key) + "=";
  std::size_t pos = 0;
  while (pos < header.size()) {
    const std::size_t end = header.find(' ', pos);
    const std::string_view token =
        header.substr(pos, end == std::string_view::npos ? end : end - pos);
    if (token.substr(0, needle.size()) == needle) {
      return token.substr(needle.size());
    }
    if (end == std::string_view::npos) {
      break;
    }
    pos = end + 1;
  }
  throw std::invalid_argument("missing header field '" + std::string(key) +
                              "'");
}

std::string content_digest(std::string_view text) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  static const char* hex = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = hex[h & 0xf];
    h >>= 4;
  }
  return out;
}

}  // namespace moso
