#pragma once

#include <stdexcept>
#include <string>

namespace moso {

/// Malformed input file. Carries the path and the 1-based line number
/// where parsing stopped (0 when the location is not line-specific).
class ParseError : public std::runtime_error {
 public:
  ParseError(std::string path, int line, const std::string& message)
      : std::runtime_error(format(path, line, message)),
        path_(std::move(path)),
        line_(line) {}

  const std::string& path() const { return path_; }
  int line() const { return line_; }

 private:
  static std::string format(const std::string& path, int line,
                            const std::string& message) {
    if (line > 0) {
      return path + ":" + std::to_string(line) + ": " + message;
    }
    return path + ": " + message;
  }

  std::string path_;
  int line_;
};

/// A documented cost or safety guard refused the operation
/// (oversized exact scoring, pruning ratio out of range, ...).
class GuardError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace moso
