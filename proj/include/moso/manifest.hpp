#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace moso {

/// Resolved invocation record embedded as a comment into every output file
/// so artifacts are self-describing and reproducible. Rendering is
/// deterministic: flags appear in insertion order, no timestamps.
struct RunManifest {
  std::string command;
  std::uint64_t seed = 0;
  std::vector<std::pair<std::string, std::string>> flags;

  void add(std::string key, std::string value);
  void add(std::string key, double value);
  void add(std::string key, long long value);
  void add(std::string key, std::uint64_t value);

  /// Single line, no leading '#': "run v=<version> cmd=<cmd> seed=<seed> ...".
  std::string render() const;
};

}  // namespace moso
