#include "moso/manifest.hpp"

#include "moso/text_io.hpp"
#include "moso/version.hpp"

namespace moso {

void RunManifest::add(std::string key, std::string value) {
  flags.emplace_back(std::move(key), std::move(value));
}

void RunManifest::add(std::string key, double value) {
  flags.emplace_back(std::move(key), format_double(value));
}

void RunManifest::add(std::string key, long long value) {
  flags.emplace_back(std::move(key), std::to_string(value));
}

void RunManifest::add(std::string key, std::uint64_t value) {
  flags.emplace_back(std::move(key), std::to_string(value));
}

std::string RunManifest::render() const {
  std::string out = "run v=";
  out += kVersion;
  out += " cmd=" + command;
  out += " seed=" + std::to_string(seed);
  for (const auto& [key, value] : flags) {
    out += " " + key + "=" + value;
  }
  return out;
}

}  // namespace moso
