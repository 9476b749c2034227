#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace moso {

enum class ScoreMethod {
  moso_approx,
  moso_exact,
  grand,
  el2n,
  forgetting,
  random,
};

std::string to_string(ScoreMethod method);
ScoreMethod parse_score_method(std::string_view text);

/// One score per sample id (scores[id] belongs to sample id). The digest
/// records the seeds and sampling settings that produced the table.
struct ScoreTable {
  ScoreMethod method = ScoreMethod::random;
  std::vector<double> scores;
  std::string config_digest;
};

/// Text format: "#moso-scores v1 method=<tag> config=<digest>" then
/// "<id>,<score>" lines with ids ascending.
std::string serialize_score_table(const ScoreTable& table,
                                  const std::vector<std::string>& comments = {});
void write_score_table(const ScoreTable& table, const std::string& path,
                       const std::vector<std::string>& comments = {});
ScoreTable read_score_table(std::istream& in, const std::string& name);
ScoreTable read_score_table(const std::string& path);

}  // namespace moso
