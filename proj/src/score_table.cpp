#include "moso/score_table.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "moso/errors.hpp"
#include "moso/text_io.hpp"

namespace moso {

std::string to_string(ScoreMethod method) {
  switch (method) {
    case ScoreMethod::moso_approx:
      return "moso_approx";
    case ScoreMethod::moso_exact:
      return "moso_exact";
    case ScoreMethod::grand:
      return "grand";
    case ScoreMethod::el2n:
      return "el2n";
    case ScoreMethod::forgetting:
      return "forgetting";
    case ScoreMethod::random:
      return "random";
  }
  throw std::logic_error("unreachable score method");
}

ScoreMethod parse_score_method(std::string_view text) {
  for (ScoreMethod m :
       {ScoreMethod::moso_approx, ScoreMethod::moso_exact, ScoreMethod::grand,
        ScoreMethod::el2n, ScoreMethod::forgetting, ScoreMethod::random}) {
    if (to_string(m) == text) {
      return m;
    }
  }
  throw std::invalid_argument("unknown score method: '" + std::string(text) +
                              "'");
}

std::string serialize_score_table(const ScoreTable& table,
                                  const std::vector<std::string>& comments) {
  std::ostringstream out;
  out << "#moso-scores v1 method=" << to_string(table.method)
      << " config=" << table.config_digest << "\n";
  for (const auto& c : comments) {
    out << "#" << c << "\n";
  }
  for (std::size_t id = 0; id < table.scores.size(); ++id) {
    out << id << "," << format_double(table.scores[id]) << "\n";
  }
  return out.str();
}

void write_score_table(const ScoreTable& table, const std::string& path,
                       const std::vector<std::string>& comments) {
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("cannot open for writing: " + path);
  }
  out << serialize_score_table(table, comments);
}

ScoreTable read_score_table(std::istream& in, const std::string& name) {
  std::string line;
  if (!std::getline(in, line)) {
    throw ParseError(name, 1, "missing header");
  }
  static const std::string magic = "#moso-scores v1 ";
  if (line.rfind(magic, 0) != 0) {
    throw ParseError(name, 1, "missing header (expected '#moso-scores v1')");
  }
  ScoreTable table;
  try {
    const std::string_view tail = std::string_view(line).substr(magic.size());
    table.method = parse_score_method(header_field(tail, "method"));
    table.config_digest = std::string(header_field(tail, "config"));
  } catch (const std::invalid_argument& e) {
    throw ParseError(name, 1, std::string("malformed header: ") + e.what());
  }

  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') {
      continue;
    }
    const auto parts = split(std::string_view(line), ',');
    if (parts.size() != 2) {
      throw ParseError(name, line_no, "expected '<id>,<score>'");
    }
    try {
      const auto id = parse_int(parts[0]);
      if (id != static_cast<long long>(table.scores.size())) {
        throw std::invalid_argument("ids must be ascending from 0");
      }
      const double score = parse_double(parts[1]);
      if (!std::isfinite(score)) {
        throw std::invalid_argument("score must be finite");
      }
      table.scores.push_back(score);
    } catch (const std::invalid_argument& e) {
      throw ParseError(name, line_no, e.what());
    }
  }
  return table;
}

ScoreTable read_score_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot open: " + path);
  }
  return read_score_table(in, path);
}

}  // namespace moso
