#include "moso/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "moso/errors.hpp"
#include "moso/parallel.hpp"
#include "moso/rng.hpp"
#include "moso/text_io.hpp"

namespace moso {

std::vector<int> PartitionPlan::subset_ids(int subset) const {
  std::vector<int> ids;
  for (std::size_t i = 0; i < assignment.size(); ++i) {
    if (assignment[i] == subset) {
      ids.push_back(static_cast<int>(i));
    }
  }
  return ids;
}

PartitionPlan make_partition(const Dataset& ds, int subsets,
                             std::uint64_t seed) {
  ds.validate();
  if (subsets < 1 || subsets > ds.size()) {
    throw std::invalid_argument("make_partition: I must be in [1, N]");
  }

  // Group ids by class, shuffle each group, then deal the groups out
  // round-robin with a running offset so subset sizes stay within +-1
  // overall and within +-1 per class.
  std::vector<std::vector<int>> by_class(
      static_cast<std::size_t>(ds.num_classes));
  for (const Sample& s : ds.samples) {
    by_class[static_cast<std::size_t>(s.label)].push_back(s.id);
  }

  PartitionPlan plan;
  plan.subsets = subsets;
  plan.assignment.assign(ds.samples.size(), 0);
  int offset = 0;
  for (int c = 0; c < ds.num_classes; ++c) {
    auto& ids = by_class[static_cast<std::size_t>(c)];
    Rng rng(derive_seed(seed, "partition-class", static_cast<std::uint64_t>(c)));
    rng.shuffle(ids);
    for (std::size_t j = 0; j < ids.size(); ++j) {
      plan.assignment[static_cast<std::size_t>(ids[j])] =
          (offset + static_cast<int>(j)) % subsets;
    }
    offset = (offset + static_cast<int>(ids.size())) % subsets;
  }
  return plan;
}

namespace {

MaterializedDataset build_subset(const Dataset& ds,
                                 const std::vector<int>& ids) {
  MaterializedDataset out;
  out.data.dim = ds.dim;
  out.data.num_classes = ds.num_classes;
  out.data.samples.reserve(ids.size());
  out.original_ids = ids;
  int next_id = 0;
  for (int id : ids) {
    Sample s = ds.samples[static_cast<std::size_t>(id)];
    s.id = next_id++;
    out.data.samples.push_back(std::move(s));
  }
  return out;
}

ScoreTable score_subset(const Dataset& sub, const ModelSpec& spec,
                        const TrainConfig& cfg, const SamplingRule& rule,
                        ScoreMethod method, int jobs) {
  if (method == ScoreMethod::random) {
    return random_score(sub, spec.init_seed);
  }
  const FitResult result = fit(sub, spec, cfg, CaptureRule::all());
  switch (method) {
    case ScoreMethod::moso_approx:
      return moso_approx(sub, result.trace, rule, jobs);
    case ScoreMethod::grand:
      return grand_score(sub, result.trace, rule, jobs);
    case ScoreMethod::el2n:
      return el2n_score(sub, result.final_params);
    case ScoreMethod::forgetting:
      return forgetting_counts(result);
    default:
      throw std::invalid_argument(
          "score_pipeline: method must be one of moso_approx, grand, el2n, "
          "forgetting, random");
  }
}

}  // namespace

ScoreTable score_pipeline(const Dataset& ds, const ModelSpec& spec,
                          const TrainConfig& cfg, const PartitionPlan& plan,
                          const SamplingRule& rule, ScoreMethod method,
                          const PipelineOptions& options) {
  if (method == ScoreMethod::moso_exact) {
    throw std::invalid_argument(
        "score_pipeline: moso_exact is the oracle path, not a pipeline "
        "method");
  }
  if (static_cast<int>(plan.assignment.size()) != ds.size()) {
    throw std::invalid_argument("score_pipeline: plan does not cover dataset");
  }

  ScoreTable merged;
  merged.method = method;
  merged.scores.assign(ds.samples.size(), 0.0);

  std::vector<std::string> digests(static_cast<std::size_t>(plan.subsets));
  parallel_for(plan.subsets, options.jobs, [&](int i) {
    const std::vector<int> ids = plan.subset_ids(i);
    if (ids.empty()) {
      throw std::invalid_argument("score_pipeline: subset " +
                                  std::to_string(i) + " is empty");
    }
    if (static_cast<int>(ids.size()) < 2 &&
        method == ScoreMethod::moso_approx) {
      throw std::invalid_argument(
          "score_pipeline: subset " + std::to_string(i) +
          " is too small to score (need at least 2 samples)");
    }
    const MaterializedDataset sub = build_subset(ds, ids);

    // I = 1 must be byte-identical to the direct scoring path, so only
    // derive subset-specific seeds when there is more than one subset.
    ModelSpec sub_spec = spec;
    if (plan.subsets > 1) {
      sub_spec.init_seed = derive_seed(spec.init_seed, "partition",
                                       static_cast<std::uint64_t>(i));
    }

    const ScoreTable part =
        score_subset(sub.data, sub_spec, cfg, rule, method, options.jobs);
    for (std::size_t j = 0; j < sub.original_ids.size(); ++j) {
      merged.scores[static_cast<std::size_t>(sub.original_ids[j])] =
          part.scores[j];
    }
    digests[static_cast<std::size_t>(i)] = part.config_digest;
  });

  merged.config_digest = digests.front();
  if (plan.subsets > 1) {
    merged.config_digest += ";I=" + std::to_string(plan.subsets);
  }
  return merged;
}

namespace {

// floor with a hair of tolerance so 0.3*10 cannot land on 2.
int floor_fraction(double fraction, int n) {
  return static_cast<int>(std::floor(fraction * n + 1e-12));
}

}  // namespace

Coreset prune(const Dataset& ds, const ScoreTable& scores, double delta) {
  if (!(delta >= 0.0) || delta >= 1.0) {
    throw GuardError("prune: delta must be < 1 (and >= 0), got " +
                     format_double(delta));
  }
  if (static_cast<int>(scores.scores.size()) != ds.size()) {
    throw std::invalid_argument(
        "prune: score table covers " + std::to_string(scores.scores.size()) +
        " ids but the dataset has " + std::to_string(ds.size()));
  }

  const int n = ds.size();
  const int drop = floor_fraction(delta, n);
  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  // Lowest score first; ties pruned in ascending id order.
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    const double sa = scores.scores[static_cast<std::size_t>(a)];
    const double sb = scores.scores[static_cast<std::size_t>(b)];
    if (sa != sb) {
      return sa < sb;
    }
    return a < b;
  });

  Coreset coreset;
  coreset.kept_ids.assign(order.begin() + drop, order.end());
  std::sort(coreset.kept_ids.begin(), coreset.kept_ids.end());
  coreset.source_digest = dataset_digest(ds);
  coreset.delta = delta;
  coreset.method = scores.method;
  return coreset;
}

MaterializedDataset materialize(const Dataset& ds, const Coreset& coreset) {
  if (coreset.source_digest != dataset_digest(ds)) {
    throw std::invalid_argument(
        "materialize: coreset was built from a different dataset (digest "
        "mismatch)");
  }
  for (int id : coreset.kept_ids) {
    if (id < 0 || id >= ds.size()) {
      throw std::invalid_argument("materialize: kept id " +
                                  std::to_string(id) + " out of range");
    }
  }
  return build_subset(ds, coreset.kept_ids);
}

std::string serialize_coreset(const Coreset& coreset,
                              const std::vector<std::string>& comments) {
  std::ostringstream out;
  out << "#moso-coreset v1 delta=" << format_double(coreset.delta)
      << " method=" << to_string(coreset.method)
      << " source=" << coreset.source_digest << "\n";
  for (const auto& c : comments) {
    out << "#" << c << "\n";
  }
  for (int id : coreset.kept_ids) {
    out << id << "\n";
  }
  return out.str();
}

void write_coreset(const Coreset& coreset, const std::string& path,
                   const std::vector<std::string>& comments) {
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("cannot open for writing: " + path);
  }
  out << serialize_coreset(coreset, comments);
}

Coreset read_coreset(std::istream& in, const std::string& name) {
  std::string line;
  if (!std::getline(in, line)) {
    throw ParseError(name, 1, "missing header");
  }
  static const std::string magic = "#moso-coreset v1 ";
  if (line.rfind(magic, 0) != 0) {
    throw ParseError(name, 1, "missing header (expected '#moso-coreset v1')");
  }
  Coreset coreset;
  try {
    const std::string_view tail = std::string_view(line).substr(magic.size());
    coreset.delta = parse_double(header_field(tail, "delta"));
    coreset.method = parse_score_method(header_field(tail, "method"));
    coreset.source_digest = std::string(header_field(tail, "source"));
  } catch (const std::invalid_argument& e) {
    throw ParseError(name, 1, std::string("malformed header: ") + e.what());
  }

  int line_no = 1;
  int prev = -1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') {
      continue;
    }
    try {
      const int id = static_cast<int>(parse_int(line));
      if (id <= prev) {
        throw std::invalid_argument("kept ids must be strictly ascending");
      }
      prev = id;
      coreset.kept_ids.push_back(id);
    } catch (const std::invalid_argument& e) {
      throw ParseError(name, line_no, e.what());
    }
  }
  return coreset;
}

Coreset read_coreset(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot open: " + path);
  }
  return read_coreset(in, path);
}

}  // namespace moso
