#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "moso/dataset.hpp"
#include "moso/score_table.hpp"
#include "moso/scoring.hpp"
#include "moso/trainer.hpp"

namespace moso {

/// Non-overlapping cover of the dataset ids, stratified by class so every
/// subset mirrors the full label distribution within +-1 per class.
struct PartitionPlan {
  int subsets = 1;              // I
  std::vector<int> assignment;  // sample id -> subset index

  std::vector<int> subset_ids(int subset) const;  // ascending ids
};

PartitionPlan make_partition(const Dataset& ds, int subsets,
                             std::uint64_t seed);

/// Dataset rebuilt from a subset of ids, re-indexed contiguously, with the
/// original ids retained position-by-position.
struct MaterializedDataset {
  Dataset data;
  std::vector<int> original_ids;
};

struct PipelineOptions {
  int jobs = 1;
};

/// Per-subset surrogate training and scoring, merged into one table.
/// Each subset trains its own surrogate (subset-specific init seed when
/// I > 1) and scores its members within the subset; with I = 1 the result
/// is bit-identical to calling the scoring module directly.
/// method must be one of moso_approx, grand, el2n, forgetting, random.
ScoreTable score_pipeline(const Dataset& ds, const ModelSpec& spec,
                          const TrainConfig& cfg, const PartitionPlan& plan,
                          const SamplingRule& rule, ScoreMethod method,
                          const PipelineOptions& options = {});

struct Coreset {
  std::vector<int> kept_ids;  // ascending
  std::string source_digest;
  double delta = 0.0;
  ScoreMethod method = ScoreMethod::random;
};

/// Drops the floor(delta*N) lowest-scored samples; score ties are broken
/// by ascending id (lower id pruned first).
Coreset prune(const Dataset& ds, const ScoreTable& scores, double delta);

/// Rebuilds the kept samples as a fresh dataset; refuses coresets whose
/// source digest does not match.
MaterializedDataset materialize(const Dataset& ds, const Coreset& coreset);

/// Text format: "#moso-coreset v1 delta=<d> method=<tag> source=<digest>"
/// then kept ids ascending, one per line.
std::string serialize_coreset(const Coreset& coreset,
                              const std::vector<std::string>& comments = {});
void write_coreset(const Coreset& coreset, const std::string& path,
                   const std::vector<std::string>& comments = {});
Coreset read_coreset(std::istream& in, const std::string& name);
Coreset read_coreset(const std::string& path);

}  // namespace moso
