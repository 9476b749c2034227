#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "moso/dataset.hpp"
#include "moso/pipeline.hpp"
#include "moso/score_table.hpp"
#include "moso/trainer.hpp"

namespace moso {

/// Outcome of retraining on a coreset and measuring held-out accuracy.
/// Runtimes are tracked in memory for logging but never serialized: output
/// files must be a pure function of their run manifest.
struct PruneReport {
  ScoreMethod method = ScoreMethod::random;
  double delta = 0.0;
  int coreset_size = 0;
  double accuracy_mean = 0.0;
  std::vector<double> per_repeat_accuracy;
  std::vector<double> per_class_accuracy;  // length K, mean over repeats
  std::vector<std::uint64_t> seeds;        // per-repeat init seeds
  double train_seconds = 0.0;
  double eval_seconds = 0.0;
};

bool report_fields_equal(const PruneReport& a, const PruneReport& b);

/// Retrains on the materialized coreset `repeats` times with derived
/// per-repeat seeds and reports mean top-1 accuracy on the test set.
/// Everything except the training data matches a full-set run, so delta=0
/// reproduces full-set results bit-exactly.
PruneReport evaluate_coreset(const Dataset& train, const Coreset& coreset,
                             const Dataset& test, const ModelSpec& spec,
                             const TrainConfig& cfg, int repeats,
                             int jobs = 1);

/// Spearman rank correlation with average ranks for ties. NaN when either
/// side has zero rank variance.
double spearman(std::span<const double> a, std::span<const double> b);
double spearman(const ScoreTable& a, const ScoreTable& b);

struct NoiseDetectReport {
  double noise_rate = 0.0;       // fraction of samples flagged noisy
  double bottom_fraction = 0.0;  // fraction of lowest scores examined
  double recall = 0.0;           // noisy samples found there / noisy total
  double random_baseline = 0.0;  // = bottom_fraction
  bool applicable = true;        // false when the dataset has no noisy flags
};

/// How many of the injector-flagged samples sit in the bottom scores.
NoiseDetectReport noise_detection(const ScoreTable& scores, const Dataset& ds,
                                  double bottom_fraction);

/// Report file: "#moso-report v1" header then key=value lines.
std::string serialize_report(const PruneReport& report,
                             const std::vector<std::string>& comments = {},
                             const NoiseDetectReport* noise = nullptr);
void write_report(const PruneReport& report, const std::string& path,
                  const std::vector<std::string>& comments = {},
                  const NoiseDetectReport* noise = nullptr);
PruneReport read_report(std::istream& in, const std::string& name);
PruneReport read_report(const std::string& path);

/// One accuracy measurement in a methods-by-ratios sweep. Cells from
/// failed runs stay present with valid=false and serialize as "null".
struct PlotCell {
  ScoreMethod method = ScoreMethod::random;
  double delta = 0.0;
  std::uint64_t seed = 0;
  double accuracy = 0.0;
  bool valid = true;
};

/// CSV grid "method,delta,seed,accuracy".
std::string serialize_plot_data(std::span<const PlotCell> cells,
                                const std::vector<std::string>& comments = {});
void write_plot_data(std::span<const PlotCell> cells, const std::string& path,
                     const std::vector<std::string>& comments = {});

}  // namespace moso
