#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "moso/dataset.hpp"
#include "moso/model.hpp"
#include "moso/score_table.hpp"

namespace moso {

/// Per-step learning rate. Steps are 1-based; total_steps is T.
struct Schedule {
  enum class Kind { constant, step, cosine };

  Kind kind = Kind::constant;
  double eta = 0.1;      // constant rate / step base rate / cosine peak
  int drop_every = 0;    // step: multiply by factor every this many steps
  double factor = 0.1;   // step
  double eta_min = 0.0;  // cosine floor

  static Schedule constant(double eta);
  static Schedule step(double eta, int drop_every, double factor);
  static Schedule cosine(double eta_max, double eta_min);

  double rate_at(int step, int total_steps) const;
  void validate() const;
  std::string describe() const;
};

struct TrainConfig {
  int epochs = 30;
  int batch_size = 32;  // clamped to N when larger
  Schedule schedule;
  std::uint64_t shuffle_seed = 0;

  void validate() const;
};

/// Which steps of a run get a parameter snapshot.
struct CaptureRule {
  enum class Kind { all_steps, every_k, explicit_steps };

  Kind kind = Kind::all_steps;
  int k = 1;
  std::vector<int> steps;  // sorted, used by explicit_steps

  static CaptureRule all();
  static CaptureRule every(int k);
  static CaptureRule at_steps(std::vector<int> steps);
  static CaptureRule none();

  bool captures(int step) const;
};

struct TraceEntry {
  int step = 0;  // t in [1, T], snapshot taken after the update at t
  double eta = 0.0;
  ModelParams params;
};

/// Ordered (t, eta_t, w_t) snapshots from one SGD run.
struct CheckpointTrace {
  std::vector<TraceEntry> entries;
  int total_steps = 0;   // T = epochs * ceil(N / batch)
  int dataset_size = 0;  // N at capture time
};

struct FitResult {
  ModelParams final_params;
  CheckpointTrace trace;
  // correctness_history[i][e]: prediction for sample i correct at the end
  // of epoch e. Feeds the forgetting score.
  std::vector<std::vector<bool>> correctness_history;
};

int steps_per_epoch(int n, int batch_size);
int total_steps(const TrainConfig& cfg, int n);

/// Deterministic batch order for one epoch: the base indices are shuffled
/// with a seed derived from (shuffle_seed, epoch) and cut into consecutive
/// chunks; the last short chunk is kept. Exposed so tests and scoring can
/// reconstruct B_t exactly.
std::vector<std::vector<int>> batch_plan(const TrainConfig& cfg,
                                         std::span<const int> base_indices,
                                         int epoch);

/// Plain mini-batch SGD: w_t = w_{t-1} - eta_t * grad_mean(B_t, w_{t-1}).
/// Bit-identical reruns for equal inputs.
FitResult fit(const Dataset& ds, const ModelSpec& spec, const TrainConfig& cfg,
              const CaptureRule& capture);

/// Retrains from the same init_seed and shuffle_seed with one sample left
/// out (shuffles regenerated over the remaining N-1 indices). Returns the
/// final parameters only.
ModelParams retrain_without(const Dataset& ds, int excluded_id,
                            const ModelSpec& spec, const TrainConfig& cfg);

/// score[i] = number of epoch transitions where sample i goes from
/// correctly to incorrectly predicted. Samples never predicted correctly
/// score the full epoch count (ranked hardest).
ScoreTable forgetting_counts(const FitResult& result);

/// Text format: "#moso-trace v1 T=<T> N=<N> count=<entries>" then per entry
/// a "t=<t> eta=<eta>" line followed by a params block.
std::string serialize_trace(const CheckpointTrace& trace);
void write_trace(const CheckpointTrace& trace, const std::string& path);
CheckpointTrace read_trace(std::istream& in, const std::string& name);
CheckpointTrace read_trace(const std::string& path);

/// Canonical text dump (trace + final params + history) used for
/// determinism checks.
std::string serialize_fit_result(const FitResult& result);

}  // namespace moso
