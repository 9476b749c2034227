#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "moso/dataset.hpp"
#include "moso/model.hpp"
#include "moso/score_table.hpp"
#include "moso/trainer.hpp"

namespace moso {

/// Which captured checkpoints enter the expectation over training steps.
struct SamplingRule {
  enum class Mode { all_steps, uniform_k, explicit_steps };

  Mode mode = Mode::all_steps;
  int k = 0;                // uniform_k: how many steps, without replacement
  std::uint64_t seed = 0;   // uniform_k only; all_steps ignores it
  std::vector<int> steps;   // explicit_steps: must all be captured

  static SamplingRule all();
  static SamplingRule uniform(int k, std::uint64_t seed);
  static SamplingRule at_steps(std::vector<int> steps);

  std::string describe() const;
};

/// Leave-one-out mean gradient from the full mean: (N*mean - g_z)/(N-1).
/// This identity is what keeps scoring linear in N instead of quadratic.
GradVector loo_mean_gradient(const GradVector& full_mean, const GradVector& g_z,
                             int n);

/// Sample-importance score: mean over sampled checkpoints t of
/// (T/N) * eta_t * <mean gradient of the set without z at w_t, gradient of
/// z at w_t>. Samples whose gradient keeps agreeing with everyone else's
/// score high; harmful samples score negative.
ScoreTable moso_approx(const Dataset& ds, const CheckpointTrace& trace,
                       const SamplingRule& rule, int jobs = 1);

struct ExactScoreOptions {
  int guard_limit = 10000;  // refuse leave-one-out retraining above this N
  int jobs = 1;
};

/// Exact score by brute-force leave-one-out retraining: for each sample z,
/// retrain without z and report how the mean loss on S/z moved relative to
/// the full-set parameters. Costs N retrainings (quadratic overall), hence
/// the guard.
ScoreTable moso_exact(const Dataset& ds, const ModelSpec& spec,
                      const TrainConfig& cfg, const FitResult& full_fit,
                      const ExactScoreOptions& options = {});

/// Mean gradient norm over sampled checkpoints.
ScoreTable grand_score(const Dataset& ds, const CheckpointTrace& trace,
                       const SamplingRule& rule, int jobs = 1);

/// L2 norm of (softmax prediction - one-hot label) at the given params.
ScoreTable el2n_score(const Dataset& ds, const ModelParams& params);

/// I.i.d. uniform(0,1) scores, deterministic per seed.
ScoreTable random_score(const Dataset& ds, std::uint64_t seed);

struct ProbeRow {
  int epochs = 0;
  int total_steps = 0;        // T of the run at this budget
  double mean_abs_error = 0;  // mean |exact - approx| over samples
};

/// Trains at each epoch budget, computes exact and approximate scores with
/// all-steps sampling, and reports the mean absolute gap. Data only; no
/// pass/fail judgement.
std::vector<ProbeRow> approximation_error_probe(
    const Dataset& ds, const ModelSpec& spec, const TrainConfig& base_cfg,
    std::span<const int> epoch_budgets, const ExactScoreOptions& options = {});

}  // namespace moso
