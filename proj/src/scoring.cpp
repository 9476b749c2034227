#include "moso/scoring.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

#include "moso/errors.hpp"
#include "moso/parallel.hpp"
#include "moso/rng.hpp"
#include "moso/text_io.hpp"

namespace moso {

SamplingRule SamplingRule::all() { return SamplingRule{}; }

SamplingRule SamplingRule::uniform(int k, std::uint64_t seed) {
  if (k < 1) {
    throw std::invalid_argument("sampling rule: k must be >= 1");
  }
  SamplingRule rule;
  rule.mode = Mode::uniform_k;
  rule.k = k;
  rule.seed = seed;
  return rule;
}

SamplingRule SamplingRule::at_steps(std::vector<int> steps) {
  std::sort(steps.begin(), steps.end());
  SamplingRule rule;
  rule.mode = Mode::explicit_steps;
  rule.steps = std::move(steps);
  return rule;
}

std::string SamplingRule::describe() const {
  switch (mode) {
    case Mode::all_steps:
      return "steps=all";
    case Mode::uniform_k:
      return "steps=k" + std::to_string(k) +
             ";sample_seed=" + std::to_string(seed);
    case Mode::explicit_steps: {
      std::string out = "steps=explicit";
      for (int s : steps) {
        out += ":" + std::to_string(s);
      }
      return out;
    }
  }
  throw std::logic_error("unreachable sampling mode");
}

namespace {

// Indices into trace.entries selected by the rule, ascending so score
// accumulation order is fixed.
std::vector<int> select_entries(const CheckpointTrace& trace,
                                const SamplingRule& rule) {
  const int count = static_cast<int>(trace.entries.size());
  if (count == 0) {
    throw std::invalid_argument("scoring: trace has no captured checkpoints");
  }
  switch (rule.mode) {
    case SamplingRule::Mode::all_steps: {
      std::vector<int> all(static_cast<std::size_t>(count));
      std::iota(all.begin(), all.end(), 0);
      return all;
    }
    case SamplingRule::Mode::uniform_k: {
      if (rule.k > count) {
        throw std::invalid_argument(
            "sampling rule requests " + std::to_string(rule.k) +
            " steps but the trace captures only " + std::to_string(count));
      }
      std::vector<int> order(static_cast<std::size_t>(count));
      std::iota(order.begin(), order.end(), 0);
      Rng rng(rule.seed);
      rng.shuffle(order);  // without replacement
      order.resize(static_cast<std::size_t>(rule.k));
      std::sort(order.begin(), order.end());
      return order;
    }
    case SamplingRule::Mode::explicit_steps: {
      std::vector<int> selected;
      selected.reserve(rule.steps.size());
      for (int step : rule.steps) {
        const auto it = std::find_if(
            trace.entries.begin(), trace.entries.end(),
            [step](const TraceEntry& e) { return e.step == step; });
        if (it == trace.entries.end()) {
          throw std::invalid_argument("sampled step " + std::to_string(step) +
                                      " is not captured in the trace");
        }
        selected.push_back(
            static_cast<int>(std::distance(trace.entries.begin(), it)));
      }
      return selected;
    }
  }
  throw std::logic_error("unreachable sampling mode");
}

void check_trace_matches(const Dataset& ds, const CheckpointTrace& trace) {
  if (trace.dataset_size != ds.size()) {
    throw std::invalid_argument(
        "scoring: trace was captured on N=" +
        std::to_string(trace.dataset_size) + " but the dataset has N=" +
        std::to_string(ds.size()));
  }
}

}  // namespace

GradVector loo_mean_gradient(const GradVector& full_mean, const GradVector& g_z,
                             int n) {
  if (n < 2) {
    throw std::invalid_argument("loo_mean_gradient: need N >= 2");
  }
  if (full_mean.size() != g_z.size()) {
    throw std::invalid_argument("loo_mean_gradient: size mismatch");
  }
  GradVector out(full_mean.size());
  const double dn = static_cast<double>(n);
  const double inv = 1.0 / (dn - 1.0);
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = (dn * full_mean[i] - g_z[i]) * inv;
  }
  return out;
}

ScoreTable moso_approx(const Dataset& ds, const CheckpointTrace& trace,
                       const SamplingRule& rule, int jobs) {
  check_trace_matches(ds, trace);
  const int n = ds.size();
  if (n < 2) {
    throw std::invalid_argument("moso_approx: need N >= 2");
  }
  const std::vector<int> selected = select_entries(trace, rule);
  const std::vector<int> everyone = all_indices(ds);

  ScoreTable table;
  table.method = ScoreMethod::moso_approx;
  table.config_digest = rule.describe();
  table.scores.assign(static_cast<std::size_t>(n), 0.0);

  for (int entry_index : selected) {
    const TraceEntry& entry =
        trace.entries[static_cast<std::size_t>(entry_index)];
    // One full-set mean gradient per checkpoint, shared by every sample.
    const GradVector full_mean = grad_mean(entry.params, ds, everyone);
    const double coef = static_cast<double>(trace.total_steps) /
                        static_cast<double>(n) * entry.eta;
    parallel_for(n, jobs, [&](int i) {
      const GradVector g =
          grad_sample(entry.params, ds.samples[static_cast<std::size_t>(i)]);
      const GradVector rest = loo_mean_gradient(full_mean, g, n);
      table.scores[static_cast<std::size_t>(i)] += coef * dot(rest, g);
    });
  }

  const double inv = 1.0 / static_cast<double>(selected.size());
  for (double& s : table.scores) {
    s *= inv;
  }
  return table;
}

ScoreTable moso_exact(const Dataset& ds, const ModelSpec& spec,
                      const TrainConfig& cfg, const FitResult& full_fit,
                      const ExactScoreOptions& options) {
  const int n = ds.size();
  if (n < 2) {
    throw std::invalid_argument("moso_exact: need N >= 2");
  }
  if (n > options.guard_limit) {
    throw GuardError(
        "moso_exact: refusing leave-one-out retraining for N=" +
        std::to_string(n) + " > " + std::to_string(options.guard_limit) +
        "; exact scoring costs O(T*n^2) (one full retraining per sample)");
  }
  check_trace_matches(ds, full_fit.trace);

  ScoreTable table;
  table.method = ScoreMethod::moso_exact;
  table.config_digest = "loo;epochs=" + std::to_string(cfg.epochs) +
                        ";batch=" + std::to_string(cfg.batch_size) +
                        ";schedule=" + cfg.schedule.describe();
  table.scores.assign(static_cast<std::size_t>(n), 0.0);

  const ModelParams& full_params = full_fit.final_params;
  parallel_for(n, options.jobs, [&](int z) {
    std::vector<int> rest;
    rest.reserve(static_cast<std::size_t>(n - 1));
    for (int i = 0; i < n; ++i) {
      if (i != z) {
        rest.push_back(i);
      }
    }
    const ModelParams without = retrain_without(ds, z, spec, cfg);
    table.scores[static_cast<std::size_t>(z)] =
        mean_loss(without, ds, rest) - mean_loss(full_params, ds, rest);
  });
  return table;
}

ScoreTable grand_score(const Dataset& ds, const CheckpointTrace& trace,
                       const SamplingRule& rule, int jobs) {
  check_trace_matches(ds, trace);
  const int n = ds.size();
  const std::vector<int> selected = select_entries(trace, rule);

  ScoreTable table;
  table.method = ScoreMethod::grand;
  table.config_digest = rule.describe();
  table.scores.assign(static_cast<std::size_t>(n), 0.0);

  for (int entry_index : selected) {
    const TraceEntry& entry =
        trace.entries[static_cast<std::size_t>(entry_index)];
    parallel_for(n, jobs, [&](int i) {
      const GradVector g =
          grad_sample(entry.params, ds.samples[static_cast<std::size_t>(i)]);
      table.scores[static_cast<std::size_t>(i)] += l2_norm(g);
    });
  }
  const double inv = 1.0 / static_cast<double>(selected.size());
  for (double& s : table.scores) {
    s *= inv;
  }
  return table;
}

ScoreTable el2n_score(const Dataset& ds, const ModelParams& params) {
  if (params.spec.dim != ds.dim || params.spec.num_classes != ds.num_classes) {
    throw std::invalid_argument("el2n_score: params do not match dataset");
  }
  ScoreTable table;
  table.method = ScoreMethod::el2n;
  table.config_digest = "final_params";
  table.scores.reserve(ds.samples.size());
  for (const Sample& s : ds.samples) {
    std::vector<double> err = forward(params, s.features);
    err[static_cast<std::size_t>(s.label)] -= 1.0;
    table.scores.push_back(l2_norm(err));
  }
  return table;
}

ScoreTable random_score(const Dataset& ds, std::uint64_t seed) {
  ScoreTable table;
  table.method = ScoreMethod::random;
  table.config_digest = "seed=" + std::to_string(seed);
  table.scores.reserve(ds.samples.size());
  Rng rng(seed);
  for (int i = 0; i < ds.size(); ++i) {
    table.scores.push_back(rng.uniform_open());
  }
  return table;
}

std::vector<ProbeRow> approximation_error_probe(
    const Dataset& ds, const ModelSpec& spec, const TrainConfig& base_cfg,
    std::span<const int> epoch_budgets, const ExactScoreOptions& options) {
  std::vector<ProbeRow> rows;
  rows.reserve(epoch_budgets.size());
  for (int epochs : epoch_budgets) {
    TrainConfig cfg = base_cfg;
    cfg.epochs = epochs;
    const FitResult full = fit(ds, spec, cfg, CaptureRule::all());
    const ScoreTable exact = moso_exact(ds, spec, cfg, full, options);
    const ScoreTable approx =
        moso_approx(ds, full.trace, SamplingRule::all(), options.jobs);

    double err = 0.0;
    for (std::size_t i = 0; i < exact.scores.size(); ++i) {
      err += std::abs(exact.scores[i] - approx.scores[i]);
    }
    err /= static_cast<double>(exact.scores.size());
    rows.push_back(ProbeRow{epochs, full.trace.total_steps, err});
  }
  return rows;
}

}  // namespace moso
