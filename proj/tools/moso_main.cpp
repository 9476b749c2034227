// moso: train small classifiers, score every training sample, prune, and
// evaluate the resulting coresets. Subcommands wire the library into
// reproducible file-to-file runs; one --seed fans out to every component.

#include <CLI11.hpp>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "moso/dataset.hpp"
#include "moso/errors.hpp"
#include "moso/eval.hpp"
#include "moso/manifest.hpp"
#include "moso/model.hpp"
#include "moso/pipeline.hpp"
#include "moso/rng.hpp"
#include "moso/scoring.hpp"
#include "moso/text_io.hpp"
#include "moso/trainer.hpp"
#include "moso/version.hpp"

namespace {

using namespace moso;

// Exit codes: 0 ok, 1 runtime failure, 2 usage, 3 guard violation,
// 4 input parse error.
constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;
constexpr int kExitGuard = 3;
constexpr int kExitParse = 4;

struct CommonFlags {
  std::uint64_t seed = 0;
  int jobs = 1;
};

struct TrainFlags {
  std::string model = "logistic";
  int hidden = 16;
  double init_scale = 0.1;
  int epochs = 30;
  int batch = 32;
  std::string schedule = "constant";
  double eta = 0.5;
  int drop_every = 10;
  double factor = 0.5;
  double eta_min = 0.0;
};

void add_common_flags(CLI::App* cmd, CommonFlags& flags) {
  cmd->add_option("--seed", flags.seed, "Global seed; every component seed derives from it");
  cmd->add_option("--jobs", flags.jobs, "Maximum parallel jobs")
      ->check(CLI::PositiveNumber);
}

void add_train_flags(CLI::App* cmd, TrainFlags& flags) {
  cmd->add_option("--model", flags.model, "Classifier kind: logistic | mlp")
      ->check(CLI::IsMember({"logistic", "mlp"}));
  cmd->add_option("--hidden", flags.hidden, "Hidden width (mlp only)")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--init-scale", flags.init_scale,
                  "Half-width of the uniform parameter init");
  cmd->add_option("--epochs", flags.epochs, "Training epochs")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--batch", flags.batch, "Mini-batch size")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--schedule", flags.schedule,
                  "Learning-rate schedule: constant | step | cosine")
      ->check(CLI::IsMember({"constant", "step", "cosine"}));
  cmd->add_option("--eta", flags.eta, "Learning rate (peak rate for cosine)");
  cmd->add_option("--drop-every", flags.drop_every,
                  "step schedule: steps between drops");
  cmd->add_option("--factor", flags.factor, "step schedule: drop factor");
  cmd->add_option("--eta-min", flags.eta_min, "cosine schedule: floor rate");
}

ModelSpec make_spec(const TrainFlags& train, const Dataset& ds,
                    std::uint64_t global_seed) {
  ModelSpec spec;
  spec.kind = parse_model_kind(train.model);
  spec.dim = ds.dim;
  spec.num_classes = ds.num_classes;
  spec.hidden = spec.kind == ModelKind::mlp ? train.hidden : 0;
  spec.init_seed = derive_seed(global_seed, "init");
  spec.init_scale = train.init_scale;
  return spec;
}

TrainConfig make_config(const TrainFlags& train, std::uint64_t global_seed) {
  TrainConfig cfg;
  cfg.epochs = train.epochs;
  cfg.batch_size = train.batch;
  if (train.schedule == "constant") {
    cfg.schedule = Schedule::constant(train.eta);
  } else if (train.schedule == "step") {
    cfg.schedule = Schedule::step(train.eta, train.drop_every, train.factor);
  } else {
    cfg.schedule = Schedule::cosine(train.eta, train.eta_min);
  }
  cfg.shuffle_seed = derive_seed(global_seed, "shuffle");
  cfg.validate();
  return cfg;
}

void manifest_train_flags(RunManifest& manifest, const TrainFlags& train) {
  manifest.add("model", train.model);
  if (train.model == "mlp") {
    manifest.add("hidden", static_cast<long long>(train.hidden));
  }
  manifest.add("init_scale", train.init_scale);
  manifest.add("epochs", static_cast<long long>(train.epochs));
  manifest.add("batch", static_cast<long long>(train.batch));
  manifest.add("schedule", train.schedule);
  manifest.add("eta", train.eta);
  if (train.schedule == "step") {
    manifest.add("drop_every", static_cast<long long>(train.drop_every));
    manifest.add("factor", train.factor);
  }
  if (train.schedule == "cosine") {
    manifest.add("eta_min", train.eta_min);
  }
}

SamplingRule make_rule(int sample_steps, std::uint64_t global_seed) {
  if (sample_steps == 0) {
    return SamplingRule::all();
  }
  return SamplingRule::uniform(sample_steps,
                               derive_seed(global_seed, "sample-steps"));
}

ScoreMethod method_from_cli(const std::string& name) {
  if (name == "moso") {
    return ScoreMethod::moso_approx;
  }
  return parse_score_method(name);
}

// ---- generate ----

struct GenerateArgs {
  CommonFlags common;
  int classes = 2;
  int per_class = 100;
  int dim = 2;
  double spread = 0.3;
  double noise_rate = 0.0;
  double train_fraction = 0.8;
  std::string out;
  std::string train_out;
  std::string test_out;
};

int run_generate(const GenerateArgs& args) {
  if (args.out.empty() && (args.train_out.empty() || args.test_out.empty())) {
    throw CLI::ValidationError(
        "generate needs --out, or both --train-out and --test-out");
  }

  RunManifest manifest;
  manifest.command = "generate";
  manifest.seed = args.common.seed;
  manifest.add("classes", static_cast<long long>(args.classes));
  manifest.add("per_class", static_cast<long long>(args.per_class));
  manifest.add("dim", static_cast<long long>(args.dim));
  manifest.add("spread", args.spread);
  manifest.add("noise_rate", args.noise_rate);

  const Dataset clean =
      generate_blobs(args.classes, args.per_class, args.dim, args.spread,
                     derive_seed(args.common.seed, "blobs"));

  if (!args.train_out.empty()) {
    manifest.add("train_fraction", args.train_fraction);
    const SplitResult parts =
        split(clean, args.train_fraction, derive_seed(args.common.seed, "split"));
    Dataset train = parts.train;
    if (args.noise_rate > 0.0) {
      train = inject_label_noise(
          train, NoiseConfig{args.noise_rate, derive_seed(args.common.seed, "noise")});
    }
    write_dataset(train, args.train_out, {manifest.render() + " role=train"});
    write_dataset(parts.test, args.test_out,
                  {manifest.render() + " role=test"});
    std::cerr << "wrote " << args.train_out << " (N=" << train.size()
              << ") and " << args.test_out << " (N=" << parts.test.size()
              << ")\n";
  }
  if (!args.out.empty()) {
    Dataset full = clean;
    if (args.noise_rate > 0.0) {
      full = inject_label_noise(
          full, NoiseConfig{args.noise_rate, derive_seed(args.common.seed, "noise")});
    }
    write_dataset(full, args.out, {manifest.render() + " role=full"});
    std::cerr << "wrote " << args.out << " (N=" << full.size() << ")\n";
  }
  return kExitOk;
}

// ---- score ----

struct ScoreArgs {
  CommonFlags common;
  TrainFlags train;
  std::string data;
  std::string method = "moso";
  int partitions = 1;
  int sample_steps = 10;
  std::string out;
};

int run_score(const ScoreArgs& args) {
  const Dataset ds = read_dataset(args.data);
  const ModelSpec spec = make_spec(args.train, ds, args.common.seed);
  const TrainConfig cfg = make_config(args.train, args.common.seed);
  const SamplingRule rule = make_rule(args.sample_steps, args.common.seed);
  const PartitionPlan plan = make_partition(
      ds, args.partitions, derive_seed(args.common.seed, "partition"));

  PipelineOptions options;
  options.jobs = args.common.jobs;
  const ScoreTable table = score_pipeline(ds, spec, cfg, plan, rule,
                                          method_from_cli(args.method), options);

  RunManifest manifest;
  manifest.command = "score";
  manifest.seed = args.common.seed;
  manifest.add("data", args.data);
  manifest.add("method", args.method);
  manifest.add("partitions", static_cast<long long>(args.partitions));
  manifest.add("sample_steps", static_cast<long long>(args.sample_steps));
  manifest_train_flags(manifest, args.train);

  write_score_table(table, args.out, {manifest.render()});
  std::cerr << "wrote " << args.out << " (" << table.scores.size()
            << " scores, method=" << to_string(table.method) << ")\n";
  return kExitOk;
}

// ---- prune ----

struct PruneArgs {
  CommonFlags common;
  std::string data;
  std::string scores;
  double delta = 0.3;
  std::string out;
};

int run_prune(const PruneArgs& args) {
  const Dataset ds = read_dataset(args.data);
  const ScoreTable scores = read_score_table(args.scores);
  const Coreset coreset = prune(ds, scores, args.delta);

  RunManifest manifest;
  manifest.command = "prune";
  manifest.seed = args.common.seed;
  manifest.add("data", args.data);
  manifest.add("scores", args.scores);
  manifest.add("delta", args.delta);

  write_coreset(coreset, args.out, {manifest.render()});
  std::cerr << "wrote " << args.out << " (kept " << coreset.kept_ids.size()
            << " of " << ds.size() << ")\n";
  return kExitOk;
}

// ---- eval ----

struct EvalArgs {
  CommonFlags common;
  TrainFlags train;
  std::string data;
  std::string coreset;
  std::string test;
  std::string scores;
  double bottom_fraction = 0.2;
  int repeats = 1;
  std::string out;
};

int run_eval(const EvalArgs& args) {
  const Dataset train_ds = read_dataset(args.data);
  const Dataset test_ds = read_dataset(args.test);
  const Coreset coreset = read_coreset(args.coreset);
  const ModelSpec spec = make_spec(args.train, train_ds, args.common.seed);
  const TrainConfig cfg = make_config(args.train, args.common.seed);

  const PruneReport report =
      evaluate_coreset(train_ds, coreset, test_ds, spec, cfg, args.repeats,
                       args.common.jobs);

  RunManifest manifest;
  manifest.command = "eval";
  manifest.seed = args.common.seed;
  manifest.add("data", args.data);
  manifest.add("coreset", args.coreset);
  manifest.add("test", args.test);
  manifest.add("repeats", static_cast<long long>(args.repeats));
  manifest_train_flags(manifest, args.train);

  if (!args.scores.empty()) {
    const ScoreTable scores = read_score_table(args.scores);
    const NoiseDetectReport noise =
        noise_detection(scores, train_ds, args.bottom_fraction);
    manifest.add("scores", args.scores);
    manifest.add("bottom_fraction", args.bottom_fraction);
    write_report(report, args.out, {manifest.render()}, &noise);
  } else {
    write_report(report, args.out, {manifest.render()});
  }
  std::cerr << "wrote " << args.out
            << " (accuracy_mean=" << format_double(report.accuracy_mean)
            << ", train=" << format_double(report.train_seconds) << "s)\n";
  return kExitOk;
}

// ---- compare ----

struct CompareArgs {
  CommonFlags common;
  TrainFlags train;
  std::string data;
  std::string test;
  std::vector<std::string> methods{"moso", "random"};
  std::vector<double> deltas{0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8};
  int partitions = 1;
  int sample_steps = 10;
  int repeats = 3;
  std::string out;
};

int run_compare(const CompareArgs& args) {
  const Dataset train_ds = read_dataset(args.data);
  const Dataset test_ds = read_dataset(args.test);
  const ModelSpec spec = make_spec(args.train, train_ds, args.common.seed);
  const TrainConfig cfg = make_config(args.train, args.common.seed);
  const SamplingRule rule = make_rule(args.sample_steps, args.common.seed);
  const PartitionPlan plan = make_partition(
      train_ds, args.partitions, derive_seed(args.common.seed, "partition"));
  PipelineOptions options;
  options.jobs = args.common.jobs;

  std::vector<PlotCell> cells;
  for (const std::string& method_name : args.methods) {
    const ScoreMethod method = method_from_cli(method_name);
    ScoreTable scores;
    bool scored = false;
    try {
      scores = score_pipeline(train_ds, spec, cfg, plan, rule, method, options);
      scored = true;
    } catch (const std::exception& e) {
      std::cerr << "scoring failed for " << method_name << ": " << e.what()
                << "\n";
    }
    for (double delta : args.deltas) {
      std::vector<PlotCell> arm(static_cast<std::size_t>(args.repeats));
      bool ok = scored;
      PruneReport report;
      if (scored) {
        try {
          const Coreset coreset = prune(train_ds, scores, delta);
          report = evaluate_coreset(train_ds, coreset, test_ds, spec, cfg,
                                    args.repeats, args.common.jobs);
        } catch (const std::exception& e) {
          std::cerr << "evaluation failed for " << method_name
                    << " delta=" << format_double(delta) << ": " << e.what()
                    << "\n";
          ok = false;
        }
      }
      for (int r = 0; r < args.repeats; ++r) {
        PlotCell& cell = arm[static_cast<std::size_t>(r)];
        cell.method = method;
        cell.delta = delta;
        cell.valid = ok;
        if (ok) {
          cell.seed = report.seeds[static_cast<std::size_t>(r)];
          cell.accuracy =
              report.per_repeat_accuracy[static_cast<std::size_t>(r)];
        }
      }
      cells.insert(cells.end(), arm.begin(), arm.end());
    }
  }

  RunManifest manifest;
  manifest.command = "compare";
  manifest.seed = args.common.seed;
  manifest.add("data", args.data);
  manifest.add("test", args.test);
  std::string methods_joined;
  for (const auto& m : args.methods) {
    methods_joined += methods_joined.empty() ? m : "," + m;
  }
  manifest.add("methods", methods_joined);
  std::string deltas_joined;
  for (double d : args.deltas) {
    deltas_joined += (deltas_joined.empty() ? "" : ",") + format_double(d);
  }
  manifest.add("deltas", deltas_joined);
  manifest.add("partitions", static_cast<long long>(args.partitions));
  manifest.add("sample_steps", static_cast<long long>(args.sample_steps));
  manifest.add("repeats", static_cast<long long>(args.repeats));
  manifest_train_flags(manifest, args.train);

  write_plot_data(cells, args.out, {manifest.render()});
  std::cerr << "wrote " << args.out << " (" << cells.size() << " cells)\n";
  return kExitOk;
}

// ---- oracle ----

struct OracleArgs {
  CommonFlags common;
  TrainFlags train;
  std::string data;
  int max_exact_n = 10000;
  std::vector<int> probe_epochs;
  std::string out_exact;
  std::string out_approx;
  std::string out;
};

int run_oracle(const OracleArgs& args) {
  const Dataset ds = read_dataset(args.data);
  const ModelSpec spec = make_spec(args.train, ds, args.common.seed);
  const TrainConfig cfg = make_config(args.train, args.common.seed);

  ExactScoreOptions options;
  options.guard_limit = args.max_exact_n;
  options.jobs = args.common.jobs;

  const FitResult full = fit(ds, spec, cfg, CaptureRule::all());
  const ScoreTable exact = moso_exact(ds, spec, cfg, full, options);
  const ScoreTable approx =
      moso_approx(ds, full.trace, SamplingRule::all(), args.common.jobs);
  const double rho = spearman(exact, approx);

  double gap = 0.0;
  for (std::size_t i = 0; i < exact.scores.size(); ++i) {
    gap += std::abs(exact.scores[i] - approx.scores[i]);
  }
  gap /= static_cast<double>(exact.scores.size());

  RunManifest manifest;
  manifest.command = "oracle";
  manifest.seed = args.common.seed;
  manifest.add("data", args.data);
  manifest.add("max_exact_n", static_cast<long long>(args.max_exact_n));
  manifest_train_flags(manifest, args.train);

  write_score_table(exact, args.out_exact, {manifest.render()});
  write_score_table(approx, args.out_approx, {manifest.render()});

  std::string summary = "#moso-report v1\n";
  summary += "#" + manifest.render() + "\n";
  summary += "n=" + std::to_string(ds.size()) + "\n";
  summary += "total_steps=" + std::to_string(full.trace.total_steps) + "\n";
  summary += "spearman=" + format_double(rho) + "\n";
  summary += "mean_abs_gap=" + format_double(gap) + "\n";
  if (!args.probe_epochs.empty()) {
    const auto rows = approximation_error_probe(
        ds, spec, cfg, args.probe_epochs, options);
    summary += "probe_rows=" + std::to_string(rows.size()) + "\n";
    for (std::size_t i = 0; i < rows.size(); ++i) {
      summary += "probe_epochs_" + std::to_string(i) + "=" +
                 std::to_string(rows[i].epochs) + "\n";
      summary += "probe_steps_" + std::to_string(i) + "=" +
                 std::to_string(rows[i].total_steps) + "\n";
      summary += "probe_error_" + std::to_string(i) + "=" +
                 format_double(rows[i].mean_abs_error) + "\n";
    }
  }
  std::ofstream out(args.out);
  if (!out) {
    throw std::runtime_error("cannot open for writing: " + args.out);
  }
  out << summary;
  std::cerr << "wrote " << args.out << " (spearman=" << format_double(rho)
            << ")\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"moso: sample scoring, data pruning, and coreset evaluation"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  GenerateArgs gen;
  CLI::App* generate = app.add_subcommand(
      "generate", "Write a synthetic blob dataset (optionally noisy/split)");
  add_common_flags(generate, gen.common);
  generate->add_option("--classes", gen.classes)->check(CLI::PositiveNumber);
  generate->add_option("--per-class", gen.per_class)->check(CLI::PositiveNumber);
  generate->add_option("--dim", gen.dim)->check(CLI::PositiveNumber);
  generate->add_option("--spread", gen.spread, "Cluster standard deviation");
  generate->add_option("--noise-rate", gen.noise_rate,
                       "Symmetric label-noise rate in [0,1]");
  generate->add_option("--train-fraction", gen.train_fraction);
  generate->add_option("--out", gen.out, "Full dataset output path");
  generate->add_option("--train-out", gen.train_out);
  generate->add_option("--test-out", gen.test_out);

  ScoreArgs score;
  CLI::App* score_cmd =
      app.add_subcommand("score", "Score every sample of a dataset");
  add_common_flags(score_cmd, score.common);
  add_train_flags(score_cmd, score.train);
  score_cmd->add_option("--data", score.data)->required();
  score_cmd->add_option("--method", score.method,
                        "moso | grand | el2n | forgetting | random")
      ->check(CLI::IsMember({"moso", "grand", "el2n", "forgetting", "random"}));
  score_cmd->add_option("--partitions", score.partitions,
                        "Split into I subsets scored independently")
      ->check(CLI::PositiveNumber);
  score_cmd->add_option("--sample-steps", score.sample_steps,
                        "Checkpoints sampled for the expectation (0 = all)")
      ->check(CLI::NonNegativeNumber);
  score_cmd->add_option("--out", score.out)->required();

  PruneArgs prune_args;
  CLI::App* prune_cmd =
      app.add_subcommand("prune", "Drop the lowest-scored fraction");
  add_common_flags(prune_cmd, prune_args.common);
  prune_cmd->add_option("--data", prune_args.data)->required();
  prune_cmd->add_option("--scores", prune_args.scores)->required();
  prune_cmd->add_option("--delta", prune_args.delta, "Pruning ratio in [0,1)");
  prune_cmd->add_option("--out", prune_args.out)->required();

  EvalArgs eval;
  CLI::App* eval_cmd = app.add_subcommand(
      "eval", "Retrain on a coreset and report held-out accuracy");
  add_common_flags(eval_cmd, eval.common);
  add_train_flags(eval_cmd, eval.train);
  eval_cmd->add_option("--data", eval.data)->required();
  eval_cmd->add_option("--coreset", eval.coreset)->required();
  eval_cmd->add_option("--test", eval.test)->required();
  eval_cmd->add_option("--scores", eval.scores,
                       "Optional score file for noise-recall reporting");
  eval_cmd->add_option("--bottom-fraction", eval.bottom_fraction);
  eval_cmd->add_option("--repeats", eval.repeats)->check(CLI::PositiveNumber);
  eval_cmd->add_option("--out", eval.out)->required();

  CompareArgs compare;
  CLI::App* compare_cmd = app.add_subcommand(
      "compare", "Sweep methods x pruning ratios into a plot-data grid");
  add_common_flags(compare_cmd, compare.common);
  add_train_flags(compare_cmd, compare.train);
  compare_cmd->add_option("--data", compare.data)->required();
  compare_cmd->add_option("--test", compare.test)->required();
  compare_cmd->add_option("--methods", compare.methods)->delimiter(',');
  compare_cmd->add_option("--deltas", compare.deltas)->delimiter(',');
  compare_cmd->add_option("--partitions", compare.partitions)
      ->check(CLI::PositiveNumber);
  compare_cmd->add_option("--sample-steps", compare.sample_steps)
      ->check(CLI::NonNegativeNumber);
  compare_cmd->add_option("--repeats", compare.repeats)
      ->check(CLI::PositiveNumber);
  compare_cmd->add_option("--out", compare.out)->required();

  OracleArgs oracle;
  CLI::App* oracle_cmd = app.add_subcommand(
      "oracle",
      "Exact leave-one-out scores vs the approximator, with agreement stats");
  add_common_flags(oracle_cmd, oracle.common);
  add_train_flags(oracle_cmd, oracle.train);
  oracle_cmd->add_option("--data", oracle.data)->required();
  oracle_cmd->add_option("--max-exact-n", oracle.max_exact_n,
                         "Refuse exact scoring above this N");
  oracle_cmd->add_option("--probe-epochs", oracle.probe_epochs,
                         "Also probe the exact/approx gap at these budgets")
      ->delimiter(',');
  oracle_cmd->add_option("--out-exact", oracle.out_exact)->required();
  oracle_cmd->add_option("--out-approx", oracle.out_approx)->required();
  oracle_cmd->add_option("--out", oracle.out, "Agreement summary path")
      ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n";
    std::cerr << app.help() << "\n";
    return kExitUsage;
  }

  try {
    if (generate->parsed()) {
      return run_generate(gen);
    }
    if (score_cmd->parsed()) {
      return run_score(score);
    }
    if (prune_cmd->parsed()) {
      return run_prune(prune_args);
    }
    if (eval_cmd->parsed()) {
      return run_eval(eval);
    }
    if (compare_cmd->parsed()) {
      return run_compare(compare);
    }
    if (oracle_cmd->parsed()) {
      return run_oracle(oracle);
    }
  } catch (const CLI::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const GuardError& e) {
    std::cerr << "guard: " << e.what() << "\n";
    return kExitGuard;
  } catch (const ParseError& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return kExitParse;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitUsage;
}
