#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "moso/dataset.hpp"
#include "moso/errors.hpp"
#include "moso/eval.hpp"
#include "moso/model.hpp"
#include "moso/pipeline.hpp"
#include "moso/rng.hpp"
#include "moso/scoring.hpp"
#include "moso/trainer.hpp"
#include "moso/version.hpp"

namespace py = pybind11;
using namespace moso;

PYBIND11_MODULE(_moso, m) {
  m.doc() =
      "Sample scoring and data pruning for small classifiers: exact "
      "leave-one-out scores, their gradient-based approximator, "
      "difficulty baselines, and coreset evaluation.";
  m.attr("__version__") = kVersion;

  py::register_exception<GuardError>(m, "GuardError", PyExc_RuntimeError);
  py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);

  // ---- data ----
  py::class_<Sample>(m, "Sample")
      .def(py::init<>())
      .def_readwrite("id", &Sample::id)
      .def_readwrite("features", &Sample::features)
      .def_readwrite("label", &Sample::label)
      .def_readwrite("noisy", &Sample::noisy)
      .def("__eq__", [](const Sample& a, const Sample& b) { return a == b; });

  py::class_<Dataset>(m, "Dataset")
      .def(py::init<>())
      .def_readwrite("dim", &Dataset::dim)
      .def_readwrite("num_classes", &Dataset::num_classes)
      .def_readwrite("samples", &Dataset::samples)
      .def("__len__", &Dataset::size)
      .def("validate", &Dataset::validate)
      .def("__eq__",
           [](const Dataset& a, const Dataset& b) { return a == b; });

  m.def("generate_blobs", &generate_blobs, py::arg("num_classes"),
        py::arg("per_class"), py::arg("dim"), py::arg("spread"),
        py::arg("seed"),
        "Gaussian class clusters with deterministically separated means.");
  m.def(
      "inject_label_noise",
      [](const Dataset& ds, double rate, std::uint64_t seed) {
        return inject_label_noise(ds, NoiseConfig{rate, seed});
      },
      py::arg("ds"), py::arg("rate"), py::arg("seed"),
      "Redraw round(rate*N) labels uniformly over all classes.");

  py::class_<SplitResult>(m, "SplitResult")
      .def_readonly("train", &SplitResult::train)
      .def_readonly("test", &SplitResult::test)
      .def_readonly("train_original_ids", &SplitResult::train_original_ids)
      .def_readonly("test_original_ids", &SplitResult::test_original_ids);
  m.def("split", &split, py::arg("ds"), py::arg("train_fraction"),
        py::arg("seed"));

  m.def("write_dataset", &write_dataset, py::arg("ds"), py::arg("path"),
        py::arg("comments") = std::vector<std::string>{});
  m.def("read_dataset",
        py::overload_cast<const std::string&>(&read_dataset), py::arg("path"));
  m.def("dataset_digest", &dataset_digest, py::arg("ds"));

  // ---- model ----
  py::enum_<ModelKind>(m, "ModelKind")
      .value("logistic", ModelKind::logistic)
      .value("mlp", ModelKind::mlp);

  py::class_<ModelSpec>(m, "ModelSpec")
      .def(py::init([](ModelKind kind, int dim, int num_classes, int hidden,
                       std::uint64_t init_seed, double init_scale) {
             ModelSpec spec;
             spec.kind = kind;
             spec.dim = dim;
             spec.num_classes = num_classes;
             spec.hidden = hidden;
             spec.init_seed = init_seed;
             spec.init_scale = init_scale;
             spec.validate();
             return spec;
           }),
           py::arg("kind"), py::arg("dim"), py::arg("num_classes"),
           py::arg("hidden") = 0, py::arg("init_seed") = 0,
           py::arg("init_scale") = 0.1)
      .def_readwrite("kind", &ModelSpec::kind)
      .def_readwrite("dim", &ModelSpec::dim)
      .def_readwrite("num_classes", &ModelSpec::num_classes)
      .def_readwrite("hidden", &ModelSpec::hidden)
      .def_readwrite("init_seed", &ModelSpec::init_seed)
      .def_readwrite("init_scale", &ModelSpec::init_scale)
      .def("param_count", &ModelSpec::param_count);

  py::class_<ModelParams>(m, "ModelParams")
      .def_readonly("spec", &ModelParams::spec)
      .def_readonly("theta", &ModelParams::theta);

  m.def("init_params", &init_params, py::arg("spec"));
  m.def(
      "forward",
      [](const ModelParams& params, const std::vector<double>& x) {
        return forward(params, x);
      },
      py::arg("params"), py::arg("features"));
  m.def(
      "predict",
      [](const ModelParams& params, const std::vector<double>& x) {
        return predict(params, x);
      },
      py::arg("params"), py::arg("features"));
  m.def("loss", &loss, py::arg("params"), py::arg("sample"));
  m.def(
      "mean_loss",
      [](const ModelParams& params, const Dataset& ds,
         const std::vector<int>& indices) {
        return mean_loss(params, ds, indices);
      },
      py::arg("params"), py::arg("ds"), py::arg("indices"));
  m.def("grad_sample", &grad_sample, py::arg("params"), py::arg("sample"));
  m.def(
      "grad_mean",
      [](const ModelParams& params, const Dataset& ds,
         const std::vector<int>& indices) {
        return grad_mean(params, ds, indices);
      },
      py::arg("params"), py::arg("ds"), py::arg("indices"));

  // ---- trainer ----
  py::class_<Schedule>(m, "Schedule")
      .def_static("constant", &Schedule::constant, py::arg("eta"))
      .def_static("step", &Schedule::step, py::arg("eta"),
                  py::arg("drop_every"), py::arg("factor"))
      .def_static("cosine", &Schedule::cosine, py::arg("eta_max"),
                  py::arg("eta_min"))
      .def("rate_at", &Schedule::rate_at, py::arg("step"),
           py::arg("total_steps"));

  py::class_<TrainConfig>(m, "TrainConfig")
      .def(py::init([](int epochs, int batch_size, const Schedule& schedule,
                       std::uint64_t shuffle_seed) {
             TrainConfig cfg;
             cfg.epochs = epochs;
             cfg.batch_size = batch_size;
             cfg.schedule = schedule;
             cfg.shuffle_seed = shuffle_seed;
             cfg.validate();
             return cfg;
           }),
           py::arg("epochs") = 30, py::arg("batch_size") = 32,
           py::arg("schedule") = Schedule::constant(0.5),
           py::arg("shuffle_seed") = 0)
      .def_readwrite("epochs", &TrainConfig::epochs)
      .def_readwrite("batch_size", &TrainConfig::batch_size)
      .def_readwrite("schedule", &TrainConfig::schedule)
      .def_readwrite("shuffle_seed", &TrainConfig::shuffle_seed);

  py::class_<CaptureRule>(m, "CaptureRule")
      .def_static("all", &CaptureRule::all)
      .def_static("every", &CaptureRule::every, py::arg("k"))
      .def_static("at_steps", &CaptureRule::at_steps, py::arg("steps"))
      .def_static("none", &CaptureRule::none);

  py::class_<TraceEntry>(m, "TraceEntry")
      .def_readonly("step", &TraceEntry::step)
      .def_readonly("eta", &TraceEntry::eta)
      .def_readonly("params", &TraceEntry::params);

  py::class_<CheckpointTrace>(m, "CheckpointTrace")
      .def_readonly("entries", &CheckpointTrace::entries)
      .def_readonly("total_steps", &CheckpointTrace::total_steps)
      .def_readonly("dataset_size", &CheckpointTrace::dataset_size);

  py::class_<FitResult>(m, "FitResult")
      .def_readonly("final_params", &FitResult::final_params)
      .def_readonly("trace", &FitResult::trace)
      .def_readonly("correctness_history", &FitResult::correctness_history);

  m.def("fit", &fit, py::arg("ds"), py::arg("spec"), py::arg("cfg"),
        py::arg("capture") = CaptureRule::all(),
        py::call_guard<py::gil_scoped_release>());
  m.def("retrain_without", &retrain_without, py::arg("ds"),
        py::arg("excluded_id"), py::arg("spec"), py::arg("cfg"),
        py::call_guard<py::gil_scoped_release>());
  m.def("forgetting_counts", &forgetting_counts, py::arg("fit_result"));

  // ---- scoring ----
  py::enum_<ScoreMethod>(m, "ScoreMethod")
      .value("moso_approx", ScoreMethod::moso_approx)
      .value("moso_exact", ScoreMethod::moso_exact)
      .value("grand", ScoreMethod::grand)
      .value("el2n", ScoreMethod::el2n)
      .value("forgetting", ScoreMethod::forgetting)
      .value("random", ScoreMethod::random);

  py::class_<ScoreTable>(m, "ScoreTable")
      .def_readonly("method", &ScoreTable::method)
      .def_readonly("scores", &ScoreTable::scores)
      .def_readonly("config_digest", &ScoreTable::config_digest);
  m.def("write_score_table", &write_score_table, py::arg("table"),
        py::arg("path"), py::arg("comments") = std::vector<std::string>{});
  m.def("read_score_table",
        py::overload_cast<const std::string&>(&read_score_table),
        py::arg("path"));

  py::class_<SamplingRule>(m, "SamplingRule")
      .def_static("all", &SamplingRule::all)
      .def_static("uniform", &SamplingRule::uniform, py::arg("k"),
                  py::arg("seed"))
      .def_static("at_steps", &SamplingRule::at_steps, py::arg("steps"))
      .def("describe", &SamplingRule::describe);

  m.def("loo_mean_gradient", &loo_mean_gradient, py::arg("full_mean"),
        py::arg("g_z"), py::arg("n"));
  m.def("moso_approx", &moso_approx, py::arg("ds"), py::arg("trace"),
        py::arg("rule") = SamplingRule::all(), py::arg("jobs") = 1,
        py::call_guard<py::gil_scoped_release>());
  m.def(
      "moso_exact",
      [](const Dataset& ds, const ModelSpec& spec, const TrainConfig& cfg,
         const FitResult& full_fit, int guard_limit, int jobs) {
        ExactScoreOptions options;
        options.guard_limit = guard_limit;
        options.jobs = jobs;
        return moso_exact(ds, spec, cfg, full_fit, options);
      },
      py::arg("ds"), py::arg("spec"), py::arg("cfg"), py::arg("full_fit"),
      py::arg("guard_limit") = 10000, py::arg("jobs") = 1,
      py::call_guard<py::gil_scoped_release>());
  m.def("grand_score", &grand_score, py::arg("ds"), py::arg("trace"),
        py::arg("rule") = SamplingRule::all(), py::arg("jobs") = 1,
        py::call_guard<py::gil_scoped_release>());
  m.def("el2n_score", &el2n_score, py::arg("ds"), py::arg("params"));
  m.def("random_score", &random_score, py::arg("ds"), py::arg("seed"));

  py::class_<ProbeRow>(m, "ProbeRow")
      .def_readonly("epochs", &ProbeRow::epochs)
      .def_readonly("total_steps", &ProbeRow::total_steps)
      .def_readonly("mean_abs_error", &ProbeRow::mean_abs_error);
  m.def(
      "approximation_error_probe",
      [](const Dataset& ds, const ModelSpec& spec, const TrainConfig& cfg,
         const std::vector<int>& epoch_budgets, int guard_limit, int jobs) {
        ExactScoreOptions options;
        options.guard_limit = guard_limit;
        options.jobs = jobs;
        return approximation_error_probe(ds, spec, cfg, epoch_budgets,
                                         options);
      },
      py::arg("ds"), py::arg("spec"), py::arg("cfg"),
      py::arg("epoch_budgets"), py::arg("guard_limit") = 10000,
      py::arg("jobs") = 1, py::call_guard<py::gil_scoped_release>());

  // ---- pipeline ----
  py::class_<PartitionPlan>(m, "PartitionPlan")
      .def_readonly("subsets", &PartitionPlan::subsets)
      .def_readonly("assignment", &PartitionPlan::assignment)
      .def("subset_ids", &PartitionPlan::subset_ids, py::arg("subset"));
  m.def("make_partition", &make_partition, py::arg("ds"), py::arg("subsets"),
        py::arg("seed"));
  m.def(
      "score_pipeline",
      [](const Dataset& ds, const ModelSpec& spec, const TrainConfig& cfg,
         const PartitionPlan& plan, const SamplingRule& rule,
         ScoreMethod method, int jobs) {
        PipelineOptions options;
        options.jobs = jobs;
        return score_pipeline(ds, spec, cfg, plan, rule, method, options);
      },
      py::arg("ds"), py::arg("spec"), py::arg("cfg"), py::arg("plan"),
      py::arg("rule"), py::arg("method"), py::arg("jobs") = 1,
      py::call_guard<py::gil_scoped_release>());

  py::class_<Coreset>(m, "Coreset")
      .def_readonly("kept_ids", &Coreset::kept_ids)
      .def_readonly("source_digest", &Coreset::source_digest)
      .def_readonly("delta", &Coreset::delta)
      .def_readonly("method", &Coreset::method);
  m.def("prune", &prune, py::arg("ds"), py::arg("scores"), py::arg("delta"));

  py::class_<MaterializedDataset>(m, "MaterializedDataset")
      .def_readonly("data", &MaterializedDataset::data)
      .def_readonly("original_ids", &MaterializedDataset::original_ids);
  m.def("materialize", &materialize, py::arg("ds"), py::arg("coreset"));
  m.def("write_coreset", &write_coreset, py::arg("coreset"), py::arg("path"),
        py::arg("comments") = std::vector<std::string>{});
  m.def("read_coreset", py::overload_cast<const std::string&>(&read_coreset),
        py::arg("path"));

  // ---- eval ----
  py::class_<PruneReport>(m, "PruneReport")
      .def_readonly("method", &PruneReport::method)
      .def_readonly("delta", &PruneReport::delta)
      .def_readonly("coreset_size", &PruneReport::coreset_size)
      .def_readonly("accuracy_mean", &PruneReport::accuracy_mean)
      .def_readonly("per_repeat_accuracy", &PruneReport::per_repeat_accuracy)
      .def_readonly("per_class_accuracy", &PruneReport::per_class_accuracy)
      .def_readonly("seeds", &PruneReport::seeds)
      .def_readonly("train_seconds", &PruneReport::train_seconds);
  m.def("evaluate_coreset", &evaluate_coreset, py::arg("train"),
        py::arg("coreset"), py::arg("test"), py::arg("spec"), py::arg("cfg"),
        py::arg("repeats") = 1, py::arg("jobs") = 1,
        py::call_guard<py::gil_scoped_release>());

  m.def(
      "spearman",
      [](const std::vector<double>& a, const std::vector<double>& b) {
        return spearman(a, b);
      },
      py::arg("a"), py::arg("b"),
      "Rank correlation with average ranks for ties.");

  py::class_<NoiseDetectReport>(m, "NoiseDetectReport")
      .def_readonly("noise_rate", &NoiseDetectReport::noise_rate)
      .def_readonly("bottom_fraction", &NoiseDetectReport::bottom_fraction)
      .def_readonly("recall", &NoiseDetectReport::recall)
      .def_readonly("random_baseline", &NoiseDetectReport::random_baseline)
      .def_readonly("applicable", &NoiseDetectReport::applicable);
  m.def("noise_detection", &noise_detection, py::arg("scores"), py::arg("ds"),
        py::arg("bottom_fraction"));

  m.def("derive_seed", &derive_seed, py::arg("base"), py::arg("label"),
        py::arg("index") = 0);
}
