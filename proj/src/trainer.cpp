#include "moso/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "moso/errors.hpp"
#include "moso/rng.hpp"
#include "moso/text_io.hpp"

namespace moso {

Schedule Schedule::constant(double eta) {
  Schedule s;
  s.kind = Kind::constant;
  s.eta = eta;
  return s;
}

Schedule Schedule::step(double eta, int drop_every, double factor) {
  Schedule s;
  s.kind = Kind::step;
  s.eta = eta;
  s.drop_every = drop_every;
  s.factor = factor;
  return s;
}

Schedule Schedule::cosine(double eta_max, double eta_min) {
  Schedule s;
  s.kind = Kind::cosine;
  s.eta = eta_max;
  s.eta_min = eta_min;
  return s;
}

void Schedule::validate() const {
  if (!(eta >= 0.0)) {
    throw std::invalid_argument("schedule: eta must be >= 0");
  }
  if (kind == Kind::step) {
    if (drop_every < 1) {
      throw std::invalid_argument("schedule: drop_every must be >= 1");
    }
    if (!(factor > 0.0)) {
      throw std::invalid_argument("schedule: factor must be > 0");
    }
  }
  if (kind == Kind::cosine && !(eta_min >= 0.0 && eta_min <= eta)) {
    throw std::invalid_argument("schedule: need 0 <= eta_min <= eta_max");
  }
}

double Schedule::rate_at(int step, int total_steps) const {
  switch (kind) {
    case Kind::constant:
      return eta;
    case Kind::step:
      return eta * std::pow(factor, (step - 1) / drop_every);
    case Kind::cosine: {
      if (total_steps <= 1) {
        return eta;
      }
      const double phase = static_cast<double>(step - 1) /
                           static_cast<double>(total_steps - 1);
      return eta_min +
             0.5 * (eta - eta_min) * (1.0 + std::cos(std::numbers::pi * phase));
    }
  }
  throw std::logic_error("unreachable schedule kind");
}

std::string Schedule::describe() const {
  switch (kind) {
    case Kind::constant:
      return "constant(" + format_double(eta) + ")";
    case Kind::step:
      return "step(" + format_double(eta) + "," + std::to_string(drop_every) +
             "," + format_double(factor) + ")";
    case Kind::cosine:
      return "cosine(" + format_double(eta) + "," + format_double(eta_min) +
             ")";
  }
  throw std::logic_error("unreachable schedule kind");
}

void TrainConfig::validate() const {
  if (epochs < 1) {
    throw std::invalid_argument("train config: epochs must be >= 1");
  }
  if (batch_size < 1) {
    throw std::invalid_argument("train config: batch_size must be >= 1");
  }
  schedule.validate();
}

CaptureRule CaptureRule::all() { return CaptureRule{}; }

CaptureRule CaptureRule::every(int k) {
  if (k < 1) {
    throw std::invalid_argument("capture rule: k must be >= 1");
  }
  CaptureRule rule;
  rule.kind = Kind::every_k;
  rule.k = k;
  return rule;
}

CaptureRule CaptureRule::at_steps(std::vector<int> steps) {
  std::sort(steps.begin(), steps.end());
  CaptureRule rule;
  rule.kind = Kind::explicit_steps;
  rule.steps = std::move(steps);
  return rule;
}

CaptureRule CaptureRule::none() { return at_steps({}); }

bool CaptureRule::captures(int step) const {
  switch (kind) {
    case Kind::all_steps:
      return true;
    case Kind::every_k:
      return step % k == 0;
    case Kind::explicit_steps:
      return std::binary_search(steps.begin(), steps.end(), step);
  }
  return false;
}

int steps_per_epoch(int n, int batch_size) {
  const int b = std::min(batch_size, n);
  return (n + b - 1) / b;
}

int total_steps(const TrainConfig& cfg, int n) {
  return cfg.epochs * steps_per_epoch(n, cfg.batch_size);
}

std::vector<std::vector<int>> batch_plan(const TrainConfig& cfg,
                                         std::span<const int> base_indices,
                                         int epoch) {
  const int n = static_cast<int>(base_indices.size());
  std::vector<int> order(base_indices.begin(), base_indices.end());
  Rng rng(derive_seed(cfg.shuffle_seed, "epoch",
                      static_cast<std::uint64_t>(epoch)));
  rng.shuffle(order);

  const int b = std::min(cfg.batch_size, n);
  std::vector<std::vector<int>> batches;
  batches.reserve(static_cast<std::size_t>(steps_per_epoch(n, cfg.batch_size)));
  for (int start = 0; start < n; start += b) {
    const int end = std::min(start + b, n);
    batches.emplace_back(order.begin() + start, order.begin() + end);
  }
  return batches;
}

namespace {

// Shared SGD loop for fit() and retrain_without(). trace/history are
// optional outputs; base holds the trainable sample indices in id order.
ModelParams run_sgd(const Dataset& ds, std::span<const int> base,
                    const ModelSpec& spec, const TrainConfig& cfg,
                    const CaptureRule* capture, CheckpointTrace* trace,
                    std::vector<std::vector<bool>>* history) {
  const int n = static_cast<int>(base.size());
  const int t_total = total_steps(cfg, n);
  ModelParams params = init_params(spec);

  if (trace) {
    trace->entries.clear();
    trace->total_steps = t_total;
    trace->dataset_size = n;
  }
  if (history) {
    history->assign(ds.samples.size(),
                    std::vector<bool>(static_cast<std::size_t>(cfg.epochs)));
  }

  int t = 0;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (const auto& batch : batch_plan(cfg, base, epoch)) {
      ++t;
      const double eta = cfg.schedule.rate_at(t, t_total);
      const GradVector g = grad_mean(params, ds, batch);
      for (std::size_t j = 0; j < params.theta.size(); ++j) {
        params.theta[j] -= eta * g[j];
      }
      if (capture && capture->captures(t)) {
        trace->entries.push_back(TraceEntry{t, eta, params});
      }
    }
    if (history) {
      for (const Sample& s : ds.samples) {
        (*history)[static_cast<std::size_t>(s.id)]
                  [static_cast<std::size_t>(epoch)] =
                      predict(params, s.features) == s.label;
      }
    }
  }
  return params;
}

void check_compatible(const Dataset& ds, const ModelSpec& spec) {
  if (ds.size() == 0) {
    throw std::invalid_argument("fit: empty dataset");
  }
  if (spec.dim != ds.dim || spec.num_classes != ds.num_classes) {
    throw std::invalid_argument(
        "fit: model spec does not match dataset (d/K mismatch)");
  }
}

}  // namespace

FitResult fit(const Dataset& ds, const ModelSpec& spec, const TrainConfig& cfg,
              const CaptureRule& capture) {
  cfg.validate();
  spec.validate();
  check_compatible(ds, spec);

  FitResult result;
  const std::vector<int> base = all_indices(ds);
  result.final_params = run_sgd(ds, base, spec, cfg, &capture, &result.trace,
                                &result.correctness_history);
  return result;
}

ModelParams retrain_without(const Dataset& ds, int excluded_id,
                            const ModelSpec& spec, const TrainConfig& cfg) {
  cfg.validate();
  spec.validate();
  check_compatible(ds, spec);
  if (excluded_id < 0 || excluded_id >= ds.size()) {
    throw std::invalid_argument("retrain_without: sample id " +
                                std::to_string(excluded_id) + " not found");
  }
  if (ds.size() == 1) {
    throw std::invalid_argument("retrain_without: cannot train on empty set");
  }

  std::vector<int> base;
  base.reserve(static_cast<std::size_t>(ds.size() - 1));
  for (int i = 0; i < ds.size(); ++i) {
    if (i != excluded_id) {
      base.push_back(i);
    }
  }
  return run_sgd(ds, base, spec, cfg, nullptr, nullptr, nullptr);
}

ScoreTable forgetting_counts(const FitResult& result) {
  const auto& history = result.correctness_history;
  ScoreTable table;
  table.method = ScoreMethod::forgetting;
  table.scores.resize(history.size());
  const int epochs =
      history.empty() ? 0 : static_cast<int>(history.front().size());
  table.config_digest = "epochs=" + std::to_string(epochs);

  for (std::size_t i = 0; i < history.size(); ++i) {
    const auto& row = history[i];
    bool ever_correct = false;
    int forgets = 0;
    for (std::size_t e = 0; e < row.size(); ++e) {
      ever_correct = ever_correct || row[e];
      if (e + 1 < row.size() && row[e] && !row[e + 1]) {
        ++forgets;
      }
    }
    table.scores[i] =
        ever_correct ? static_cast<double>(forgets) : static_cast<double>(epochs);
  }
  return table;
}

std::string serialize_trace(const CheckpointTrace& trace) {
  std::ostringstream out;
  out << "#moso-trace v1 T=" << trace.total_steps
      << " N=" << trace.dataset_size << " count=" << trace.entries.size()
      << "\n";
  for (const TraceEntry& entry : trace.entries) {
    out << "t=" << entry.step << " eta=" << format_double(entry.eta) << "\n";
    out << serialize_params(entry.params);
  }
  return out.str();
}

void write_trace(const CheckpointTrace& trace, const std::string& path) {
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("cannot open for writing: " + path);
  }
  out << serialize_trace(trace);
}

CheckpointTrace read_trace(std::istream& in, const std::string& name) {
  std::string line;
  if (!std::getline(in, line)) {
    throw ParseError(name, 1, "missing header");
  }
  static const std::string magic = "#moso-trace v1 ";
  if (line.rfind(magic, 0) != 0) {
    throw ParseError(name, 1, "missing header (expected '#moso-trace v1')");
  }
  CheckpointTrace trace;
  long long count = 0;
  try {
    const std::string_view tail = std::string_view(line).substr(magic.size());
    trace.total_steps = static_cast<int>(parse_int(header_field(tail, "T")));
    trace.dataset_size = static_cast<int>(parse_int(header_field(tail, "N")));
    count = parse_int(header_field(tail, "count"));
  } catch (const std::invalid_argument& e) {
    throw ParseError(name, 1, std::string("malformed header: ") + e.what());
  }

  int line_no = 1;
  int prev_step = 0;
  for (long long i = 0; i < count; ++i) {
    if (!std::getline(in, line)) {
      throw ParseError(name, line_no, "unexpected end of trace");
    }
    ++line_no;
    TraceEntry entry;
    try {
      const std::string_view tail(line);
      entry.step = static_cast<int>(parse_int(header_field(tail, "t")));
      entry.eta = parse_double(header_field(tail, "eta"));
    } catch (const std::invalid_argument& e) {
      throw ParseError(name, line_no, e.what());
    }
    if (entry.step <= prev_step || entry.step > trace.total_steps) {
      throw ParseError(name, line_no,
                       "steps must be strictly increasing within [1, T]");
    }
    prev_step = entry.step;
    entry.params = read_params(in, name, &line_no);
    trace.entries.push_back(std::move(entry));
  }
  return trace;
}

CheckpointTrace read_trace(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot open: " + path);
  }
  return read_trace(in, path);
}

std::string serialize_fit_result(const FitResult& result) {
  std::ostringstream out;
  out << serialize_trace(result.trace);
  out << serialize_params(result.final_params);
  for (const auto& row : result.correctness_history) {
    for (bool correct : row) {
      out << (correct ? '1' : '0');
    }
    out << "\n";
  }
  return out.str();
}

}  // namespace moso
