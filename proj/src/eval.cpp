#include "moso/eval.hpp"

#include <algorithm>
#include <chrono>
#include <mutex>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "moso/errors.hpp"
#include "moso/parallel.hpp"
#include "moso/rng.hpp"
#include "moso/text_io.hpp"

namespace moso {

namespace {

bool nearly_same(double a, double b) {
  if (std::isnan(a) && std::isnan(b)) {
    return true;
  }
  return a == b;
}

bool vectors_equal(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) {
    return false;
  }
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!nearly_same(a[i], b[i])) {
      return false;
    }
  }
  return true;
}

}  // namespace

bool report_fields_equal(const PruneReport& a, const PruneReport& b) {
  // Serialized fields only; runtimes are log-side and excluded on purpose.
  return a.method == b.method && nearly_same(a.delta, b.delta) &&
         a.coreset_size == b.coreset_size &&
         nearly_same(a.accuracy_mean, b.accuracy_mean) &&
         vectors_equal(a.per_repeat_accuracy, b.per_repeat_accuracy) &&
         vectors_equal(a.per_class_accuracy, b.per_class_accuracy) &&
         a.seeds == b.seeds;
}

PruneReport evaluate_coreset(const Dataset& train, const Coreset& coreset,
                             const Dataset& test, const ModelSpec& spec,
                             const TrainConfig& cfg, int repeats, int jobs) {
  if (repeats < 1) {
    throw std::invalid_argument("evaluate_coreset: repeats must be >= 1");
  }
  const MaterializedDataset kept = materialize(train, coreset);
  if (kept.data.size() == 0) {
    throw std::invalid_argument("evaluate_coreset: empty coreset");
  }
  test.validate();
  if (test.dim != train.dim || test.num_classes != train.num_classes) {
    throw std::invalid_argument(
        "evaluate_coreset: test set does not match train set (d/K)");
  }

  PruneReport report;
  report.method = coreset.method;
  report.delta = coreset.delta;
  report.coreset_size = kept.data.size();
  report.per_repeat_accuracy.assign(static_cast<std::size_t>(repeats), 0.0);
  report.seeds.assign(static_cast<std::size_t>(repeats), 0);

  const int k = train.num_classes;
  std::vector<std::vector<double>> class_acc(
      static_cast<std::size_t>(repeats),
      std::vector<double>(static_cast<std::size_t>(k), 0.0));

  std::mutex timing_mutex;
  parallel_for(repeats, jobs, [&](int r) {
    ModelSpec run_spec = spec;
    run_spec.init_seed = derive_seed(spec.init_seed, "eval-init",
                                     static_cast<std::uint64_t>(r));
    TrainConfig run_cfg = cfg;
    run_cfg.shuffle_seed = derive_seed(cfg.shuffle_seed, "eval-shuffle",
                                       static_cast<std::uint64_t>(r));
    report.seeds[static_cast<std::size_t>(r)] = run_spec.init_seed;

    const auto t0 = std::chrono::steady_clock::now();
    const FitResult result =
        fit(kept.data, run_spec, run_cfg, CaptureRule::none());
    const auto t1 = std::chrono::steady_clock::now();

    std::vector<int> correct(static_cast<std::size_t>(k), 0);
    std::vector<int> total(static_cast<std::size_t>(k), 0);
    int hits = 0;
    for (const Sample& s : test.samples) {
      const bool ok = predict(result.final_params, s.features) == s.label;
      hits += ok ? 1 : 0;
      total[static_cast<std::size_t>(s.label)] += 1;
      correct[static_cast<std::size_t>(s.label)] += ok ? 1 : 0;
    }
    report.per_repeat_accuracy[static_cast<std::size_t>(r)] =
        static_cast<double>(hits) / static_cast<double>(test.size());
    for (int c = 0; c < k; ++c) {
      class_acc[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)] =
          total[static_cast<std::size_t>(c)] == 0
              ? std::numeric_limits<double>::quiet_NaN()
              : static_cast<double>(correct[static_cast<std::size_t>(c)]) /
                    static_cast<double>(total[static_cast<std::size_t>(c)]);
    }
    const auto t2 = std::chrono::steady_clock::now();
    std::lock_guard<std::mutex> lock(timing_mutex);
    report.train_seconds += std::chrono::duration<double>(t1 - t0).count();
    report.eval_seconds += std::chrono::duration<double>(t2 - t1).count();
  });

  report.accuracy_mean =
      std::accumulate(report.per_repeat_accuracy.begin(),
                      report.per_repeat_accuracy.end(), 0.0) /
      static_cast<double>(repeats);
  report.per_class_accuracy.assign(static_cast<std::size_t>(k), 0.0);
  for (int c = 0; c < k; ++c) {
    double acc = 0.0;
    for (int r = 0; r < repeats; ++r) {
      acc += class_acc[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
    }
    report.per_class_accuracy[static_cast<std::size_t>(c)] =
        acc / static_cast<double>(repeats);
  }
  return report;
}

namespace {

// Average ranks (1-based) with ties sharing their midpoint.
std::vector<double> rank_with_ties(std::span<const double> values) {
  const std::size_t n = values.size();
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    return values[static_cast<std::size_t>(a)] <
           values[static_cast<std::size_t>(b)];
  });

  std::vector<double> ranks(n, 0.0);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n &&
           values[static_cast<std::size_t>(order[j + 1])] ==
               values[static_cast<std::size_t>(order[i])]) {
      ++j;
    }
    const double shared = 0.5 * (static_cast<double>(i) +
                                 static_cast<double>(j)) + 1.0;
    for (std::size_t p = i; p <= j; ++p) {
      ranks[static_cast<std::size_t>(order[p])] = shared;
    }
    i = j + 1;
  }
  return ranks;
}

}  // namespace

double spearman(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw std::invalid_argument("spearman: size mismatch");
  }
  if (a.size() < 2) {
    throw std::invalid_argument("spearman: need at least 2 entries");
  }
  const std::vector<double> ra = rank_with_ties(a);
  const std::vector<double> rb = rank_with_ties(b);

  const double n = static_cast<double>(a.size());
  const double mean = (n + 1.0) / 2.0;
  double cov = 0.0;
  double var_a = 0.0;
  double var_b = 0.0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    const double da = ra[i] - mean;
    const double db = rb[i] - mean;
    cov += da * db;
    var_a += da * da;
    var_b += db * db;
  }
  if (var_a == 0.0 || var_b == 0.0) {
    return std::numeric_limits<double>::quiet_NaN();
  }
  return cov / std::sqrt(var_a * var_b);
}

double spearman(const ScoreTable& a, const ScoreTable& b) {
  if (a.scores.size() != b.scores.size()) {
    throw std::invalid_argument(
        "spearman: score tables cover different id sets");
  }
  return spearman(std::span<const double>(a.scores),
                  std::span<const double>(b.scores));
}

NoiseDetectReport noise_detection(const ScoreTable& scores, const Dataset& ds,
                                  double bottom_fraction) {
  if (!(bottom_fraction > 0.0 && bottom_fraction <= 1.0)) {
    throw std::invalid_argument(
        "noise_detection: bottom_fraction must be in (0, 1]");
  }
  if (static_cast<int>(scores.scores.size()) != ds.size()) {
    throw std::invalid_argument(
        "noise_detection: score table does not cover the dataset");
  }

  NoiseDetectReport report;
  report.bottom_fraction = bottom_fraction;
  report.random_baseline = bottom_fraction;

  const int n = ds.size();
  int noisy_total = 0;
  for (const Sample& s : ds.samples) {
    noisy_total += s.noisy ? 1 : 0;
  }
  report.noise_rate = static_cast<double>(noisy_total) / n;
  if (noisy_total == 0) {
    report.applicable = false;
    report.recall = std::numeric_limits<double>::quiet_NaN();
    return report;
  }

  const int examined =
      static_cast<int>(std::floor(bottom_fraction * n + 1e-12));
  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  // Same ordering rule as prune: score ascending, ties by ascending id.
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    const double sa = scores.scores[static_cast<std::size_t>(a)];
    const double sb = scores.scores[static_cast<std::size_t>(b)];
    if (sa != sb) {
      return sa < sb;
    }
    return a < b;
  });

  int hits = 0;
  for (int i = 0; i < examined; ++i) {
    if (ds.samples[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])]
            .noisy) {
      ++hits;
    }
  }
  report.recall = static_cast<double>(hits) / static_cast<double>(noisy_total);
  return report;
}

std::string serialize_report(const PruneReport& report,
                             const std::vector<std::string>& comments,
                             const NoiseDetectReport* noise) {
  std::ostringstream out;
  out << "#moso-report v1\n";
  for (const auto& c : comments) {
    out << "#" << c << "\n";
  }
  out << "method=" << to_string(report.method) << "\n";
  out << "delta=" << format_double(report.delta) << "\n";
  out << "coreset_size=" << report.coreset_size << "\n";
  out << "repeats=" << report.per_repeat_accuracy.size() << "\n";
  out << "accuracy_mean=" << format_double(report.accuracy_mean) << "\n";
  for (std::size_t r = 0; r < report.per_repeat_accuracy.size(); ++r) {
    out << "accuracy_repeat_" << r << "="
        << format_double(report.per_repeat_accuracy[r]) << "\n";
  }
  out << "class_count=" << report.per_class_accuracy.size() << "\n";
  for (std::size_t c = 0; c < report.per_class_accuracy.size(); ++c) {
    out << "class_acc_" << c << "="
        << format_double(report.per_class_accuracy[c]) << "\n";
  }
  for (std::size_t r = 0; r < report.seeds.size(); ++r) {
    out << "seed_" << r << "=" << report.seeds[r] << "\n";
  }
  if (noise) {
    out << "noise_rate=" << format_double(noise->noise_rate) << "\n";
    out << "noise_bottom_fraction=" << format_double(noise->bottom_fraction)
        << "\n";
    out << "noise_recall="
        << (noise->applicable ? format_double(noise->recall) : "null") << "\n";
    out << "noise_random_baseline=" << format_double(noise->random_baseline)
        << "\n";
    out << "noise_applicable=" << (noise->applicable ? 1 : 0) << "\n";
  }
  return out.str();
}

void write_report(const PruneReport& report, const std::string& path,
                  const std::vector<std::string>& comments,
                  const NoiseDetectReport* noise) {
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("cannot open for writing: " + path);
  }
  out << serialize_report(report, comments, noise);
}

PruneReport read_report(std::istream& in, const std::string& name) {
  std::string line;
  if (!std::getline(in, line)) {
    throw ParseError(name, 1, "missing header");
  }
  if (line.rfind("#moso-report v1", 0) != 0) {
    throw ParseError(name, 1, "missing header (expected '#moso-report v1')");
  }

  PruneReport report;
  std::vector<std::pair<std::string, std::string>> fields;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') {
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ParseError(name, line_no, "expected key=value");
    }
    fields.emplace_back(line.substr(0, eq), line.substr(eq + 1));
  }

  auto lookup = [&](const std::string& key) -> const std::string* {
    for (const auto& [k, v] : fields) {
      if (k == key) {
        return &v;
      }
    }
    return nullptr;
  };
  auto require = [&](const std::string& key) -> const std::string& {
    const std::string* v = lookup(key);
    if (!v) {
      throw ParseError(name, 0, "missing field '" + key + "'");
    }
    return *v;
  };

  try {
    report.method = parse_score_method(require("method"));
    report.delta = parse_double(require("delta"));
    report.coreset_size = static_cast<int>(parse_int(require("coreset_size")));
    const int repeats = static_cast<int>(parse_int(require("repeats")));
    report.accuracy_mean = parse_double(require("accuracy_mean"));
    for (int r = 0; r < repeats; ++r) {
      report.per_repeat_accuracy.push_back(
          parse_double(require("accuracy_repeat_" + std::to_string(r))));
      if (const std::string* seed = lookup("seed_" + std::to_string(r))) {
        report.seeds.push_back(parse_u64(*seed));
      }
    }
    const int classes = static_cast<int>(parse_int(require("class_count")));
    for (int c = 0; c < classes; ++c) {
      report.per_class_accuracy.push_back(
          parse_double(require("class_acc_" + std::to_string(c))));
    }
  } catch (const std::invalid_argument& e) {
    throw ParseError(name, 0, e.what());
  }
  return report;
}

PruneReport read_report(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot open: " + path);
  }
  return read_report(in, path);
}

std::string serialize_plot_data(std::span<const PlotCell> cells,
                                const std::vector<std::string>& comments) {
  std::ostringstream out;
  for (const auto& c : comments) {
    out << "#" << c << "\n";
  }
  out << "method,delta,seed,accuracy\n";
  for (const PlotCell& cell : cells) {
    out << to_string(cell.method) << "," << format_double(cell.delta) << ","
        << cell.seed << ","
        << (cell.valid ? format_double(cell.accuracy) : "null") << "\n";
  }
  return out.str();
}

void write_plot_data(std::span<const PlotCell> cells, const std::string& path,
                     const std::vector<std::string>& comments) {
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("cannot open for writing: " + path);
  }
  out << serialize_plot_data(cells, comments);
}

}  // namespace moso
