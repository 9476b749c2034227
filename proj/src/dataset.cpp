#include "moso/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "moso/errors.hpp"
#include "moso/rng.hpp"
#include "moso/text_io.hpp"

namespace moso {

bool operator==(const Sample& a, const Sample& b) {
  return a.id == b.id && a.label == b.label && a.noisy == b.noisy &&
         a.features == b.features;
}

bool operator==(const Dataset& a, const Dataset& b) {
  return a.dim == b.dim && a.num_classes == b.num_classes &&
         a.samples == b.samples;
}

void Dataset::validate() const {
  if (dim < 1) {
    throw std::invalid_argument("dataset: dim must be >= 1");
  }
  if (num_classes < 2) {
    throw std::invalid_argument("dataset: need at least 2 classes");
  }
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const Sample& s = samples[i];
    if (s.id != static_cast<int>(i)) {
      throw std::invalid_argument("dataset: ids must be contiguous from 0");
    }
    if (s.label < 0 || s.label >= num_classes) {
      throw std::invalid_argument("dataset: label out of range");
    }
    if (static_cast<int>(s.features.size()) != dim) {
      throw std::invalid_argument("dataset: feature dimension mismatch");
    }
    for (double f : s.features) {
      if (!std::isfinite(f)) {
        throw std::invalid_argument("dataset: non-finite feature value");
      }
    }
  }
}

Dataset generate_blobs(int num_classes, int per_class, int dim, double spread,
                       std::uint64_t seed) {
  if (num_classes < 2) {
    throw std::invalid_argument("generate_blobs: num_classes must be >= 2");
  }
  if (per_class < 1) {
    throw std::invalid_argument("generate_blobs: per_class must be >= 1");
  }
  if (dim < 1) {
    throw std::invalid_argument("generate_blobs: dim must be >= 1");
  }
  if (!(spread > 0.0)) {
    throw std::invalid_argument("generate_blobs: spread must be positive");
  }

  Rng rng(seed);

  // Class means: for dim >= 2 they sit on the unit circle in the first two
  // coordinates, rotated by a seed-dependent phase, with small jitter in the
  // remaining coordinates. For dim == 1 they are evenly spaced on [-1, 1].
  std::vector<std::vector<double>> means(
      static_cast<std::size_t>(num_classes));
  if (dim >= 2) {
    const double phase = rng.uniform() * 2.0 * std::numbers::pi;
    for (int c = 0; c < num_classes; ++c) {
      auto& m = means[static_cast<std::size_t>(c)];
      m.assign(static_cast<std::size_t>(dim), 0.0);
      const double angle = phase + 2.0 * std::numbers::pi * c / num_classes;
      m[0] = std::cos(angle);
      m[1] = std::sin(angle);
      for (int j = 2; j < dim; ++j) {
        m[static_cast<std::size_t>(j)] = 0.5 * (2.0 * rng.uniform() - 1.0);
      }
    }
  } else {
    for (int c = 0; c < num_classes; ++c) {
      means[static_cast<std::size_t>(c)] = {-1.0 +
                                            2.0 * c / (num_classes - 1)};
    }
  }

  Dataset ds;
  ds.dim = dim;
  ds.num_classes = num_classes;
  ds.samples.reserve(static_cast<std::size_t>(num_classes) *
                     static_cast<std::size_t>(per_class));
  int id = 0;
  for (int c = 0; c < num_classes; ++c) {
    const auto& mean = means[static_cast<std::size_t>(c)];
    for (int i = 0; i < per_class; ++i) {
      Sample s;
      s.id = id++;
      s.label = c;
      s.features.resize(static_cast<std::size_t>(dim));
      for (int j = 0; j < dim; ++j) {
        s.features[static_cast<std::size_t>(j)] =
            mean[static_cast<std::size_t>(j)] + spread * rng.normal();
      }
      ds.samples.push_back(std::move(s));
    }
  }
  return ds;
}

Dataset inject_label_noise(const Dataset& ds, const NoiseConfig& cfg) {
  if (!(cfg.rate >= 0.0 && cfg.rate <= 1.0)) {
    throw std::invalid_argument("inject_label_noise: rate must be in [0,1]");
  }
  ds.validate();

  Dataset out = ds;
  const int n = ds.size();
  const auto redraw_count =
      static_cast<int>(std::nearbyint(cfg.rate * n));  // round half to even
  if (redraw_count == 0) {
    return out;
  }

  Rng rng(cfg.seed);
  std::vector<int> ids(static_cast<std::size_t>(n));
  std::iota(ids.begin(), ids.end(), 0);
  rng.shuffle(ids);
  std::vector<int> chosen(ids.begin(), ids.begin() + redraw_count);
  std::sort(chosen.begin(), chosen.end());  // redraw in id order

  for (int id : chosen) {
    Sample& s = out.samples[static_cast<std::size_t>(id)];
    const int new_label =
        static_cast<int>(rng.below(static_cast<std::uint64_t>(ds.num_classes)));
    s.noisy = new_label != s.label;
    s.label = new_label;
  }
  return out;
}

namespace {

// round-half-down: 2.5 -> 2, 2.51 -> 3
int round_half_down(double x) {
  return static_cast<int>(std::ceil(x - 0.5));
}

Dataset subset_by_ids(const Dataset& ds, const std::vector<int>& ids) {
  Dataset out;
  out.dim = ds.dim;
  out.num_classes = ds.num_classes;
  out.samples.reserve(ids.size());
  int next_id = 0;
  for (int id : ids) {
    Sample s = ds.samples[static_cast<std::size_t>(id)];
    s.id = next_id++;
    out.samples.push_back(std::move(s));
  }
  return out;
}

}  // namespace

SplitResult split(const Dataset& ds, double train_fraction,
                  std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw std::invalid_argument("split: train_fraction must be in (0,1)");
  }
  ds.validate();
  const int n = ds.size();
  if (n < 2) {
    throw std::invalid_argument("split: need at least 2 samples");
  }

  int test_count = round_half_down((1.0 - train_fraction) * n);
  test_count = std::clamp(test_count, 1, n - 1);

  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  rng.shuffle(order);

  SplitResult result;
  result.train_original_ids.assign(order.begin(), order.end() - test_count);
  result.test_original_ids.assign(order.end() - test_count, order.end());
  std::sort(result.train_original_ids.begin(),
            result.train_original_ids.end());
  std::sort(result.test_original_ids.begin(), result.test_original_ids.end());
  result.train = subset_by_ids(ds, result.train_original_ids);
  result.test = subset_by_ids(ds, result.test_original_ids);
  return result;
}

std::string serialize_dataset(const Dataset& ds,
                              const std::vector<std::string>& comments) {
  std::ostringstream out;
  out << "#moso-dataset v1 d=" << ds.dim << " K=" << ds.num_classes
      << " N=" << ds.size() << "\n";
  for (const auto& c : comments) {
    out << "#" << c << "\n";
  }
  for (const Sample& s : ds.samples) {
    out << s.id << "," << s.label << "," << (s.noisy ? 1 : 0);
    for (double f : s.features) {
      out << "," << format_double(f);
    }
    out << "\n";
  }
  return out.str();
}

void write_dataset(const Dataset& ds, const std::string& path,
                   const std::vector<std::string>& comments) {
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("cannot open for writing: " + path);
  }
  out << serialize_dataset(ds, comments);
  if (!out) {
    throw std::runtime_error("write failed: " + path);
  }
}

Dataset read_dataset(std::istream& in, const std::string& name) {
  std::string line;
  if (!std::getline(in, line)) {
    throw ParseError(name, 1, "missing header");
  }
  static const std::string magic = "#moso-dataset v1 ";
  if (line.rfind(magic, 0) != 0) {
    throw ParseError(name, 1, "missing header (expected '#moso-dataset v1')");
  }

  Dataset ds;
  int n = 0;
  try {
    const std::string_view tail = std::string_view(line).substr(magic.size());
    ds.dim = static_cast<int>(parse_int(header_field(tail, "d")));
    ds.num_classes = static_cast<int>(parse_int(header_field(tail, "K")));
    n = static_cast<int>(parse_int(header_field(tail, "N")));
  } catch (const std::invalid_argument& e) {
    throw ParseError(name, 1, std::string("malformed header: ") + e.what());
  }
  if (ds.dim < 1 || ds.num_classes < 2 || n < 0) {
    throw ParseError(name, 1, "malformed header: bad d/K/N");
  }

  ds.samples.reserve(static_cast<std::size_t>(n));
  int line_no = 1;
  int next_id = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') {
      continue;  // embedded run manifests and other comments
    }
    if (next_id >= n) {
      throw ParseError(name, line_no, "more sample lines than N");
    }
    const auto parts = split(std::string_view(line), ',');
    if (static_cast<int>(parts.size()) != 3 + ds.dim) {
      throw ParseError(name, line_no, "dimension mismatch: expected " +
                                          std::to_string(3 + ds.dim) +
                                          " fields");
    }
    Sample s;
    try {
      s.id = static_cast<int>(parse_int(parts[0]));
      s.label = static_cast<int>(parse_int(parts[1]));
      const long long noisy = parse_int(parts[2]);
      if (noisy != 0 && noisy != 1) {
        throw std::invalid_argument("noisy flag must be 0 or 1");
      }
      s.noisy = noisy == 1;
      s.features.resize(static_cast<std::size_t>(ds.dim));
      for (int j = 0; j < ds.dim; ++j) {
        s.features[static_cast<std::size_t>(j)] =
            parse_double(parts[static_cast<std::size_t>(3 + j)]);
      }
    } catch (const std::invalid_argument& e) {
      throw ParseError(name, line_no, e.what());
    }
    if (s.id != next_id) {
      throw ParseError(name, line_no, "ids must be 0..N-1 in order");
    }
    if (s.label < 0 || s.label >= ds.num_classes) {
      throw ParseError(name, line_no, "label out of range [0," +
                                          std::to_string(ds.num_classes) +
                                          ")");
    }
    for (double f : s.features) {
      if (!std::isfinite(f)) {
        throw ParseError(name, line_no, "non-finite feature value");
      }
    }
    ds.samples.push_back(std::move(s));
    ++next_id;
  }
  if (next_id != n) {
    throw ParseError(name, line_no, "expected " + std::to_string(n) +
                                        " samples, found " +
                                        std::to_string(next_id));
  }
  return ds;
}

Dataset read_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot open: " + path);
  }
  return read_dataset(in, path);
}

std::string dataset_digest(const Dataset& ds) {
  return content_digest(serialize_dataset(ds));
}

}  // namespace moso
