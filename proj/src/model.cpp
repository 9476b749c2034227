#include "moso/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "moso/errors.hpp"
#include "moso/rng.hpp"
#include "moso/text_io.hpp"

namespace moso {

std::string to_string(ModelKind kind) {
  return kind == ModelKind::logistic ? "logistic" : "mlp";
}

ModelKind parse_model_kind(std::string_view text) {
  if (text == "logistic") {
    return ModelKind::logistic;
  }
  if (text == "mlp") {
    return ModelKind::mlp;
  }
  throw std::invalid_argument("unknown model kind: '" + std::string(text) +
                              "'");
}

int ModelSpec::param_count() const {
  if (kind == ModelKind::logistic) {
    return num_classes * dim + num_classes;
  }
  return hidden * dim + hidden + num_classes * hidden + num_classes;
}

void ModelSpec::validate() const {
  if (dim < 1) {
    throw std::invalid_argument("model spec: dim must be >= 1");
  }
  if (num_classes < 2) {
    throw std::invalid_argument("model spec: num_classes must be >= 2");
  }
  if (kind == ModelKind::mlp && hidden < 1) {
    throw std::invalid_argument("model spec: mlp needs hidden >= 1");
  }
  if (!(init_scale >= 0.0)) {
    throw std::invalid_argument("model spec: init_scale must be >= 0");
  }
}

bool operator==(const ModelSpec& a, const ModelSpec& b) {
  return a.kind == b.kind && a.dim == b.dim &&
         a.num_classes == b.num_classes && a.hidden == b.hidden &&
         a.init_seed == b.init_seed && a.init_scale == b.init_scale;
}

double dot(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    acc += a[i] * b[i];
  }
  return acc;
}

double l2_norm(std::span<const double> v) {
  return std::sqrt(dot(v, v));
}

ModelParams init_params(const ModelSpec& spec) {
  spec.validate();
  ModelParams params;
  params.spec = spec;
  params.theta.resize(static_cast<std::size_t>(spec.param_count()));
  Rng rng(spec.init_seed);
  for (double& w : params.theta) {
    w = spec.init_scale * (2.0 * rng.uniform() - 1.0);
  }
  return params;
}

namespace {

void check_features(const ModelParams& params,
                    std::span<const double> features) {
  if (static_cast<int>(features.size()) != params.spec.dim) {
    throw std::invalid_argument("feature dimension mismatch: got " +
                                std::to_string(features.size()) +
                                ", model expects " +
                                std::to_string(params.spec.dim));
  }
}

// Layout offsets into theta.
struct LogisticBlocks {
  std::span<const double> w;  // K x d row-major
  std::span<const double> b;  // K
};

LogisticBlocks logistic_blocks(const ModelParams& p) {
  const auto k = static_cast<std::size_t>(p.spec.num_classes);
  const auto d = static_cast<std::size_t>(p.spec.dim);
  return {std::span(p.theta).subspan(0, k * d),
          std::span(p.theta).subspan(k * d, k)};
}

struct MlpBlocks {
  std::span<const double> w1;  // h x d
  std::span<const double> b1;  // h
  std::span<const double> w2;  // K x h
  std::span<const double> b2;  // K
};

MlpBlocks mlp_blocks(const ModelParams& p) {
  const auto k = static_cast<std::size_t>(p.spec.num_classes);
  const auto d = static_cast<std::size_t>(p.spec.dim);
  const auto h = static_cast<std::size_t>(p.spec.hidden);
  std::span<const double> t(p.theta);
  return {t.subspan(0, h * d), t.subspan(h * d, h),
          t.subspan(h * d + h, k * h), t.subspan(h * d + h + k * h, k)};
}

std::vector<double> hidden_activations(const ModelParams& params,
                                       std::span<const double> x) {
  const auto blocks = mlp_blocks(params);
  const int h = params.spec.hidden;
  const int d = params.spec.dim;
  std::vector<double> act(static_cast<std::size_t>(h));
  for (int i = 0; i < h; ++i) {
    double z = blocks.b1[static_cast<std::size_t>(i)];
    for (int j = 0; j < d; ++j) {
      z += blocks.w1[static_cast<std::size_t>(i * d + j)] *
           x[static_cast<std::size_t>(j)];
    }
    act[static_cast<std::size_t>(i)] = std::tanh(z);
  }
  return act;
}

std::vector<double> logits(const ModelParams& params,
                           std::span<const double> x) {
  const int k = params.spec.num_classes;
  std::vector<double> out(static_cast<std::size_t>(k));
  if (params.spec.kind == ModelKind::logistic) {
    const auto blocks = logistic_blocks(params);
    const int d = params.spec.dim;
    for (int c = 0; c < k; ++c) {
      double z = blocks.b[static_cast<std::size_t>(c)];
      for (int j = 0; j < d; ++j) {
        z += blocks.w[static_cast<std::size_t>(c * d + j)] *
             x[static_cast<std::size_t>(j)];
      }
      out[static_cast<std::size_t>(c)] = z;
    }
    return out;
  }
  const auto blocks = mlp_blocks(params);
  const std::vector<double> act = hidden_activations(params, x);
  const int h = params.spec.hidden;
  for (int c = 0; c < k; ++c) {
    double z = blocks.b2[static_cast<std::size_t>(c)];
    for (int i = 0; i < h; ++i) {
      z += blocks.w2[static_cast<std::size_t>(c * h + i)] *
           act[static_cast<std::size_t>(i)];
    }
    out[static_cast<std::size_t>(c)] = z;
  }
  return out;
}

std::vector<double> softmax(std::vector<double> z) {
  const double zmax = *std::max_element(z.begin(), z.end());
  double sum = 0.0;
  for (double& v : z) {
    v = std::exp(v - zmax);
    sum += v;
  }
  for (double& v : z) {
    v /= sum;
  }
  return z;
}

}  // namespace

std::vector<double> forward(const ModelParams& params,
                            std::span<const double> features) {
  check_features(params, features);
  return softmax(logits(params, features));
}

int predict(const ModelParams& params, std::span<const double> features) {
  const std::vector<double> p = forward(params, features);
  int best = 0;
  for (int c = 1; c < static_cast<int>(p.size()); ++c) {
    if (p[static_cast<std::size_t>(c)] > p[static_cast<std::size_t>(best)]) {
      best = c;
    }
  }
  return best;
}

double loss(const ModelParams& params, const Sample& sample) {
  check_features(params, sample.features);
  if (sample.label < 0 || sample.label >= params.spec.num_classes) {
    throw std::invalid_argument("loss: label out of range");
  }
  const std::vector<double> z = logits(params, sample.features);
  const double zmax = *std::max_element(z.begin(), z.end());
  double sum = 0.0;
  for (double v : z) {
    sum += std::exp(v - zmax);
  }
  // -ln softmax(z)[label] = logsumexp(z) - z[label]
  return zmax + std::log(sum) - z[static_cast<std::size_t>(sample.label)];
}

double mean_loss(const ModelParams& params, const Dataset& ds,
                 std::span<const int> indices) {
  if (indices.empty()) {
    throw std::invalid_argument("mean_loss: empty view");
  }
  double acc = 0.0;
  for (int i : indices) {
    acc += loss(params, ds.samples[static_cast<std::size_t>(i)]);
  }
  return acc / static_cast<double>(indices.size());
}

GradVector grad_sample(const ModelParams& params, const Sample& sample) {
  check_features(params, sample.features);
  const int k = params.spec.num_classes;
  const int d = params.spec.dim;
  std::vector<double> delta = forward(params, sample.features);  // p - y
  delta[static_cast<std::size_t>(sample.label)] -= 1.0;

  GradVector grad(params.theta.size(), 0.0);
  if (params.spec.kind == ModelKind::logistic) {
    // dW = (p - y) x^T, db = p - y
    for (int c = 0; c < k; ++c) {
      const double dc = delta[static_cast<std::size_t>(c)];
      for (int j = 0; j < d; ++j) {
        grad[static_cast<std::size_t>(c * d + j)] =
            dc * sample.features[static_cast<std::size_t>(j)];
      }
      grad[static_cast<std::size_t>(k * d + c)] = dc;
    }
    return grad;
  }

  const int h = params.spec.hidden;
  const auto blocks = mlp_blocks(params);
  const std::vector<double> act = hidden_activations(params, sample.features);

  // Output layer: dW2 = (p - y) act^T, db2 = p - y
  const std::size_t w2_off = static_cast<std::size_t>(h * d + h);
  const std::size_t b2_off = w2_off + static_cast<std::size_t>(k * h);
  for (int c = 0; c < k; ++c) {
    const double dc = delta[static_cast<std::size_t>(c)];
    for (int i = 0; i < h; ++i) {
      grad[w2_off + static_cast<std::size_t>(c * h + i)] =
          dc * act[static_cast<std::size_t>(i)];
    }
    grad[b2_off + static_cast<std::size_t>(c)] = dc;
  }

  // Hidden layer through tanh': (1 - act^2)
  const std::size_t b1_off = static_cast<std::size_t>(h * d);
  for (int i = 0; i < h; ++i) {
    double back = 0.0;
    for (int c = 0; c < k; ++c) {
      back += delta[static_cast<std::size_t>(c)] *
              blocks.w2[static_cast<std::size_t>(c * h + i)];
    }
    const double ai = act[static_cast<std::size_t>(i)];
    const double da = back * (1.0 - ai * ai);
    for (int j = 0; j < d; ++j) {
      grad[static_cast<std::size_t>(i * d + j)] =
          da * sample.features[static_cast<std::size_t>(j)];
    }
    grad[b1_off + static_cast<std::size_t>(i)] = da;
  }
  return grad;
}

GradVector grad_mean(const ModelParams& params, const Dataset& ds,
                     std::span<const int> indices) {
  if (indices.empty()) {
    throw std::invalid_argument("grad_mean: empty view");
  }
  GradVector acc(params.theta.size(), 0.0);
  for (int i : indices) {
    const GradVector g =
        grad_sample(params, ds.samples[static_cast<std::size_t>(i)]);
    for (std::size_t j = 0; j < acc.size(); ++j) {
      acc[j] += g[j];
    }
  }
  const double inv = 1.0 / static_cast<double>(indices.size());
  for (double& v : acc) {
    v *= inv;
  }
  return acc;
}

std::vector<int> all_indices(const Dataset& ds) {
  std::vector<int> out(static_cast<std::size_t>(ds.size()));
  std::iota(out.begin(), out.end(), 0);
  return out;
}

std::string serialize_params(const ModelParams& params) {
  std::ostringstream out;
  out << "#moso-params v1 kind=" << to_string(params.spec.kind)
      << " d=" << params.spec.dim << " K=" << params.spec.num_classes
      << " hidden=" << params.spec.hidden << " P=" << params.theta.size()
      << "\n";
  for (double w : params.theta) {
    out << format_double(w) << "\n";
  }
  return out.str();
}

void write_params(const ModelParams& params, const std::string& path) {
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("cannot open for writing: " + path);
  }
  out << serialize_params(params);
}

ModelParams read_params(std::istream& in, const std::string& name,
                        int* line_no) {
  int local_line = line_no ? *line_no : 0;
  std::string line;
  if (!std::getline(in, line)) {
    throw ParseError(name, local_line + 1, "missing header");
  }
  ++local_line;
  static const std::string magic = "#moso-params v1 ";
  if (line.rfind(magic, 0) != 0) {
    throw ParseError(name, local_line,
                     "missing header (expected '#moso-params v1')");
  }
  ModelParams params;
  int p = 0;
  try {
    const std::string_view tail = std::string_view(line).substr(magic.size());
    params.spec.kind = parse_model_kind(header_field(tail, "kind"));
    params.spec.dim = static_cast<int>(parse_int(header_field(tail, "d")));
    params.spec.num_classes =
        static_cast<int>(parse_int(header_field(tail, "K")));
    params.spec.hidden =
        static_cast<int>(parse_int(header_field(tail, "hidden")));
    p = static_cast<int>(parse_int(header_field(tail, "P")));
  } catch (const std::invalid_argument& e) {
    throw ParseError(name, local_line,
                     std::string("malformed header: ") + e.what());
  }
  if (p != params.spec.param_count()) {
    throw ParseError(name, local_line,
                     "P does not match kind/d/K/hidden: expected " +
                         std::to_string(params.spec.param_count()));
  }
  params.theta.reserve(static_cast<std::size_t>(p));
  while (static_cast<int>(params.theta.size()) < p) {
    if (!std::getline(in, line)) {
      throw ParseError(name, local_line, "unexpected end of parameter block");
    }
    ++local_line;
    if (line.empty() || line[0] == '#') {
      continue;
    }
    try {
      params.theta.push_back(parse_double(line));
    } catch (const std::invalid_argument& e) {
      throw ParseError(name, local_line, e.what());
    }
  }
  if (line_no) {
    *line_no = local_line;
  }
  return params;
}

ModelParams read_params(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot open: " + path);
  }
  return read_params(in, path);
}

}  // namespace moso
