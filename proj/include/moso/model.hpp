#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "moso/dataset.hpp"

namespace moso {

enum class ModelKind { logistic, mlp };

std::string to_string(ModelKind kind);
ModelKind parse_model_kind(std::string_view text);

/// Architecture plus its deterministic initialization.
struct ModelSpec {
  ModelKind kind = ModelKind::logistic;
  int dim = 0;          // d
  int num_classes = 0;  // K
  int hidden = 0;       // mlp only
  std::uint64_t init_seed = 0;
  double init_scale = 0.1;

  int param_count() const;
  void validate() const;
};

bool operator==(const ModelSpec& a, const ModelSpec& b);

/// Flat parameter vector. Logistic layout: [W (K x d, row-major), b (K)].
/// MLP layout: [W1 (hidden x d), b1, W2 (K x hidden), b2]; tanh hidden
/// activation.
struct ModelParams {
  ModelSpec spec;
  std::vector<double> theta;
};

using GradVector = std::vector<double>;

double dot(std::span<const double> a, std::span<const double> b);
double l2_norm(std::span<const double> v);

/// Uniform init in [-init_scale, +init_scale], one stream per init_seed.
ModelParams init_params(const ModelSpec& spec);

/// Softmax class probabilities, computed with max-subtraction so huge
/// logits cannot overflow.
std::vector<double> forward(const ModelParams& params,
                            std::span<const double> features);

/// argmax class; ties resolve to the lowest index.
int predict(const ModelParams& params, std::span<const double> features);

/// Cross-entropy -ln p[label], evaluated from logits so a saturated
/// prediction never passes through log(0).
double loss(const ModelParams& params, const Sample& sample);

/// Arithmetic mean of loss over the index view. The view must be nonempty.
double mean_loss(const ModelParams& params, const Dataset& ds,
                 std::span<const int> indices);

/// Exact analytic gradient of loss(params, sample) w.r.t. theta.
GradVector grad_sample(const ModelParams& params, const Sample& sample);

/// Mean of per-sample gradients over the index view, accumulated in place.
GradVector grad_mean(const ModelParams& params, const Dataset& ds,
                     std::span<const int> indices);

std::vector<int> all_indices(const Dataset& ds);

/// Text format: "#moso-params v1 kind=<kind> d=<d> K=<K> hidden=<h> P=<P>"
/// then one parameter per line, shortest round-trip decimals.
std::string serialize_params(const ModelParams& params);
void write_params(const ModelParams& params, const std::string& path);
ModelParams read_params(std::istream& in, const std::string& name,
                        int* line_no = nullptr);
ModelParams read_params(const std::string& path);

}  // namespace moso
