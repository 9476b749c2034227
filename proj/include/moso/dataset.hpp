#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace moso {

struct Sample {
  int id = 0;
  std::vector<double> features;
  int label = 0;
  bool noisy = false;  // true iff a noise injector changed this label
};

bool operator==(const Sample& a, const Sample& b);

/// Immutable table of labelled feature vectors. Ids are always the
/// contiguous range 0..N-1 so score tables can index by id directly.
struct Dataset {
  int dim = 0;          // d
  int num_classes = 0;  // K
  std::vector<Sample> samples;

  int size() const { return static_cast<int>(samples.size()); }

  /// Throws std::invalid_argument when any structural invariant is broken
  /// (non-contiguous ids, label out of range, ragged or non-finite rows).
  void validate() const;
};

bool operator==(const Dataset& a, const Dataset& b);

struct NoiseConfig {
  double rate = 0.0;  // fraction of samples whose label is redrawn
  std::uint64_t seed = 0;
};

/// Gaussian class clusters with deterministically separated means.
/// N = num_classes * per_class, ids assigned class-block-wise, and the
/// whole dataset is a pure function of the arguments.
Dataset generate_blobs(int num_classes, int per_class, int dim, double spread,
                       std::uint64_t seed);

/// Symmetric label noise: exactly round-half-even(rate*N) samples are
/// chosen without replacement and their labels redrawn uniformly over all
/// K classes (the original label may be redrawn). The noisy flag records
/// only effective flips. The input dataset is left untouched.
Dataset inject_label_noise(const Dataset& ds, const NoiseConfig& cfg);

struct SplitResult {
  Dataset train;
  Dataset test;
  // Positions map re-assigned ids back to ids in the source dataset.
  std::vector<int> train_original_ids;
  std::vector<int> test_original_ids;
};

/// Disjoint shuffled split. The test side gets round-half-down of
/// (1-train_fraction)*N samples, clamped so both sides keep at least one.
SplitResult split(const Dataset& ds, double train_fraction,
                  std::uint64_t seed);

/// Text format: "#moso-dataset v1 d=<d> K=<K> N=<N>" then one
/// "<id>,<label>,<noisy>,<f_0>,...,<f_{d-1}>" line per sample. Extra
/// comment lines (leading '#') after the header are ignored on read.
std::string serialize_dataset(const Dataset& ds,
                              const std::vector<std::string>& comments = {});
void write_dataset(const Dataset& ds, const std::string& path,
                   const std::vector<std::string>& comments = {});
Dataset read_dataset(std::istream& in, const std::string& name);
Dataset read_dataset(const std::string& path);

/// FNV-1a digest of the canonical serialization; coreset files use it to
/// refuse application to the wrong dataset.
std::string dataset_digest(const Dataset& ds);

}  // namespace moso
