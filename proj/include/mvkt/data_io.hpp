#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "mvkt/tensor.hpp"

namespace mvkt {

// One omics layer: n samples x d features.
struct OmicsMatrix {
  std::string name;
  std::vector<std::string> sample_ids;
  std::vector<std::string> feature_names;
  Tensor values;

  std::size_t samples() const { return sample_ids.size(); }
  std::size_t features() const { return feature_names.size(); }
};

struct LabelVector {
  std::vector<std::string> sample_ids;
  std::vector<int> classes;
  std::vector<std::string> class_names;

  std::size_t size() const { return classes.size(); }
  std::size_t num_classes() const { return class_names.size(); }
  std::vector<std::size_t> class_counts() const;
};

struct Dataset {
  std::string name;
  std::vector<OmicsMatrix> omics;
  LabelVector labels;
  // Ground-truth informative feature indices per omics; synthetic data only.
  std::vector<std::vector<std::size_t>> informative;

  std::size_t samples() const { return labels.size(); }
};

// Reads `<dir>/omics_<k>.csv`, `<dir>/labels.csv` and `<dir>/meta.json`.
// Falls back to the public MOGONET layout (`<k>_tr.csv`, `<k>_te.csv`,
// `labels_tr.csv`, `labels_te.csv`, optional `<k>_featname.csv`) when no
// omics_1.csv is present; train and test rows are concatenated.
Dataset load_dataset(const std::filesystem::path& dir);
void save_dataset(const Dataset& dataset, const std::filesystem::path& dir);

// Validates the cross-omics invariants; throws DataError.
void validate_dataset(const Dataset& dataset);

struct SynthSpec {
  std::size_t samples = 200;
  std::vector<std::size_t> dims{50, 50, 50};
  std::size_t classes = 2;
  std::vector<double> informativeness{0.3, 0.2, 0.1};
  double separation = 1.0;
  std::uint64_t seed = 0;
};

// Class-conditional Gaussians: informative features have mean +-separation
// depending on the class, all features carry unit noise.
Dataset synthesize_dataset(const SynthSpec& spec);

struct FeatureStats {
  std::vector<double> mean;
  std::vector<double> stddev;
};

FeatureStats fit_feature_stats(const OmicsMatrix& train);
// Per-feature z-score with the train statistics; features whose train std is
// below 1e-12 map to 0.
OmicsMatrix standardize(const OmicsMatrix& train, const OmicsMatrix& apply_to);
OmicsMatrix standardize_with(const FeatureStats& stats, const OmicsMatrix& apply_to);

OmicsMatrix select_samples(const OmicsMatrix& matrix, std::span<const std::size_t> rows);

struct SplitPlan {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
  std::uint64_t seed = 0;
};

SplitPlan stratified_split(const LabelVector& labels, double test_fraction, std::uint64_t seed);

struct PerturbationSpec {
  double rate = 0.0;
  std::uint64_t seed = 0;
  // Rows eligible for masking; empty means every row.
  std::vector<std::size_t> rows;
};

// Zeroes exactly round(rate * cells) uniformly chosen cells among the target rows.
OmicsMatrix apply_missing(const OmicsMatrix& matrix, const PerturbationSpec& spec);

}  // namespace mvkt
