#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "gmc/model.hpp"

namespace gmc {

struct Dataset {
  Eigen::MatrixXd features;  // N x F
  std::vector<int> labels;   // in [0, class_count)
  std::optional<std::pair<std::size_t, std::size_t>> image_shape;  // (h, w), h*w = F
  int class_count = 0;
  std::vector<std::string> feature_names;

  Eigen::Index size() const { return features.rows(); }
  void validate() const;
  WeightedDataset to_weighted() const;
};

/// Ordered batches D^(1..T) plus the held-out test set. Batches partition
/// the training split; the test set is never used for selection or
/// training. test_slices, when present, give per-task row subsets of the
/// test set for forgetting analysis.
struct ScenarioStream {
  std::vector<Dataset> batches;
  Dataset test_set;
  std::string kind;
  std::uint64_t seed = 0;
  std::vector<std::vector<int>> task_classes;
  std::vector<std::vector<Eigen::Index>> test_slices;

  void validate() const;
};

// --- ingestion -------------------------------------------------------------

/// Parses a CSV into features + densely re-indexed labels (first seen -> 0)
/// and standardizes each feature column to zero mean / unit variance
/// (constant columns map to zero; sigma guarded at 1). label_column is a
/// header name or a 0-based column index.
Dataset load_csv(const std::string& path, const std::string& label_column,
                 bool has_header);

/// Loads a train/test pair sharing the training split's label map and
/// standardization statistics.
std::pair<Dataset, Dataset> load_csv_train_test(const std::string& train_path,
                                                const std::string& test_path,
                                                const std::string& label_column,
                                                bool has_header);

void write_csv(const std::string& path, const Dataset& data,
               const std::string& label_column);

struct Standardizer {
  Eigen::VectorXd mean;
  Eigen::VectorXd sigma;  // guarded at 1 for constant columns

  static Standardizer fit(const Dataset& data);
  void apply(Dataset& data) const;
};

/// Gaussian class blobs laid out class-major; sample i (0-based, class
/// c = i / per_class) is centered at mean_c + drift * i * e0, so feature 0
/// carries a sortable drift axis spanning the class bands.
Dataset synth_blobs(int classes, int per_class, int features, double spread,
                    double drift, std::uint64_t seed);

std::pair<Dataset, Dataset> holdout_split(const Dataset& data,
                                          double test_fraction,
                                          std::uint64_t seed);

// --- stream constructions --------------------------------------------------

/// Task-free drift: stable-sort by one feature, split into `batches`
/// contiguous parts whose sizes differ by at most one.
ScenarioStream sorted_taskfree_split(const Dataset& train, const Dataset& test,
                                     std::size_t feature_index,
                                     std::size_t batches);

/// Tasks group classes in ascending label order ({0,1}, {2,3}, ... for
/// classes_per_task = 2).
ScenarioStream class_incremental_split(const Dataset& train,
                                       const Dataset& test,
                                       std::size_t classes_per_task);

/// Four random folds, fold k rotated by k*90 degrees (exact index
/// permutations); the test set is the concatenation of the four rotated
/// copies.
ScenarioStream rotated_domain_split(const Dataset& train, const Dataset& test,
                                    std::size_t folds, std::uint64_t seed);

/// Flat-index permutation realizing a rotation by quarter_turns * 90
/// degrees; returns the permutation (output index -> input index) and the
/// rotated (h, w).
std::pair<std::vector<Eigen::Index>, std::pair<std::size_t, std::size_t>>
rotation_permutation(std::size_t h, std::size_t w, int quarter_turns);

// --- manifest --------------------------------------------------------------

std::vector<std::map<int, std::size_t>> class_histograms(
    const ScenarioStream& stream);

void write_manifest(const std::string& path, const ScenarioStream& stream,
                    const std::map<std::string, std::string>& notes = {});

}  // namespace gmc
