// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "dse/model.hpp"

namespace dse {

// Pairwise class similarity between a source scheme (rows) and a target
// scheme (columns), scores in [0,1]. Produced externally by zero-shot
// classifiers; this engine only consumes it.
struct SimilarityMatrix {
  std::vector<std::string> source_classes;
  std::vector<std::string> target_classes;
  std::vector<std::vector<double>> values;  // row-major, one row per source

  void validate() const;  // throws DataError on shape or range violations
};

// File: {"source_classes": [...], "target_classes": [...], "values": [[...]]}
SimilarityMatrix load_similarity_matrix(const std::filesystem::path& path);

struct AlignmentDecision {
  std::string source;
  std::optional<std::string> target;  // nullopt = retain the original class
  double score = 0.0;                 // best similarity in the row
};

struct AlignmentMap {
  std::vector<AlignmentDecision> decisions;  // source-class order preserved
  double threshold = 0.5;

  const AlignmentDecision* find(const std::string& source) const;
};

// Each source class maps to the argmax of its similarity row when that peak
// reaches the threshold, else it is retained; argmax ties go to the earlier
// target class.
AlignmentMap build_alignment(const SimilarityMatrix& matrix, double threshold);

// Rewrites ground-truth labels (and the class_set) through the map. Labels
// outside the map must already be target classes; otherwise
// UnknownSourceClass. Boxes and instance counts are untouched.
DatasetManifest apply_alignment(const DatasetManifest& manifest, const AlignmentMap& map);

// Concatenates a-then-b. Requires identical class schemes; frame_id
// collisions are rejected.
DatasetManifest merge_datasets(const DatasetManifest& a, const DatasetManifest& b);

// Seeded shuffle, then contiguous partition with largest-remainder sizes.
// Deterministic and bit-for-bit reproducible for a fixed seed.
std::array<DatasetManifest, 3> split_dataset(const DatasetManifest& manifest,
                                             const std::array<double, 3>& ratios,
                                             std::uint64_t seed);

}  // namespace dse
