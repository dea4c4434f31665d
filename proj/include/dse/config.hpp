// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "dse/consensus.hpp"
#include "dse/evaluation.hpp"
#include "dse/ingest.hpp"
#include "dse/selection.hpp"
#include "dse/simgen.hpp"

namespace dse {

// Everything the pipeline can read. Paths are resolved against the config
// file's directory at parse time; empty paths mean "not configured" and only
// matter to stages that need them.
struct DataSources {
  std::filesystem::path manifest;
  std::vector<std::pair<std::string, std::filesystem::path>> detections;  // model -> file
  std::string store_locator;  // directory or file:// locator
  std::string key_pattern;    // regex, capture group 1 = RFC 3339 timestamp
  std::filesystem::path predictions;  // detections evaluated against GT
  std::filesystem::path epoch_series;
  std::filesystem::path similarity_matrix;
  std::filesystem::path merge_with;  // second manifest for the merge stage
};

struct PipelineConfig {
  std::uint64_t seed = 0;
  int workers = 0;  // 0 = one per hardware thread
  std::filesystem::path out_dir = "out";
  DataSources sources;
  AcquisitionFilter acquisition;
  bool acquisition_configured = false;  // the config carried an acquisition block
  EnsembleConfig ensemble;
  SelectionPolicy selection;
  double align_threshold = 0.5;
  std::array<double, 3> split_ratios{0.8, 0.1, 0.1};
  std::uint64_t split_seed = 0;
  MatchConfig match;
  CheckpointStrategy checkpoint = CheckpointStrategy::best("map");
  std::optional<Scenario> scenario;
};

// Parses without judging; shape problems (wrong types, unknown keys) are
// still collected so the caller sees every issue at once. Relative paths
// resolve against base_dir.
PipelineConfig parse_pipeline_config(const std::string& text,
                                     const std::filesystem::path& base_dir,
                                     std::vector<std::string>& violations);

// Every invariant violation, including missing referenced files.
std::vector<std::string> validate_pipeline_config(const PipelineConfig& config);

// Parse + validate; throws ConfigInvalid carrying the full violation list.
PipelineConfig load_pipeline_config(const std::filesystem::path& path);

// Replaces the global, split, scenario, and detector seeds wholesale.
void override_seeds(PipelineConfig& config, std::uint64_t seed);

// The config as the pipeline will actually run it, defaults included.
std::string effective_config_json(const PipelineConfig& config);

}  // namespace dse
