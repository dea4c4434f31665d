// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <string>
#include <vector>

#include "dse/config.hpp"

namespace dse {

enum class Stage {
  simulate,
  ingest,
  acquire,
  consensus,
  select,
  align,
  merge,
  split,
  evaluate,
  pick_weights,
};

std::string stage_name(Stage stage);
Stage parse_stage(const std::string& name);           // throws ConfigError
std::vector<Stage> parse_stages(const std::string& csv);

// The stages this config can actually feed, in dependency order.
std::vector<Stage> default_stages(const PipelineConfig& config);

struct StageRecord {
  std::string name;
  double seconds = 0.0;
  std::map<std::string, double> stats;    // record counts and summary figures
  std::vector<std::string> outputs;       // file names under the output directory
};

struct RunRecord {
  std::string config_hash;
  std::vector<StageRecord> stages;
  std::vector<std::string> warnings;
  std::vector<std::string> report_paths;
};

std::string run_record_to_json(const RunRecord& record);
RunRecord run_record_from_json(const std::string& text);

// Executes the requested stages in dependency order. Stages hand data to each
// other only through files in config.out_dir; state.json records the baton so
// a later invocation can resume with a different stage subset. Every artifact
// is written atomically. Errors carry the failing stage in their message.
RunRecord run_pipeline(const PipelineConfig& config, std::vector<Stage> stages);

// Timing-free (and therefore byte-reproducible) human-readable summary.
std::string render_report(const RunRecord& record);

}  // namespace dse
