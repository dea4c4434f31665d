// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <string>
#include <vector>

#include "dse/model.hpp"

namespace dse {

struct SelectionPolicy {
  int min_instances = 1;    // frames need at least this many consensus hits
  int crowd_threshold = 40; // strictly more than this tags a frame as crowd

  std::vector<std::string> validate() const;
};

struct SelectionReport {
  std::size_t total_frames = 0;
  std::size_t frames_with_any = 0;
  std::size_t frames_selected = 0;
  double eliminated_any_pct = 0.0;       // 100*(1 - with_any/total), 2 decimals
  double eliminated_selected_pct = 0.0;  // 100*(1 - selected/total), 2 decimals
  std::size_t crowd_frames = 0;
  long long crowd_instances = 0;
};

struct SelectionResult {
  // Selected frame ids ordered by (count desc, frame_id asc), so labeling
  // budgets truncate to the densest frames first.
  std::vector<std::string> selected;
  SelectionReport report;
};

// counts must cover every frame in the batch (zero allowed).
SelectionResult select_frames(const std::map<std::string, int>& counts,
                              const SelectionPolicy& policy);

struct CrowdTagResult {
  std::vector<Frame> frames;
  std::size_t crowd_frames = 0;
  long long crowd_instances = 0;
};

// Frames with count > crowd_threshold gain the "crowd" tag as metadata;
// labels are untouched. Idempotent.
CrowdTagResult tag_crowds(std::vector<Frame> frames,
                          const std::map<std::string, int>& counts,
                          const SelectionPolicy& policy);

}  // namespace dse
