// SPDX-License-Identifier: Apache-2.0
#include "dse/selection.hpp"

#include <algorithm>
#include <cmath>

namespace dse {

namespace {

double round2(double v) { return std::round(v * 100.0) / 100.0; }

double eliminated_pct(std::size_t kept, std::size_t total) {
  if (total == 0) return 0.0;
  return round2(100.0 * (1.0 - static_cast<double>(kept) / static_cast<double>(total)));
}

}  // namespace

std::vector<std::string> SelectionPolicy::validate() const {
  std::vector<std::string> problems;
  if (min_instances < 1) problems.push_back("selection: min_instances must be >= 1");
  if (crowd_threshold < 1) problems.push_back("selection: crowd_threshold must be >= 1");
  return problems;
}

SelectionResult select_frames(const std::map<std::string, int>& counts,
                              const SelectionPolicy& policy) {
  SelectionResult result;
  SelectionReport& report = result.report;
  report.total_frames = counts.size();

  std::vector<std::pair<std::string, int>> picked;
  for (const auto& [frame_id, count] : counts) {
    if (count >= 1) ++report.frames_with_any;
    if (count >= policy.min_instances) picked.emplace_back(frame_id, count);
    if (count > policy.crowd_threshold) {
      ++report.crowd_frames;
      report.crowd_instances += count;
    }
  }
  std::sort(picked.begin(), picked.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  for (auto& [frame_id, count] : picked) result.selected.push_back(std::move(frame_id));

  report.frames_selected = result.selected.size();
  report.eliminated_any_pct = eliminated_pct(report.frames_with_any, report.total_frames);
  report.eliminated_selected_pct =
      eliminated_pct(report.frames_selected, report.total_frames);
  return result;
}

CrowdTagResult tag_crowds(std::vector<Frame> frames,
                          const std::map<std::string, int>& counts,
                          const SelectionPolicy& policy) {
  CrowdTagResult result;
  for (Frame& f : frames) {
    auto it = counts.find(f.frame_id);
    const int count = it == counts.end() ? 0 : it->second;
    if (count > policy.crowd_threshold) {
      f.tags.insert("crowd");
      ++result.crowd_frames;
      result.crowd_instances += count;
    }
  }
  result.frames = std::move(frames);
  return result;
}

}  // namespace dse
