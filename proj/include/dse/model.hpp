// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <set>
#include <string>
#include <vector>

#include "dse/geometry.hpp"
#include "dse/time_utils.hpp"

namespace dse {

// One scored, labeled box attributed to a model. Immutable value object.
struct Detection {
  std::string frame_id;
  std::string model_id;
  std::string label;
  double confidence = 0.0;  // in [0, 1]
  BoundingBox box;
};

struct GroundTruthBox {
  std::string label;
  BoundingBox box;
};

// One image sample. ground_truth distinguishes "unlabeled" (nullopt) from
// "labeled with zero objects" (empty vector); evaluation skips the former.
struct Frame {
  std::string frame_id;
  std::string source_id;
  Timestamp timestamp;
  int width = 0;
  int height = 0;
  std::set<std::string> tags;
  std::optional<std::vector<GroundTruthBox>> ground_truth;
};

struct DatasetManifest {
  std::string name;
  std::vector<Frame> frames;            // order is meaningful and preserved
  std::vector<std::string> class_set;   // every ground-truth label appears here
  std::string provenance;
};

// Open-vocabulary query: classes_of_interest go to the detectors, the
// filter_subset is what the consensus filter actually keeps.
struct ClassQuery {
  std::vector<std::string> classes_of_interest;
  std::vector<std::string> filter_subset;
};

}  // namespace dse
