// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "dse/model.hpp"

namespace dse {

// m-of-n ensemble voting parameters. Consensus is evaluated within a label
// group: open-vocabulary models answer synonymous prompts ("person" vs
// "pedestrian") inconsistently, so grouping is what makes cross-model
// agreement meaningful. When no groups are configured, every filter_subset
// class falls into one shared group.
struct EnsembleConfig {
  std::vector<std::string> model_ids;  // order defines the model index
  int quorum = 1;                      // m, with 1 <= m <= n
  double iou_threshold = 0.5;          // tau in (0, 1]
  ClassQuery query;
  std::map<std::string, std::string> label_groups;  // raw label -> group id

  // Returns every invariant violation (empty when valid).
  std::vector<std::string> validate() const;

  // Index into model_ids, or -1 when unknown.
  int model_index(const std::string& model_id) const;
};

struct GroupedDetection {
  Detection det;
  std::string group;
};

struct Supporter {
  Detection det;
  double iou = 0.0;  // against the anchor; >= tau, 1.0 for the anchor itself
};

// A cross-model group of overlapping boxes with its quorum verdict. Each
// model contributes at most one supporter; the anchor counts as a supporter
// of itself. passed <=> supporter count >= quorum.
struct ConsensusCluster {
  Detection anchor;
  std::string group;
  bool passed = false;
  std::map<std::string, Supporter> supporters;  // keyed by model_id
};

// Keeps detections whose label is in query.filter_subset, annotating each
// with its canonical group; order preserved. Throws UnmappedLabel when a kept
// label has no group.
std::vector<GroupedDetection> filter_to_query(
    std::span<const Detection> detections, const ClassQuery& query,
    const std::map<std::string, std::string>& label_groups);

// Greedy clustering of one frame's filtered detections. Detections are
// ranked by (confidence desc, model index asc, input order asc); the best
// unassigned detection anchors a cluster and takes, from every other model,
// that model's best-IoU unassigned same-group detection with IoU >= tau.
// Every detection lands in exactly one cluster.
std::vector<ConsensusCluster> cluster_frame(std::span<const GroupedDetection> detections,
                                            const EnsembleConfig& config);

// Anchors of passed clusters, confidence-descending.
std::vector<Detection> consensus_detections(std::span<const ConsensusCluster> clusters);

// Whole-batch driver: frames processed in parallel, results merged in
// manifest order so output is identical for any worker count.
struct FrameConsensus {
  std::string frame_id;
  std::size_t detections_in = 0;
  std::size_t clusters = 0;
  std::vector<Detection> accepted;
};

std::vector<FrameConsensus> run_consensus(
    const DatasetManifest& manifest,
    const std::map<std::string, std::vector<Detection>>& detections_by_frame,
    const EnsembleConfig& config, int workers);

}  // namespace dse
