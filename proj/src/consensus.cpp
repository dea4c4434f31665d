// SPDX-License-Identifier: Apache-2.0
#include "dse/consensus.hpp"

#include <algorithm>
#include <numeric>
#include <set>

#include "dse/errors.hpp"
#include "dse/parallel.hpp"

namespace dse {

std::vector<std::string> EnsembleConfig::validate() const {
  std::vector<std::string> problems;
  if (model_ids.empty()) problems.push_back("ensemble: model_ids must not be empty");
  std::set<std::string> unique_models(model_ids.begin(), model_ids.end());
  if (unique_models.size() != model_ids.size()) {
    problems.push_back("ensemble: duplicate model_ids");
  }
  if (quorum < 1 || quorum > static_cast<int>(model_ids.size())) {
    problems.push_back("ensemble: quorum " + std::to_string(quorum) +
                       " outside [1, " + std::to_string(model_ids.size()) + "]");
  }
  if (!(iou_threshold > 0.0 && iou_threshold <= 1.0)) {
    problems.push_back("ensemble: iou_threshold must be in (0, 1]");
  }
  if (query.filter_subset.empty()) {
    problems.push_back("ensemble: filter_subset must not be empty");
  }
  const std::set<std::string> interest(query.classes_of_interest.begin(),
                                       query.classes_of_interest.end());
  for (const std::string& c : query.filter_subset) {
    if (!interest.count(c)) {
      problems.push_back("ensemble: filter class '" + c + "' not in classes_of_interest");
    }
    if (!label_groups.count(c)) {
      problems.push_back("ensemble: filter class '" + c + "' has no label group");
    }
  }
  return problems;
}

int EnsembleConfig::model_index(const std::string& model_id) const {
  for (std::size_t i = 0; i < model_ids.size(); ++i) {
    if (model_ids[i] == model_id) return static_cast<int>(i);
  }
  return -1;
}

std::vector<GroupedDetection> filter_to_query(
    std::span<const Detection> detections, const ClassQuery& query,
    const std::map<std::string, std::string>& label_groups) {
  const std::set<std::string> keep(query.filter_subset.begin(), query.filter_subset.end());
  std::vector<GroupedDetection> out;
  for (const Detection& d : detections) {
    if (!keep.count(d.label)) continue;
    auto group = label_groups.find(d.label);
    if (group == label_groups.end()) {
      throw UnmappedLabel("label '" + d.label + "' passed the filter but has no group");
    }
    out.push_back(GroupedDetection{d, group->second});
  }
  return out;
}

namespace {

struct Ranked {
  std::size_t input_index;
  int model_index;
};

}  // namespace

std::vector<ConsensusCluster> cluster_frame(std::span<const GroupedDetection> detections,
                                            const EnsembleConfig& config) {
  const std::size_t n = detections.size();
  std::vector<Ranked> ranked(n);
  for (std::size_t i = 0; i < n; ++i) {
    const int mi = config.model_index(detections[i].det.model_id);
    if (mi < 0) {
      throw ConfigError("detection from model '" + detections[i].det.model_id +
                        "' which is not in the ensemble");
    }
    ranked[i] = Ranked{i, mi};
  }

  // Total order: confidence desc, model index asc, input order asc.
  std::sort(ranked.begin(), ranked.end(), [&](const Ranked& a, const Ranked& b) {
    const double ca = detections[a.input_index].det.confidence;
    const double cb = detections[b.input_index].det.confidence;
    if (ca != cb) return ca > cb;
    if (a.model_index != b.model_index) return a.model_index < b.model_index;
    return a.input_index < b.input_index;
  });

  // rank_of[i] = position of detection i in the total order; used to break
  // IoU ties among one model's candidates deterministically.
  std::vector<std::size_t> rank_of(n);
  for (std::size_t r = 0; r < n; ++r) rank_of[ranked[r].input_index] = r;

  // Per-model candidate lists in rank order, so the first qualifying
  // candidate found at equal IoU is the tie-break winner.
  const int num_models = static_cast<int>(config.model_ids.size());
  std::vector<std::vector<std::size_t>> by_model(num_models);
  for (const Ranked& r : ranked) by_model[r.model_index].push_back(r.input_index);

  std::vector<char> assigned(n, 0);
  std::vector<ConsensusCluster> clusters;

  for (const Ranked& candidate : ranked) {
    if (assigned[candidate.input_index]) continue;
    const GroupedDetection& anchor = detections[candidate.input_index];
    assigned[candidate.input_index] = 1;

    ConsensusCluster cluster;
    cluster.anchor = anchor.det;
    cluster.group = anchor.group;
    cluster.supporters.emplace(anchor.det.model_id, Supporter{anchor.det, 1.0});

    for (int m = 0; m < num_models; ++m) {
      if (m == candidate.model_index) continue;
      std::size_t best = n;
      double best_iou = 0.0;
      for (std::size_t j : by_model[m]) {
        if (assigned[j] || detections[j].group != anchor.group) continue;
        const double overlap = iou(anchor.det.box, detections[j].det.box);
        if (overlap < config.iou_threshold) continue;
        if (best == n || overlap > best_iou ||
            (overlap == best_iou && rank_of[j] < rank_of[best])) {
          best = j;
          best_iou = overlap;
        }
      }
      if (best != n) {
        assigned[best] = 1;
        cluster.supporters.emplace(detections[best].det.model_id,
                                   Supporter{detections[best].det, best_iou});
      }
    }

    cluster.passed = static_cast<int>(cluster.supporters.size()) >= config.quorum;
    clusters.push_back(std::move(cluster));
  }
  return clusters;
}

std::vector<Detection> consensus_detections(std::span<const ConsensusCluster> clusters) {
  // Clusters are created in anchor-rank order, which is already
  // confidence-descending; a stable sort keeps that order authoritative.
  std::vector<Detection> out;
  for (const ConsensusCluster& c : clusters) {
    if (c.passed) out.push_back(c.anchor);
  }
  std::stable_sort(out.begin(), out.end(), [](const Detection& a, const Detection& b) {
    return a.confidence > b.confidence;
  });
  return out;
}

std::vector<FrameConsensus> run_consensus(
    const DatasetManifest& manifest,
    const std::map<std::string, std::vector<Detection>>& detections_by_frame,
    const EnsembleConfig& config, int workers) {
  const auto problems = config.validate();
  if (!problems.empty()) throw ConfigInvalid(problems);

  // Unknown model ids fail before the parallel region.
  for (const auto& [frame_id, dets] : detections_by_frame) {
    for (const Detection& d : dets) {
      if (config.model_index(d.model_id) < 0) {
        throw ConfigError("detection from model '" + d.model_id +
                          "' which is not in the ensemble");
      }
    }
  }

  std::vector<FrameConsensus> results(manifest.frames.size());
  parallel_for(manifest.frames.size(), workers, [&](std::size_t i) {
    const Frame& frame = manifest.frames[i];
    FrameConsensus& fc = results[i];
    fc.frame_id = frame.frame_id;
    auto it = detections_by_frame.find(frame.frame_id);
    if (it == detections_by_frame.end()) return;
    fc.detections_in = it->second.size();
    const auto grouped = filter_to_query(it->second, config.query, config.label_groups);
    const auto clusters = cluster_frame(grouped, config);
    fc.clusters = clusters.size();
    fc.accepted = consensus_detections(clusters);
  });
  return results;
}

}  // namespace dse
