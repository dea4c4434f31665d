// SPDX-License-Identifier: Apache-2.0
#include "dse/simgen.hpp"

#include <algorithm>
#include <cstdio>
#include <set>

#include "dse/errors.hpp"
#include "dse/geometry.hpp"
#include "dse/parallel.hpp"

namespace dse {

namespace {

std::string weighted_pick(const ClassMix& mix, double total_weight, rng::Stream& stream) {
  double u = stream.next_unit() * total_weight;
  for (const auto& [label, weight] : mix) {
    u -= weight;
    if (u < 0.0) return label;
  }
  return mix.back().first;  // guard against accumulated rounding
}

double mix_total(const ClassMix& mix) {
  double total = 0.0;
  for (const auto& [label, weight] : mix) total += weight;
  return total;
}

BoundingBox sample_box(const SceneSpec& spec, rng::Stream& stream) {
  const double w = stream.uniform(spec.min_box, spec.max_box);
  const double h = stream.uniform(spec.min_box, spec.max_box);
  const double x = stream.uniform(0.0, static_cast<double>(spec.width) - w);
  const double y = stream.uniform(0.0, static_cast<double>(spec.height) - h);
  return BoundingBox{x, y, x + w, y + h};
}

}  // namespace

std::vector<std::string> ConfidenceModel::validate() const {
  std::vector<std::string> v;
  if (tp_stddev < 0.0 || fp_stddev < 0.0) v.push_back("confidence stddev must be >= 0");
  if (!(clamp_lo > 0.0 && clamp_lo <= clamp_hi && clamp_hi < 1.0)) {
    v.push_back("confidence clamp must satisfy 0 < lo <= hi < 1");
  }
  return v;
}

double ConfidenceModel::sample(bool is_true_positive, rng::Stream& stream) const {
  const double value = is_true_positive ? stream.normal(tp_mean, tp_stddev)
                                        : stream.normal(fp_mean, fp_stddev);
  return std::clamp(value, clamp_lo, clamp_hi);
}

std::vector<std::string> DetectorNoiseModel::validate() const {
  std::vector<std::string> v = confidence.validate();
  if (model_id.empty()) v.push_back("detector model_id must be non-empty");
  if (!(detect_prob >= 0.0 && detect_prob <= 1.0)) {
    v.push_back("detect_prob must be in [0,1]");
  }
  if (fp_rate < 0.0) v.push_back("fp_rate must be >= 0");
  if (loc_jitter < 0.0) v.push_back("loc_jitter must be >= 0");
  if (fp_rate > 0.0 && fp_labels.empty()) {
    v.push_back("fp_labels must be non-empty when fp_rate > 0");
  }
  return v;
}

std::vector<std::string> SceneSpec::validate() const {
  std::vector<std::string> v;
  if (width <= 0 || height <= 0) v.push_back("scene dimensions must be positive");
  if (!(min_box > 0.0 && min_box <= max_box)) {
    v.push_back("scene box sizes must satisfy 0 < min_box <= max_box");
  }
  if (max_box > width || max_box > height) {
    v.push_back("max_box must fit inside the scene");
  }
  if (!(max_overlap >= 0.0 && max_overlap <= 1.0)) {
    v.push_back("max_overlap must be in [0,1]");
  }
  if (max_retries < 1) v.push_back("max_retries must be >= 1");
  return v;
}

Frame generate_scene(const SceneSpec& spec, const std::string& frame_id, int instance_count,
                     const ClassMix& mix, std::uint64_t seed) {
  if (auto violations = spec.validate(); !violations.empty()) {
    throw ConfigInvalid(std::move(violations));
  }
  if (instance_count < 0) throw ConfigError("instance_count must be >= 0");
  const double total_weight = mix_total(mix);
  if (instance_count > 0 && !(total_weight > 0.0)) {
    throw ConfigError("class mix needs at least one positive weight");
  }

  Frame frame;
  frame.frame_id = frame_id;
  frame.source_id = "sim";
  frame.width = spec.width;
  frame.height = spec.height;
  frame.ground_truth.emplace();

  rng::Stream stream = rng::Stream::keyed(seed, "scene", frame_id);
  for (int i = 0; i < instance_count; ++i) {
    const std::string label = weighted_pick(mix, total_weight, stream);
    bool placed = false;
    for (int attempt = 0; attempt < spec.max_retries && !placed; ++attempt) {
      const BoundingBox candidate = sample_box(spec, stream);
      placed = std::none_of(frame.ground_truth->begin(), frame.ground_truth->end(),
                            [&](const GroundTruthBox& g) {
                              return iou(candidate, g.box) > spec.max_overlap;
                            });
      if (placed) frame.ground_truth->push_back(GroundTruthBox{label, candidate});
    }
    if (!placed) {
      throw InfeasiblePlacement("frame '" + frame_id + "': could not place box " +
                                std::to_string(i + 1) + " of " +
                                std::to_string(instance_count) + " within " +
                                std::to_string(spec.max_retries) + " attempts");
    }
  }
  return frame;
}

std::vector<Detection> simulate_detector(const Frame& frame, const DetectorNoiseModel& noise) {
  if (auto violations = noise.validate(); !violations.empty()) {
    throw ConfigInvalid(std::move(violations));
  }
  if (!frame.ground_truth) {
    throw DataError("simulate_detector: frame '" + frame.frame_id + "' has no ground truth");
  }

  rng::Stream stream = rng::Stream::keyed(noise.seed, frame.frame_id, noise.model_id);
  std::vector<Detection> out;
  for (const GroundTruthBox& g : *frame.ground_truth) {
    if (!stream.bernoulli(noise.detect_prob)) continue;
    BoundingBox jittered{
        g.box.x_min + stream.normal(0.0, noise.loc_jitter),
        g.box.y_min + stream.normal(0.0, noise.loc_jitter),
        g.box.x_max + stream.normal(0.0, noise.loc_jitter),
        g.box.y_max + stream.normal(0.0, noise.loc_jitter),
    };
    const double confidence = noise.confidence.sample(true, stream);
    auto clamped = clamp_box(jittered, frame.width, frame.height);
    if (!clamped) continue;  // jitter collapsed the box, drop the observation
    out.push_back(Detection{frame.frame_id, noise.model_id, g.label, confidence, *clamped});
  }

  const int false_boxes = stream.poisson(noise.fp_rate);
  for (int i = 0; i < false_boxes; ++i) {
    const std::string label =
        noise.fp_labels[stream.below(noise.fp_labels.size())];
    // False boxes reuse the scene sampling bounds scaled to this frame.
    const double max_side = std::min({160.0, static_cast<double>(frame.width),
                                      static_cast<double>(frame.height)});
    const double w = stream.uniform(8.0, max_side);
    const double h = stream.uniform(8.0, max_side);
    const double x = stream.uniform(0.0, static_cast<double>(frame.width) - w);
    const double y = stream.uniform(0.0, static_cast<double>(frame.height) - h);
    const double confidence = noise.confidence.sample(false, stream);
    out.push_back(Detection{frame.frame_id, noise.model_id, label, confidence,
                            BoundingBox{x, y, x + w, y + h}});
  }
  return out;
}

std::vector<std::string> Scenario::validate() const {
  std::vector<std::string> v = scene.validate();
  if (dataset_name.empty()) v.push_back("scenario dataset_name must be non-empty");
  if (mean_instances < 0.0) v.push_back("mean_instances must be >= 0");
  if (mean_instances > 0.0 && !(mix_total(class_mix) > 0.0)) {
    v.push_back("class_mix needs at least one positive weight");
  }
  for (const auto& [label, weight] : class_mix) {
    if (label.empty()) v.push_back("class_mix labels must be non-empty");
    if (weight < 0.0) v.push_back("class_mix weights must be >= 0");
  }
  std::set<std::string> ids;
  for (const DetectorNoiseModel& d : detectors) {
    for (std::string& msg : d.validate()) {
      v.push_back("detector '" + d.model_id + "': " + msg);
    }
    if (!ids.insert(d.model_id).second) {
      v.push_back("duplicate detector model_id '" + d.model_id + "'");
    }
  }
  return v;
}

SyntheticBatch generate_batch(const Scenario& scenario, int workers) {
  if (auto violations = scenario.validate(); !violations.empty()) {
    throw ConfigInvalid(std::move(violations));
  }

  struct Slot {
    Frame frame;
    std::vector<std::vector<Detection>> per_detector;
  };
  std::vector<Slot> slots(scenario.frame_count);

  // 2026-01-01T00:00:00Z, one frame per second.
  constexpr std::int64_t kBaseMicros = 1767225600LL * 1000000LL;

  parallel_for(scenario.frame_count, workers, [&](std::size_t i) {
    char id[16];
    std::snprintf(id, sizeof(id), "f%08zu", i);
    rng::Stream count_stream = rng::Stream::keyed(scenario.seed, "count", id);
    const int instances = count_stream.poisson(scenario.mean_instances);
    Slot& slot = slots[i];
    slot.frame =
        generate_scene(scenario.scene, id, instances, scenario.class_mix, scenario.seed);
    slot.frame.timestamp.micros = kBaseMicros + static_cast<std::int64_t>(i) * 1000000LL;
    slot.per_detector.reserve(scenario.detectors.size());
    for (const DetectorNoiseModel& d : scenario.detectors) {
      slot.per_detector.push_back(simulate_detector(slot.frame, d));
    }
  });

  SyntheticBatch batch;
  batch.manifest.name = scenario.dataset_name;
  batch.manifest.provenance = "simgen(seed=" + std::to_string(scenario.seed) + ")";
  for (const auto& [label, weight] : scenario.class_mix) {
    batch.manifest.class_set.push_back(label);
  }
  batch.manifest.frames.reserve(scenario.frame_count);
  for (Slot& slot : slots) {
    const std::string frame_id = slot.frame.frame_id;
    batch.manifest.frames.push_back(std::move(slot.frame));
    for (std::size_t d = 0; d < slot.per_detector.size(); ++d) {
      std::vector<Detection>& dets = slot.per_detector[d];
      auto& merged = batch.by_frame[frame_id];
      merged.insert(merged.end(), dets.begin(), dets.end());
      auto& per_model = batch.by_model[scenario.detectors[d].model_id];
      per_model.insert(per_model.end(), std::make_move_iterator(dets.begin()),
                       std::make_move_iterator(dets.end()));
    }
  }
  return batch;
}

}  // namespace dse
