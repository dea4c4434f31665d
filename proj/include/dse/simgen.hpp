// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "dse/model.hpp"
#include "dse/rng.hpp"

namespace dse {

// Confidence distributions for simulated detections, one normal per branch
// (true positive vs false positive), clamped away from 0 and 1 so every
// simulated detection survives any confidence cutoff below clamp_lo.
struct ConfidenceModel {
  double tp_mean = 0.82;
  double tp_stddev = 0.08;
  double fp_mean = 0.35;
  double fp_stddev = 0.10;
  double clamp_lo = 0.01;
  double clamp_hi = 0.99;

  std::vector<std::string> validate() const;
  double sample(bool is_true_positive, rng::Stream& stream) const;
};

struct DetectorNoiseModel {
  std::string model_id;
  double detect_prob = 0.8;  // per-GT true-positive probability
  double fp_rate = 1.0;      // expected false positives per frame (Poisson)
  double loc_jitter = 2.0;   // stddev, px, applied to every box corner
  ConfidenceModel confidence;
  std::vector<std::string> fp_labels;  // labels drawn for false boxes
  std::uint64_t seed = 0;

  std::vector<std::string> validate() const;
};

// Geometry bounds for synthetic scenes. Boxes are sampled uniformly inside
// the frame with pairwise IoU capped at max_overlap (rejection sampling).
struct SceneSpec {
  int width = 1920;
  int height = 1080;
  double min_box = 24.0;
  double max_box = 160.0;
  double max_overlap = 0.2;
  int max_retries = 1000;

  std::vector<std::string> validate() const;
};

using ClassMix = std::vector<std::pair<std::string, double>>;  // label -> weight

// Deterministic for a fixed (seed, frame_id). Throws InfeasiblePlacement when
// a box cannot be placed within max_retries attempts.
Frame generate_scene(const SceneSpec& spec, const std::string& frame_id, int instance_count,
                     const ClassMix& mix, std::uint64_t seed);

// Noisy observation of a labeled frame: each GT box is detected with
// detect_prob and jittered, plus Poisson(fp_rate) uniformly placed false
// boxes. The random stream is keyed (seed, frame_id, model_id), so results
// do not depend on worker count or frame order.
std::vector<Detection> simulate_detector(const Frame& frame, const DetectorNoiseModel& noise);

// A full synthetic workload: scenes plus one detection set per detector.
struct Scenario {
  std::string dataset_name = "synthetic";
  std::size_t frame_count = 0;
  SceneSpec scene;
  double mean_instances = 5.0;  // Poisson mean per frame
  ClassMix class_mix;
  std::vector<DetectorNoiseModel> detectors;
  std::uint64_t seed = 0;

  std::vector<std::string> validate() const;
};

struct SyntheticBatch {
  DatasetManifest manifest;
  std::map<std::string, std::vector<Detection>> by_frame;  // all models, detector order
  std::map<std::string, std::vector<Detection>> by_model;  // frame order within a model
};

SyntheticBatch generate_batch(const Scenario& scenario, int workers = 0);

}  // namespace dse
