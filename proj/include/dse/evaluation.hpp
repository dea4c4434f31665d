// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "dse/model.hpp"

namespace dse {

struct MatchConfig {
  double iou_threshold = 0.5;
  double confidence_threshold = 0.5;  // P/R/F1 only; AP sweeps all confidences

  std::vector<std::string> validate() const;  // both thresholds in (0, 1]
};

struct MatchCounts {
  long long tp = 0;
  long long fp = 0;
  long long fn = 0;
};

// Greedy matching for one frame. Per class: predictions at or above the
// confidence threshold, confidence-descending, each take the unmatched
// same-class GT box with the highest IoU >= iou_threshold (ties go to the
// earlier GT in list order). Matched = TP, spare prediction = FP, spare
// GT = FN.
std::map<std::string, MatchCounts> match_predictions(std::span<const Detection> preds,
                                                     std::span<const GroundTruthBox> gt,
                                                     const MatchConfig& cfg);

struct Prf1 {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

// precision = tp/(tp+fp), recall = tp/(tp+fn), f1 = 2pr/(p+r); each term is
// 0 when its denominator is 0.
Prf1 prf1(const MatchCounts& counts);

// One prediction's contribution to a precision-recall curve: its confidence
// and whether it matched a GT box. Tie-break fields pin the sweep order when
// confidences collide, so curves are identical across worker counts.
struct ApSample {
  double confidence = 0.0;
  bool is_tp = false;
  std::uint64_t frame_order = 0;
  std::uint64_t input_order = 0;
};

// All-point interpolated AP: sweep samples confidence-descending, build the
// precision-recall curve, AP = sum (r_i - r_{i-1}) * p_interp(r_i) with
// p_interp(r) = max precision at recall >= r. Zero when gt_count is 0.
double average_precision(std::vector<ApSample> samples, std::size_t gt_count);

// Single-span convenience: matches preds against gt (no confidence cutoff,
// class-blind: caller passes one class's boxes) and sweeps.
double average_precision(std::span<const Detection> preds, std::span<const GroundTruthBox> gt,
                         const MatchConfig& cfg);

struct ClassMetrics {
  long long tp = 0;
  long long fp = 0;
  long long fn = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double ap = 0.0;
  long long gt_count = 0;
};

struct MetricReport {
  std::map<std::string, ClassMetrics> per_class;
  double precision = 0.0;  // micro-averaged over summed per-class counts
  double recall = 0.0;
  double f1 = 0.0;
  double map = 0.0;  // unweighted mean AP over classes with >= 1 GT instance
  std::size_t frames_evaluated = 0;
  std::size_t frames_skipped = 0;  // frames without ground truth
};

// Dataset-level evaluation: per-frame matching in parallel, order-insensitive
// count reduction, then per-class AP over a deterministic global confidence
// sort. Unlabeled frames are skipped, their predictions ignored.
MetricReport evaluate_dataset(const DatasetManifest& manifest,
                              const std::map<std::string, std::vector<Detection>>& preds_by_frame,
                              const MatchConfig& cfg, int workers = 0);

std::string render_metric_report(const MetricReport& report);
std::string metric_report_to_json(const MetricReport& report);
MetricReport metric_report_from_json(const std::string& text);

struct EpochRecord {
  long long epoch = 0;
  std::map<std::string, double> metrics;
};

// Per-epoch validation metrics from a training log. Epochs strictly
// increasing, values finite.
struct EpochSeries {
  std::vector<EpochRecord> records;

  void validate() const;  // throws DataError on invariant violations
  bool has_metric(const std::string& name) const;  // present at every epoch
};

// Reads ".csv" (header row with an "epoch" column, numeric cells) or ".jsonl"
// (one {"epoch": n, "<metric>": v, ...} object per line).
EpochSeries load_epoch_series(const std::filesystem::path& path);

struct CheckpointStrategy {
  enum class Kind { best, geometric_mean };
  Kind kind = Kind::best;
  std::string metric_a;
  std::string metric_b;  // geometric_mean only

  static CheckpointStrategy best(std::string metric);
  static CheckpointStrategy geometric_mean(std::string a, std::string b);
  std::string describe() const;
};

// Accepts "best(<metric>)" and "geometric_mean(<a>,<b>)"; throws ConfigError.
CheckpointStrategy parse_strategy(const std::string& text);

// best(m): argmax of m; geometric_mean(a,b): argmax of sqrt(a*b). Ties break
// toward the earliest epoch. Throws MissingMetric if a required metric is
// absent at any epoch.
long long select_checkpoint(const EpochSeries& series, const CheckpointStrategy& strategy);

// Percentage change of candidate vs baseline per aggregate metric,
// 100*(candidate - baseline)/baseline. Throws ZeroBaseline naming every
// metric whose baseline is zero.
struct ChangeReport {
  std::vector<std::pair<std::string, double>> changes;  // insertion-ordered
};

ChangeReport change_report(const MetricReport& baseline, const MetricReport& candidate);
std::string render_change_report(const ChangeReport& report);

// Trailing-window rolling mean and population standard deviation of one
// metric (window shortens at the start). Reporting only; checkpoint
// selection always works on the raw series.
struct RollingPoint {
  long long epoch = 0;
  double mean = 0.0;
  double stddev = 0.0;
};

std::vector<RollingPoint> rolling_stats(const EpochSeries& series, const std::string& metric,
                                        int window);

}  // namespace dse
