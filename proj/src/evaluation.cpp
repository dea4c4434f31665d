// SPDX-License-Identifier: Apache-2.0
#include "dse/evaluation.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "json.hpp"

#include "dse/errors.hpp"
#include "dse/geometry.hpp"
#include "dse/io_utils.hpp"
#include "dse/parallel.hpp"

namespace dse {

using nlohmann::json;

namespace {

std::string fmt(double value, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", decimals, value);
  return buf;
}

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

// Indices of preds sorted confidence-descending, input order on ties.
std::vector<std::size_t> rank_by_confidence(std::span<const Detection> preds) {
  std::vector<std::size_t> order(preds.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return preds[a].confidence > preds[b].confidence;
  });
  return order;
}

// Greedy one-frame matcher shared by the counting and the AP paths. Marks
// which GT boxes were taken and returns, per prediction index, whether it
// matched. Class-blind: callers pre-partition by class.
std::vector<bool> greedy_match(std::span<const Detection> preds,
                               std::span<const GroundTruthBox> gt, double iou_threshold) {
  std::vector<bool> matched_pred(preds.size(), false);
  std::vector<bool> taken(gt.size(), false);
  for (std::size_t idx : rank_by_confidence(preds)) {
    double best_iou = 0.0;
    std::size_t best_gt = gt.size();
    for (std::size_t g = 0; g < gt.size(); ++g) {
      if (taken[g]) continue;
      const double v = iou(preds[idx].box, gt[g].box);
      if (v >= iou_threshold && v > best_iou) {  // ties keep the earlier GT
        best_iou = v;
        best_gt = g;
      }
    }
    if (best_gt < gt.size()) {
      taken[best_gt] = true;
      matched_pred[idx] = true;
    }
  }
  return matched_pred;
}

}  // namespace

std::vector<std::string> MatchConfig::validate() const {
  std::vector<std::string> violations;
  if (!(iou_threshold > 0.0 && iou_threshold <= 1.0)) {
    violations.push_back("match.iou_threshold must be in (0,1], got " + fmt(iou_threshold, 4));
  }
  if (!(confidence_threshold > 0.0 && confidence_threshold <= 1.0)) {
    violations.push_back("match.confidence_threshold must be in (0,1], got " +
                         fmt(confidence_threshold, 4));
  }
  return violations;
}

std::map<std::string, MatchCounts> match_predictions(std::span<const Detection> preds,
                                                     std::span<const GroundTruthBox> gt,
                                                     const MatchConfig& cfg) {
  std::map<std::string, std::vector<Detection>> preds_by_class;
  for (const Detection& d : preds) {
    if (d.confidence >= cfg.confidence_threshold) preds_by_class[d.label].push_back(d);
  }
  std::map<std::string, std::vector<GroundTruthBox>> gt_by_class;
  for (const GroundTruthBox& g : gt) gt_by_class[g.label].push_back(g);

  std::map<std::string, MatchCounts> out;
  for (const auto& [label, class_preds] : preds_by_class) {
    auto it = gt_by_class.find(label);
    std::span<const GroundTruthBox> class_gt =
        it == gt_by_class.end() ? std::span<const GroundTruthBox>{} : std::span(it->second);
    const std::vector<bool> matched = greedy_match(class_preds, class_gt, cfg.iou_threshold);
    MatchCounts& c = out[label];
    for (bool m : matched) (m ? c.tp : c.fp) += 1;
    c.fn = static_cast<long long>(class_gt.size()) - c.tp;
  }
  for (const auto& [label, class_gt] : gt_by_class) {
    if (!out.count(label)) out[label].fn = static_cast<long long>(class_gt.size());
  }
  return out;
}

Prf1 prf1(const MatchCounts& counts) {
  Prf1 r;
  const double tp = static_cast<double>(counts.tp);
  if (counts.tp + counts.fp > 0) r.precision = tp / static_cast<double>(counts.tp + counts.fp);
  if (counts.tp + counts.fn > 0) r.recall = tp / static_cast<double>(counts.tp + counts.fn);
  if (r.precision + r.recall > 0.0) {
    r.f1 = 2.0 * r.precision * r.recall / (r.precision + r.recall);
  }
  return r;
}

double average_precision(std::vector<ApSample> samples, std::size_t gt_count) {
  if (gt_count == 0 || samples.empty()) return 0.0;
  std::sort(samples.begin(), samples.end(), [](const ApSample& a, const ApSample& b) {
    if (a.confidence != b.confidence) return a.confidence > b.confidence;
    if (a.frame_order != b.frame_order) return a.frame_order < b.frame_order;
    return a.input_order < b.input_order;
  });

  std::vector<double> precision(samples.size());
  std::vector<double> recall(samples.size());
  long long tp = 0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (samples[i].is_tp) ++tp;
    precision[i] = static_cast<double>(tp) / static_cast<double>(i + 1);
    recall[i] = static_cast<double>(tp) / static_cast<double>(gt_count);
  }

  // Reverse scan carries max precision at recall >= r_i; only points where
  // recall actually advances contribute area.
  double ap = 0.0;
  double max_precision = 0.0;
  for (std::size_t i = samples.size(); i-- > 0;) {
    max_precision = std::max(max_precision, precision[i]);
    const double prev = i == 0 ? 0.0 : recall[i - 1];
    ap += (recall[i] - prev) * max_precision;
  }
  return ap;
}

double average_precision(std::span<const Detection> preds, std::span<const GroundTruthBox> gt,
                         const MatchConfig& cfg) {
  const std::vector<bool> matched = greedy_match(preds, gt, cfg.iou_threshold);
  std::vector<ApSample> samples(preds.size());
  for (std::size_t i = 0; i < preds.size(); ++i) {
    samples[i] = ApSample{preds[i].confidence, matched[i], 0, i};
  }
  return average_precision(std::move(samples), gt.size());
}

namespace {

struct FrameEval {
  std::map<std::string, MatchCounts> counts;
  std::map<std::string, std::vector<ApSample>> samples;  // per class, no cutoff
  std::map<std::string, long long> gt_count;
  bool labeled = false;
};

FrameEval evaluate_frame(const Frame& frame, std::span<const Detection> preds,
                         const MatchConfig& cfg, std::uint64_t frame_order) {
  FrameEval out;
  if (!frame.ground_truth) return out;
  out.labeled = true;
  const std::vector<GroundTruthBox>& gt = *frame.ground_truth;
  out.counts = match_predictions(preds, gt, cfg);

  std::map<std::string, std::vector<Detection>> preds_by_class;
  std::map<std::string, std::vector<std::uint64_t>> order_by_class;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    preds_by_class[preds[i].label].push_back(preds[i]);
    order_by_class[preds[i].label].push_back(i);
  }
  std::map<std::string, std::vector<GroundTruthBox>> gt_by_class;
  for (const GroundTruthBox& g : gt) gt_by_class[g.label].push_back(g);
  for (const auto& [label, class_gt] : gt_by_class) {
    out.gt_count[label] += static_cast<long long>(class_gt.size());
  }

  for (const auto& [label, class_preds] : preds_by_class) {
    auto it = gt_by_class.find(label);
    std::span<const GroundTruthBox> class_gt =
        it == gt_by_class.end() ? std::span<const GroundTruthBox>{} : std::span(it->second);
    const std::vector<bool> matched = greedy_match(class_preds, class_gt, cfg.iou_threshold);
    std::vector<ApSample>& dest = out.samples[label];
    for (std::size_t i = 0; i < class_preds.size(); ++i) {
      dest.push_back(ApSample{class_preds[i].confidence, matched[i], frame_order,
                              order_by_class[label][i]});
    }
  }
  return out;
}

}  // namespace

MetricReport evaluate_dataset(const DatasetManifest& manifest,
                              const std::map<std::string, std::vector<Detection>>& preds_by_frame,
                              const MatchConfig& cfg, int workers) {
  if (auto violations = cfg.validate(); !violations.empty()) {
    throw ConfigInvalid(std::move(violations));
  }

  static const std::vector<Detection> kNoPreds;
  std::vector<FrameEval> per_frame(manifest.frames.size());
  parallel_for(manifest.frames.size(), workers, [&](std::size_t i) {
    const Frame& frame = manifest.frames[i];
    auto it = preds_by_frame.find(frame.frame_id);
    const std::vector<Detection>& preds = it == preds_by_frame.end() ? kNoPreds : it->second;
    per_frame[i] = evaluate_frame(frame, preds, cfg, static_cast<std::uint64_t>(i));
  });

  MetricReport report;
  std::map<std::string, std::vector<ApSample>> samples;
  std::map<std::string, long long> gt_count;
  for (FrameEval& fe : per_frame) {
    if (!fe.labeled) {
      ++report.frames_skipped;
      continue;
    }
    ++report.frames_evaluated;
    for (const auto& [label, c] : fe.counts) {
      ClassMetrics& m = report.per_class[label];
      m.tp += c.tp;
      m.fp += c.fp;
      m.fn += c.fn;
    }
    for (auto& [label, s] : fe.samples) {
      auto& dest = samples[label];
      dest.insert(dest.end(), s.begin(), s.end());
      report.per_class[label];  // ensure prediction-only classes get a row
    }
    for (const auto& [label, n] : fe.gt_count) gt_count[label] += n;
  }

  MatchCounts totals;
  double ap_sum = 0.0;
  std::size_t ap_classes = 0;
  for (auto& [label, m] : report.per_class) {
    const Prf1 r = prf1(MatchCounts{m.tp, m.fp, m.fn});
    m.precision = r.precision;
    m.recall = r.recall;
    m.f1 = r.f1;
    m.gt_count = gt_count.count(label) ? gt_count[label] : 0;
    auto it = samples.find(label);
    m.ap = it == samples.end()
               ? 0.0
               : average_precision(std::move(it->second), static_cast<std::size_t>(m.gt_count));
    totals.tp += m.tp;
    totals.fp += m.fp;
    totals.fn += m.fn;
    if (m.gt_count > 0) {
      ap_sum += m.ap;
      ++ap_classes;
    }
  }
  const Prf1 agg = prf1(totals);
  report.precision = agg.precision;
  report.recall = agg.recall;
  report.f1 = agg.f1;
  report.map = ap_classes > 0 ? ap_sum / static_cast<double>(ap_classes) : 0.0;
  return report;
}

std::string render_metric_report(const MetricReport& report) {
  std::ostringstream out;
  out << "class                     tp      fp      fn  precision   recall       f1   ap@0.5\n";
  auto row = [&](const std::string& name, long long tp, long long fp, long long fn, double p,
                 double r, double f1, const std::string& ap) {
    char buf[160];
    std::snprintf(buf, sizeof(buf), "%-22s %7lld %7lld %7lld   %8.4f %8.4f %8.4f %8s\n",
                  name.c_str(), tp, fp, fn, p, r, f1, ap.c_str());
    out << buf;
  };
  MatchCounts totals;
  for (const auto& [label, m] : report.per_class) {
    row(label, m.tp, m.fp, m.fn, m.precision, m.recall, m.f1, fmt(m.ap, 4));
    totals.tp += m.tp;
    totals.fp += m.fp;
    totals.fn += m.fn;
  }
  row("(all)", totals.tp, totals.fp, totals.fn, report.precision, report.recall, report.f1,
      "-");
  out << "mAP@0.5: " << fmt(report.map, 4) << "\n";
  out << "frames evaluated: " << report.frames_evaluated
      << ", skipped (unlabeled): " << report.frames_skipped << "\n";
  return out.str();
}

std::string metric_report_to_json(const MetricReport& report) {
  json per_class = json::object();
  for (const auto& [label, m] : report.per_class) {
    per_class[label] = {{"tp", m.tp},           {"fp", m.fp},
                        {"fn", m.fn},           {"precision", m.precision},
                        {"recall", m.recall},   {"f1", m.f1},
                        {"ap", m.ap},           {"gt_count", m.gt_count}};
  }
  json j = {{"per_class", per_class},
            {"precision", report.precision},
            {"recall", report.recall},
            {"f1", report.f1},
            {"map", report.map},
            {"frames_evaluated", report.frames_evaluated},
            {"frames_skipped", report.frames_skipped}};
  return j.dump(2) + "\n";
}

MetricReport metric_report_from_json(const std::string& text) {
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw ParseError("malformed metric report");
  MetricReport report;
  try {
    for (const auto& [label, m] : j.at("per_class").items()) {
      ClassMetrics c;
      c.tp = m.at("tp").get<long long>();
      c.fp = m.at("fp").get<long long>();
      c.fn = m.at("fn").get<long long>();
      c.precision = m.at("precision").get<double>();
      c.recall = m.at("recall").get<double>();
      c.f1 = m.at("f1").get<double>();
      c.ap = m.at("ap").get<double>();
      c.gt_count = m.at("gt_count").get<long long>();
      report.per_class[label] = c;
    }
    report.precision = j.at("precision").get<double>();
    report.recall = j.at("recall").get<double>();
    report.f1 = j.at("f1").get<double>();
    report.map = j.at("map").get<double>();
    report.frames_evaluated = j.at("frames_evaluated").get<std::size_t>();
    report.frames_skipped = j.at("frames_skipped").get<std::size_t>();
  } catch (const json::exception& e) {
    throw ParseError(std::string("metric report: ") + e.what());
  }
  return report;
}

void EpochSeries::validate() const {
  long long prev = 0;
  bool first = true;
  for (const EpochRecord& r : records) {
    if (!first && r.epoch <= prev) {
      throw DataError("epoch series: epochs must be strictly increasing (epoch " +
                      std::to_string(r.epoch) + " after " + std::to_string(prev) + ")");
    }
    prev = r.epoch;
    first = false;
    for (const auto& [name, value] : r.metrics) {
      if (!std::isfinite(value)) {
        throw DataError("epoch series: non-finite value for '" + name + "' at epoch " +
                        std::to_string(r.epoch));
      }
    }
  }
}

bool EpochSeries::has_metric(const std::string& name) const {
  if (records.empty()) return false;
  for (const EpochRecord& r : records) {
    if (!r.metrics.count(name)) return false;
  }
  return true;
}

namespace {

EpochSeries epoch_series_from_csv(const std::string& text, const std::string& origin) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw ParseError(origin + ": empty epoch series");
  std::vector<std::string> columns;
  std::istringstream header(line);
  std::string cell;
  while (std::getline(header, cell, ',')) columns.push_back(trim(cell));
  std::size_t epoch_col = columns.size();
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (columns[i] == "epoch") epoch_col = i;
  }
  if (epoch_col == columns.size()) throw ParseError(origin + ": no 'epoch' column");

  EpochSeries series;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    std::istringstream row(line);
    std::vector<std::string> cells;
    while (std::getline(row, cell, ',')) cells.push_back(trim(cell));
    if (cells.size() != columns.size()) {
      throw ParseError(origin + ":" + std::to_string(line_no) + ": expected " +
                       std::to_string(columns.size()) + " cells, got " +
                       std::to_string(cells.size()));
    }
    EpochRecord record;
    try {
      for (std::size_t i = 0; i < cells.size(); ++i) {
        const double v = std::stod(cells[i]);
        if (i == epoch_col) {
          record.epoch = std::llround(v);
        } else {
          record.metrics[columns[i]] = v;
        }
      }
    } catch (const std::exception&) {
      throw ParseError(origin + ":" + std::to_string(line_no) + ": non-numeric cell");
    }
    series.records.push_back(std::move(record));
  }
  return series;
}

EpochSeries epoch_series_from_jsonl(const std::string& text, const std::string& origin) {
  EpochSeries series;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
      throw ParseError(origin + ":" + std::to_string(line_no) + ": malformed record");
    }
    if (!j.contains("epoch") || !j["epoch"].is_number()) {
      throw ParseError(origin + ":" + std::to_string(line_no) + ": missing numeric 'epoch'");
    }
    EpochRecord record;
    record.epoch = j["epoch"].get<long long>();
    for (const auto& [key, value] : j.items()) {
      if (key == "epoch") continue;
      if (!value.is_number()) {
        throw ParseError(origin + ":" + std::to_string(line_no) + ": metric '" + key +
                         "' is not numeric");
      }
      record.metrics[key] = value.get<double>();
    }
    series.records.push_back(std::move(record));
  }
  return series;
}

}  // namespace

EpochSeries load_epoch_series(const std::filesystem::path& path) {
  const std::string text = read_text_file(path);
  const std::string ext = path.extension().string();
  EpochSeries series;
  if (ext == ".csv") {
    series = epoch_series_from_csv(text, path.string());
  } else if (ext == ".jsonl") {
    series = epoch_series_from_jsonl(text, path.string());
  } else {
    throw ParseError(path.string() + ": epoch series must be .csv or .jsonl");
  }
  series.validate();
  return series;
}

CheckpointStrategy CheckpointStrategy::best(std::string metric) {
  CheckpointStrategy s;
  s.kind = Kind::best;
  s.metric_a = std::move(metric);
  return s;
}

CheckpointStrategy CheckpointStrategy::geometric_mean(std::string a, std::string b) {
  CheckpointStrategy s;
  s.kind = Kind::geometric_mean;
  s.metric_a = std::move(a);
  s.metric_b = std::move(b);
  return s;
}

std::string CheckpointStrategy::describe() const {
  if (kind == Kind::best) return "best(" + metric_a + ")";
  return "geometric_mean(" + metric_a + "," + metric_b + ")";
}

CheckpointStrategy parse_strategy(const std::string& text) {
  const std::string s = trim(text);
  const std::size_t open = s.find('(');
  if (open == std::string::npos || s.back() != ')') {
    throw ConfigError("checkpoint strategy '" + text +
                      "': expected best(<metric>) or geometric_mean(<a>,<b>)");
  }
  const std::string name = trim(s.substr(0, open));
  const std::string inner = s.substr(open + 1, s.size() - open - 2);
  std::vector<std::string> args;
  std::istringstream in(inner);
  std::string cell;
  while (std::getline(in, cell, ',')) args.push_back(trim(cell));
  for (const std::string& a : args) {
    if (a.empty()) throw ConfigError("checkpoint strategy '" + text + "': empty metric name");
  }
  if (name == "best" && args.size() == 1) return CheckpointStrategy::best(args[0]);
  if (name == "geometric_mean" && args.size() == 2) {
    return CheckpointStrategy::geometric_mean(args[0], args[1]);
  }
  throw ConfigError("checkpoint strategy '" + text +
                    "': expected best(<metric>) or geometric_mean(<a>,<b>)");
}

namespace {

double metric_at(const EpochRecord& record, const std::string& name) {
  auto it = record.metrics.find(name);
  if (it == record.metrics.end()) {
    throw MissingMetric("metric '" + name + "' missing at epoch " + std::to_string(record.epoch));
  }
  return it->second;
}

}  // namespace

long long select_checkpoint(const EpochSeries& series, const CheckpointStrategy& strategy) {
  series.validate();
  if (series.records.empty()) throw DataError("cannot select a checkpoint from an empty series");
  long long best_epoch = 0;
  double best_score = 0.0;
  bool first = true;
  for (const EpochRecord& record : series.records) {
    double score;
    if (strategy.kind == CheckpointStrategy::Kind::best) {
      score = metric_at(record, strategy.metric_a);
    } else {
      const double product =
          metric_at(record, strategy.metric_a) * metric_at(record, strategy.metric_b);
      if (product < 0.0) {
        throw DataError("geometric mean undefined at epoch " + std::to_string(record.epoch) +
                        ": metric product is negative");
      }
      score = std::sqrt(product);
    }
    if (first || score > best_score) {  // ties keep the earliest epoch
      best_score = score;
      best_epoch = record.epoch;
      first = false;
    }
  }
  return best_epoch;
}

ChangeReport change_report(const MetricReport& baseline, const MetricReport& candidate) {
  const std::pair<std::string, std::pair<double, double>> entries[] = {
      {"precision", {baseline.precision, candidate.precision}},
      {"recall", {baseline.recall, candidate.recall}},
      {"f1", {baseline.f1, candidate.f1}},
      {"map", {baseline.map, candidate.map}},
  };
  std::string zero_metrics;
  for (const auto& [name, values] : entries) {
    if (values.first == 0.0) zero_metrics += zero_metrics.empty() ? name : ", " + name;
  }
  if (!zero_metrics.empty()) {
    throw ZeroBaseline("zero baseline for: " + zero_metrics);
  }
  ChangeReport report;
  for (const auto& [name, values] : entries) {
    report.changes.emplace_back(name, 100.0 * (values.second - values.first) / values.first);
  }
  return report;
}

std::string render_change_report(const ChangeReport& report) {
  std::ostringstream out;
  for (const auto& [name, change] : report.changes) {
    char buf[96];
    std::snprintf(buf, sizeof(buf), "%-10s %+.2f%%\n", name.c_str(), change);
    out << buf;
  }
  return out.str();
}

std::vector<RollingPoint> rolling_stats(const EpochSeries& series, const std::string& metric,
                                        int window) {
  if (window < 1) throw ConfigError("rolling window must be >= 1");
  series.validate();
  std::vector<double> values;
  values.reserve(series.records.size());
  for (const EpochRecord& r : series.records) values.push_back(metric_at(r, metric));

  std::vector<RollingPoint> out;
  out.reserve(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    const std::size_t begin = i + 1 >= static_cast<std::size_t>(window)
                                  ? i + 1 - static_cast<std::size_t>(window)
                                  : 0;
    const std::size_t n = i - begin + 1;
    double mean = 0.0;
    for (std::size_t k = begin; k <= i; ++k) mean += values[k];
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t k = begin; k <= i; ++k) {
      var += (values[k] - mean) * (values[k] - mean);
    }
    var /= static_cast<double>(n);  // population variance
    out.push_back(RollingPoint{series.records[i].epoch, mean, std::sqrt(var)});
  }
  return out;
}

}  // namespace dse
