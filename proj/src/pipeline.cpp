// SPDX-License-Identifier: Apache-2.0
#include "dse/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>

#include "json.hpp"

#include "dse/alignment.hpp"
#include "dse/errors.hpp"
#include "dse/io_utils.hpp"

namespace dse {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr Stage kStageOrder[] = {
    Stage::simulate, Stage::ingest, Stage::acquire,  Stage::consensus, Stage::select,
    Stage::align,    Stage::merge,  Stage::split,    Stage::evaluate,  Stage::pick_weights,
};

std::string safe_filename(const std::string& name) {
  std::string out;
  for (char c : name) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
                    (c >= '0' && c <= '9') || c == '.' || c == '_' || c == '-';
    out += ok ? c : '_';
  }
  return out;
}

// The baton between stage invocations: which files currently hold the working
// manifest and detections. Persisted so `--stages select` can pick up where a
// previous `--stages consensus` process stopped.
struct RunState {
  fs::path manifest;
  std::vector<std::pair<std::string, fs::path>> detections;
  fs::path counts;
  fs::path consensus;
};

RunState load_state(const fs::path& out_dir) {
  RunState state;
  const fs::path path = out_dir / "state.json";
  if (!fs::exists(path)) return state;
  json j = json::parse(read_text_file(path), nullptr, false);
  if (j.is_discarded() || !j.is_object()) {
    throw DataError(path.string() + ": malformed state file");
  }
  if (j.contains("manifest")) state.manifest = j["manifest"].get<std::string>();
  if (j.contains("counts")) state.counts = j["counts"].get<std::string>();
  if (j.contains("consensus")) state.consensus = j["consensus"].get<std::string>();
  if (j.contains("detections")) {
    for (const json& d : j["detections"]) {
      state.detections.emplace_back(d.at("model").get<std::string>(),
                                    fs::path(d.at("path").get<std::string>()));
    }
  }
  return state;
}

void save_state(const RunState& state, const fs::path& out_dir) {
  json detections = json::array();
  for (const auto& [model, path] : state.detections) {
    detections.push_back({{"model", model}, {"path", path.generic_string()}});
  }
  json j = {{"manifest", state.manifest.generic_string()},
            {"detections", detections},
            {"counts", state.counts.generic_string()},
            {"consensus", state.consensus.generic_string()}};
  atomic_write_text(out_dir / "state.json", j.dump(2) + "\n");
}

void write_counts(const std::vector<FrameConsensus>& results, const fs::path& path) {
  std::string out = json{{"type", "consensus_counts"}}.dump();
  out += '\n';
  for (const FrameConsensus& r : results) {
    json j = {{"frame_id", r.frame_id},
              {"detections_in", r.detections_in},
              {"clusters", r.clusters},
              {"accepted", r.accepted.size()}};
    out += j.dump();
    out += '\n';
  }
  atomic_write_text(path, out);
}

std::map<std::string, int> load_counts(const fs::path& path) {
  std::istringstream in(read_text_file(path));
  std::string line;
  if (!std::getline(in, line)) throw ParseError(path.string() + ": empty counts file");
  json header = json::parse(line, nullptr, false);
  if (header.is_discarded() || header.value("type", "") != std::string("consensus_counts")) {
    throw ParseError(path.string() + ": not a consensus counts file");
  }
  std::map<std::string, int> counts;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.contains("frame_id") || !j.contains("accepted")) {
      throw ParseError(path.string() + ":" + std::to_string(line_no) + ": malformed record");
    }
    counts[j["frame_id"].get<std::string>()] = j["accepted"].get<int>();
  }
  return counts;
}

struct StageContext {
  const PipelineConfig& config;
  RunState& state;
  StageRecord& record;
  RunRecord& run;
};

void note_output(StageContext& ctx, const fs::path& path) {
  ctx.record.outputs.push_back(path.filename().generic_string());
}

DatasetManifest current_manifest(StageContext& ctx) {
  if (!ctx.state.manifest.empty()) return load_manifest(ctx.state.manifest);
  if (!ctx.config.sources.manifest.empty()) {
    return load_manifest(ctx.config.sources.manifest);
  }
  throw ConfigError(
      "no manifest available; run simulate/ingest first or set sources.manifest");
}

// Detections per frame, keeping the configured model order within a frame.
std::map<std::string, std::vector<Detection>> load_detection_sources(
    StageContext& ctx, const DatasetManifest& manifest) {
  const auto& sources = ctx.state.detections.empty() ? ctx.config.sources.detections
                                                     : ctx.state.detections;
  if (sources.empty()) {
    throw ConfigError("no detection sources configured; set sources.detections");
  }
  std::map<std::string, std::vector<Detection>> by_frame;
  std::size_t orphaned = 0, degenerate = 0;
  for (const auto& [model, path] : sources) {
    DetectionLoadResult r = load_detections(path, manifest);
    orphaned += r.orphaned;
    degenerate += r.degenerate;
    for (const Frame& frame : manifest.frames) {
      auto it = r.by_frame.find(frame.frame_id);
      if (it == r.by_frame.end()) continue;
      auto& dest = by_frame[frame.frame_id];
      dest.insert(dest.end(), it->second.begin(), it->second.end());
    }
  }
  if (orphaned > 0) {
    ctx.run.warnings.push_back(std::to_string(orphaned) +
                               " detection record(s) referenced unknown frames");
  }
  if (degenerate > 0) {
    ctx.run.warnings.push_back(std::to_string(degenerate) +
                               " detection record(s) collapsed during clamping");
  }
  return by_frame;
}

void stage_simulate(StageContext& ctx) {
  if (!ctx.config.scenario) {
    throw ConfigError("simulate requires a scenario block in the config");
  }
  const Scenario& scenario = *ctx.config.scenario;
  SyntheticBatch batch = generate_batch(scenario, ctx.config.workers);

  const fs::path manifest_path = ctx.config.out_dir / "synthetic_manifest.jsonl";
  save_manifest(batch.manifest, manifest_path);
  note_output(ctx, manifest_path);
  ctx.state.manifest = manifest_path;
  ctx.state.detections.clear();

  long long gt_instances = 0;
  for (const Frame& f : batch.manifest.frames) {
    if (f.ground_truth) gt_instances += static_cast<long long>(f.ground_truth->size());
  }
  long long detections = 0;
  for (const DetectorNoiseModel& d : scenario.detectors) {
    const std::vector<Detection>& dets = batch.by_model[d.model_id];
    detections += static_cast<long long>(dets.size());
    const fs::path path =
        ctx.config.out_dir / ("detections_" + safe_filename(d.model_id) + ".jsonl");
    save_detections(dets, d.model_id, path);
    note_output(ctx, path);
    ctx.state.detections.emplace_back(d.model_id, path);
  }
  ctx.record.stats["frames"] = static_cast<double>(batch.manifest.frames.size());
  ctx.record.stats["gt_instances"] = static_cast<double>(gt_instances);
  ctx.record.stats["detections"] = static_cast<double>(detections);
}

void stage_ingest(StageContext& ctx) {
  if (ctx.config.sources.manifest.empty()) {
    throw ConfigError("ingest requires sources.manifest");
  }
  DatasetManifest manifest = load_manifest(ctx.config.sources.manifest);
  const fs::path manifest_path = ctx.config.out_dir / "manifest.jsonl";
  save_manifest(manifest, manifest_path);
  note_output(ctx, manifest_path);
  ctx.state.manifest = manifest_path;
  ctx.state.detections.clear();

  long long detections = 0, orphaned = 0, degenerate = 0;
  for (const auto& [model, path] : ctx.config.sources.detections) {
    DetectionLoadResult r = load_detections(path, manifest);
    std::vector<Detection> flat;
    for (const Frame& frame : manifest.frames) {
      auto it = r.by_frame.find(frame.frame_id);
      if (it == r.by_frame.end()) continue;
      flat.insert(flat.end(), it->second.begin(), it->second.end());
    }
    detections += static_cast<long long>(flat.size());
    orphaned += static_cast<long long>(r.orphaned);
    degenerate += static_cast<long long>(r.degenerate);
    const fs::path out = ctx.config.out_dir / ("detections_" + safe_filename(model) + ".jsonl");
    save_detections(flat, model, out);
    note_output(ctx, out);
    ctx.state.detections.emplace_back(model, out);
  }
  if (orphaned > 0) {
    ctx.run.warnings.push_back(std::to_string(orphaned) +
                               " detection record(s) referenced unknown frames");
  }
  if (degenerate > 0) {
    ctx.run.warnings.push_back(std::to_string(degenerate) +
                               " detection record(s) collapsed during clamping");
  }
  ctx.record.stats["frames"] = static_cast<double>(manifest.frames.size());
  ctx.record.stats["models"] = static_cast<double>(ctx.config.sources.detections.size());
  ctx.record.stats["detections"] = static_cast<double>(detections);
  ctx.record.stats["orphaned"] = static_cast<double>(orphaned);
  ctx.record.stats["degenerate"] = static_cast<double>(degenerate);
}

void stage_acquire(StageContext& ctx) {
  bool did_anything = false;
  if (!ctx.config.sources.store_locator.empty()) {
    ObjectListing listing = list_remote_objects(
        ctx.config.sources.store_locator, ctx.config.acquisition, ctx.config.sources.key_pattern);
    std::string body;
    for (const std::string& key : listing.keys) {
      body += key;
      body += '\n';
    }
    const fs::path path = ctx.config.out_dir / "store_listing.txt";
    atomic_write_text(path, body);
    note_output(ctx, path);
    ctx.record.stats["objects"] = static_cast<double>(listing.keys.size());
    ctx.record.stats["objects_unparseable"] = static_cast<double>(listing.unparseable);
    if (listing.unparseable > 0) {
      ctx.run.warnings.push_back(std::to_string(listing.unparseable) +
                                 " object key(s) had unreadable timestamps");
    }
    did_anything = true;
  }
  if (!ctx.state.manifest.empty() || !ctx.config.sources.manifest.empty()) {
    DatasetManifest manifest = current_manifest(ctx);
    DatasetManifest filtered = filter_by_time(manifest, ctx.config.acquisition);
    const fs::path path = ctx.config.out_dir / "acquired_manifest.jsonl";
    save_manifest(filtered, path);
    note_output(ctx, path);
    ctx.state.manifest = path;
    ctx.record.stats["frames_in"] = static_cast<double>(manifest.frames.size());
    ctx.record.stats["frames_out"] = static_cast<double>(filtered.frames.size());
    did_anything = true;
  }
  if (!did_anything) {
    throw ConfigError("acquire needs sources.store.locator or a manifest");
  }
}

void stage_consensus(StageContext& ctx) {
  DatasetManifest manifest = current_manifest(ctx);
  auto by_frame = load_detection_sources(ctx, manifest);
  std::vector<FrameConsensus> results =
      run_consensus(manifest, by_frame, ctx.config.ensemble, ctx.config.workers);

  std::vector<Detection> accepted;
  long long detections_in = 0, clusters = 0;
  for (const FrameConsensus& r : results) {
    detections_in += static_cast<long long>(r.detections_in);
    clusters += static_cast<long long>(r.clusters);
    accepted.insert(accepted.end(), r.accepted.begin(), r.accepted.end());
  }
  const fs::path consensus_path = ctx.config.out_dir / "consensus.jsonl";
  save_detections(accepted, "consensus", consensus_path);
  note_output(ctx, consensus_path);
  const fs::path counts_path = ctx.config.out_dir / "consensus_counts.jsonl";
  write_counts(results, counts_path);
  note_output(ctx, counts_path);
  ctx.state.consensus = consensus_path;
  ctx.state.counts = counts_path;

  ctx.record.stats["frames"] = static_cast<double>(results.size());
  ctx.record.stats["detections_in"] = static_cast<double>(detections_in);
  ctx.record.stats["clusters"] = static_cast<double>(clusters);
  ctx.record.stats["accepted"] = static_cast<double>(accepted.size());
}

void stage_select(StageContext& ctx) {
  DatasetManifest manifest = current_manifest(ctx);
  fs::path counts_path = ctx.state.counts;
  if (counts_path.empty()) counts_path = ctx.config.out_dir / "consensus_counts.jsonl";
  if (!fs::exists(counts_path)) {
    throw ConfigError("select needs consensus counts; run the consensus stage first");
  }
  const std::map<std::string, int> all_counts = load_counts(counts_path);
  std::map<std::string, int> counts;
  for (const Frame& f : manifest.frames) {
    auto it = all_counts.find(f.frame_id);
    if (it == all_counts.end()) {
      throw DataError("counts file has no entry for frame '" + f.frame_id +
                      "'; re-run consensus on this manifest");
    }
    counts[f.frame_id] = it->second;
  }

  SelectionResult result = select_frames(counts, ctx.config.selection);
  CrowdTagResult tagged = tag_crowds(manifest.frames, counts, ctx.config.selection);

  std::map<std::string, const Frame*> by_id;
  for (const Frame& f : tagged.frames) by_id[f.frame_id] = &f;
  DatasetManifest selected;
  selected.name = manifest.name + "-selected";
  selected.class_set = manifest.class_set;
  selected.provenance = "selected(min_instances=" +
                        std::to_string(ctx.config.selection.min_instances) + ") of " +
                        manifest.name;
  for (const std::string& id : result.selected) selected.frames.push_back(*by_id.at(id));

  const fs::path path = ctx.config.out_dir / "selected_manifest.jsonl";
  save_manifest(selected, path);
  note_output(ctx, path);
  ctx.state.manifest = path;

  const SelectionReport& rep = result.report;
  ctx.record.stats["total_frames"] = static_cast<double>(rep.total_frames);
  ctx.record.stats["frames_with_any"] = static_cast<double>(rep.frames_with_any);
  ctx.record.stats["frames_selected"] = static_cast<double>(rep.frames_selected);
  ctx.record.stats["eliminated_any_pct"] = rep.eliminated_any_pct;
  ctx.record.stats["eliminated_selected_pct"] = rep.eliminated_selected_pct;
  ctx.record.stats["crowd_frames"] = static_cast<double>(tagged.crowd_frames);
  ctx.record.stats["crowd_instances"] = static_cast<double>(tagged.crowd_instances);
}

void stage_align(StageContext& ctx) {
  if (ctx.config.sources.similarity_matrix.empty()) {
    throw ConfigError("align requires sources.similarity_matrix");
  }
  DatasetManifest manifest = current_manifest(ctx);
  SimilarityMatrix matrix = load_similarity_matrix(ctx.config.sources.similarity_matrix);
  AlignmentMap map = build_alignment(matrix, ctx.config.align_threshold);
  DatasetManifest aligned = apply_alignment(manifest, map);

  json decisions = json::array();
  std::size_t mapped = 0;
  for (const AlignmentDecision& d : map.decisions) {
    decisions.push_back({{"source", d.source},
                         {"target", d.target ? json(*d.target) : json()},
                         {"score", d.score}});
    if (d.target) ++mapped;
  }
  json map_json = {{"threshold", map.threshold}, {"decisions", decisions}};
  const fs::path map_path = ctx.config.out_dir / "alignment_map.json";
  atomic_write_text(map_path, map_json.dump(2) + "\n");
  note_output(ctx, map_path);

  const fs::path path = ctx.config.out_dir / "aligned_manifest.jsonl";
  save_manifest(aligned, path);
  note_output(ctx, path);
  ctx.state.manifest = path;

  ctx.record.stats["source_classes"] = static_cast<double>(map.decisions.size());
  ctx.record.stats["mapped"] = static_cast<double>(mapped);
  ctx.record.stats["retained"] = static_cast<double>(map.decisions.size() - mapped);
}

void stage_merge(StageContext& ctx) {
  if (ctx.config.sources.merge_with.empty()) {
    throw ConfigError("merge requires sources.merge_with");
  }
  DatasetManifest left = current_manifest(ctx);
  DatasetManifest right = load_manifest(ctx.config.sources.merge_with);
  DatasetManifest merged = merge_datasets(left, right);

  long long instances = 0;
  for (const Frame& f : merged.frames) {
    if (f.ground_truth) instances += static_cast<long long>(f.ground_truth->size());
  }
  const fs::path path = ctx.config.out_dir / "merged_manifest.jsonl";
  save_manifest(merged, path);
  note_output(ctx, path);
  ctx.state.manifest = path;

  ctx.record.stats["frames_left"] = static_cast<double>(left.frames.size());
  ctx.record.stats["frames_right"] = static_cast<double>(right.frames.size());
  ctx.record.stats["frames_out"] = static_cast<double>(merged.frames.size());
  ctx.record.stats["gt_instances"] = static_cast<double>(instances);
}

void stage_split(StageContext& ctx) {
  DatasetManifest manifest = current_manifest(ctx);
  const auto parts =
      split_dataset(manifest, ctx.config.split_ratios, ctx.config.split_seed);
  static constexpr const char* kNames[3] = {"train", "val", "test"};
  for (int i = 0; i < 3; ++i) {
    const fs::path path = ctx.config.out_dir / ("split_" + std::string(kNames[i]) + ".jsonl");
    save_manifest(parts[i], path);
    note_output(ctx, path);
    ctx.record.stats[kNames[i]] = static_cast<double>(parts[i].frames.size());
  }
}

void stage_evaluate(StageContext& ctx) {
  DatasetManifest manifest = current_manifest(ctx);
  fs::path preds_path = ctx.config.sources.predictions;
  if (preds_path.empty()) preds_path = ctx.state.consensus;
  if (preds_path.empty()) {
    const fs::path fallback = ctx.config.out_dir / "consensus.jsonl";
    if (fs::exists(fallback)) preds_path = fallback;
  }
  if (preds_path.empty()) {
    throw ConfigError(
        "evaluate needs predictions; set sources.predictions or run consensus first");
  }
  DetectionLoadResult preds = load_detections(preds_path, manifest);
  MetricReport report =
      evaluate_dataset(manifest, preds.by_frame, ctx.config.match, ctx.config.workers);

  const fs::path json_path = ctx.config.out_dir / "metrics.json";
  atomic_write_text(json_path, metric_report_to_json(report));
  note_output(ctx, json_path);
  const fs::path text_path = ctx.config.out_dir / "metrics.txt";
  atomic_write_text(text_path, render_metric_report(report));
  note_output(ctx, text_path);
  ctx.run.report_paths.push_back(text_path.filename().generic_string());

  ctx.record.stats["frames_evaluated"] = static_cast<double>(report.frames_evaluated);
  ctx.record.stats["frames_skipped"] = static_cast<double>(report.frames_skipped);
  ctx.record.stats["precision"] = report.precision;
  ctx.record.stats["recall"] = report.recall;
  ctx.record.stats["f1"] = report.f1;
  ctx.record.stats["map"] = report.map;
}

void stage_pick_weights(StageContext& ctx) {
  if (ctx.config.sources.epoch_series.empty()) {
    throw ConfigError("pick-weights requires sources.epoch_series");
  }
  EpochSeries series = load_epoch_series(ctx.config.sources.epoch_series);
  const long long epoch = select_checkpoint(series, ctx.config.checkpoint);

  json j = {{"strategy", ctx.config.checkpoint.describe()}, {"epoch", epoch}};
  const fs::path path = ctx.config.out_dir / "checkpoint.json";
  atomic_write_text(path, j.dump(2) + "\n");
  note_output(ctx, path);

  ctx.record.stats["epochs"] = static_cast<double>(series.records.size());
  ctx.record.stats["chosen_epoch"] = static_cast<double>(epoch);
}

void run_one_stage(Stage stage, StageContext& ctx) {
  switch (stage) {
    case Stage::simulate: stage_simulate(ctx); return;
    case Stage::ingest: stage_ingest(ctx); return;
    case Stage::acquire: stage_acquire(ctx); return;
    case Stage::consensus: stage_consensus(ctx); return;
    case Stage::select: stage_select(ctx); return;
    case Stage::align: stage_align(ctx); return;
    case Stage::merge: stage_merge(ctx); return;
    case Stage::split: stage_split(ctx); return;
    case Stage::evaluate: stage_evaluate(ctx); return;
    case Stage::pick_weights: stage_pick_weights(ctx); return;
  }
  throw std::logic_error("unhandled stage");
}

std::string format_stat(const std::string& key, double value) {
  char buf[64];
  if (key.size() > 4 && key.compare(key.size() - 4, 4, "_pct") == 0) {
    std::snprintf(buf, sizeof(buf), "%.2f%%", value);
  } else if (std::floor(value) == value && std::abs(value) < 1e15) {
    std::snprintf(buf, sizeof(buf), "%lld", static_cast<long long>(value));
  } else {
    std::snprintf(buf, sizeof(buf), "%.4f", value);
  }
  return buf;
}

}  // namespace

std::string stage_name(Stage stage) {
  switch (stage) {
    case Stage::simulate: return "simulate";
    case Stage::ingest: return "ingest";
    case Stage::acquire: return "acquire";
    case Stage::consensus: return "consensus";
    case Stage::select: return "select";
    case Stage::align: return "align";
    case Stage::merge: return "merge";
    case Stage::split: return "split";
    case Stage::evaluate: return "evaluate";
    case Stage::pick_weights: return "pick-weights";
  }
  return "?";
}

Stage parse_stage(const std::string& name) {
  for (Stage s : kStageOrder) {
    if (name == stage_name(s)) return s;
  }
  if (name == "eval") return Stage::evaluate;
  if (name == "pick_weights") return Stage::pick_weights;
  throw ConfigError("unknown stage '" + name + "'");
}

std::vector<Stage> parse_stages(const std::string& csv) {
  std::vector<Stage> out;
  std::istringstream in(csv);
  std::string token;
  while (std::getline(in, token, ',')) {
    std::size_t b = token.find_first_not_of(" \t");
    std::size_t e = token.find_last_not_of(" \t");
    if (b == std::string::npos) continue;
    out.push_back(parse_stage(token.substr(b, e - b + 1)));
  }
  if (out.empty()) throw ConfigError("no stages given");
  return out;
}

std::vector<Stage> default_stages(const PipelineConfig& config) {
  std::vector<Stage> out;
  const bool have_manifest = config.scenario || !config.sources.manifest.empty();
  if (config.scenario) {
    out.push_back(Stage::simulate);
  } else if (!config.sources.manifest.empty()) {
    out.push_back(Stage::ingest);
  }
  if (config.acquisition_configured &&
      (have_manifest || !config.sources.store_locator.empty())) {
    out.push_back(Stage::acquire);
  }
  const bool have_detections = config.scenario ? !config.scenario->detectors.empty()
                                               : !config.sources.detections.empty();
  if (have_manifest && have_detections) {
    out.push_back(Stage::consensus);
    out.push_back(Stage::select);
  }
  if (have_manifest && !config.sources.similarity_matrix.empty()) {
    out.push_back(Stage::align);
  }
  if (have_manifest && !config.sources.merge_with.empty()) out.push_back(Stage::merge);
  if (have_manifest) out.push_back(Stage::split);
  if (have_manifest && (have_detections || !config.sources.predictions.empty())) {
    out.push_back(Stage::evaluate);
  }
  if (!config.sources.epoch_series.empty()) out.push_back(Stage::pick_weights);
  return out;
}

std::string run_record_to_json(const RunRecord& record) {
  json stages = json::array();
  for (const StageRecord& s : record.stages) {
    json stats = json::object();
    for (const auto& [key, value] : s.stats) stats[key] = value;
    stages.push_back({{"name", s.name},
                      {"seconds", s.seconds},
                      {"stats", stats},
                      {"outputs", s.outputs}});
  }
  json j = {{"config_hash", record.config_hash},
            {"stages", stages},
            {"warnings", record.warnings},
            {"report_paths", record.report_paths}};
  return j.dump(2) + "\n";
}

RunRecord run_record_from_json(const std::string& text) {
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw ParseError("malformed run record");
  RunRecord record;
  try {
    record.config_hash = j.at("config_hash").get<std::string>();
    for (const json& s : j.at("stages")) {
      StageRecord sr;
      sr.name = s.at("name").get<std::string>();
      sr.seconds = s.at("seconds").get<double>();
      for (const auto& [key, value] : s.at("stats").items()) {
        sr.stats[key] = value.get<double>();
      }
      sr.outputs = s.at("outputs").get<std::vector<std::string>>();
      record.stages.push_back(std::move(sr));
    }
    record.warnings = j.at("warnings").get<std::vector<std::string>>();
    record.report_paths = j.at("report_paths").get<std::vector<std::string>>();
  } catch (const json::exception& e) {
    throw ParseError(std::string("run record: ") + e.what());
  }
  return record;
}

RunRecord run_pipeline(const PipelineConfig& config, std::vector<Stage> stages) {
  if (auto violations = validate_pipeline_config(config); !violations.empty()) {
    throw ConfigInvalid(std::move(violations));
  }
  fs::create_directories(config.out_dir);
  atomic_write_text(config.out_dir / "effective_config.json", effective_config_json(config));

  RunRecord record;
  // The hash identifies the logical run. Worker count and output location
  // cannot change any result, so they are excluded; reports from a 1-worker
  // and an 8-worker run of the same config hash identically.
  PipelineConfig normalized = config;
  normalized.workers = 0;
  normalized.out_dir.clear();
  record.config_hash = hex64(fnv1a64(effective_config_json(normalized)));
  RunState state = load_state(config.out_dir);

  // Dependency order with duplicates dropped.
  std::vector<Stage> ordered;
  for (Stage s : kStageOrder) {
    if (std::find(stages.begin(), stages.end(), s) != stages.end()) ordered.push_back(s);
  }

  for (Stage stage : ordered) {
    StageRecord sr;
    sr.name = stage_name(stage);
    StageContext ctx{config, state, sr, record};
    const auto start = std::chrono::steady_clock::now();
    try {
      run_one_stage(stage, ctx);
    } catch (const ConfigError& e) {
      throw ConfigError("stage " + sr.name + ": " + e.what());
    } catch (const DataError& e) {
      throw DataError("stage " + sr.name + ": " + e.what());
    }
    sr.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    record.stages.push_back(std::move(sr));
    save_state(state, config.out_dir);
    atomic_write_text(config.out_dir / "run_record.json", run_record_to_json(record));
  }

  atomic_write_text(config.out_dir / "report.txt", render_report(record));
  record.report_paths.insert(record.report_paths.begin(), "report.txt");
  atomic_write_text(config.out_dir / "run_record.json", run_record_to_json(record));
  return record;
}

std::string render_report(const RunRecord& record) {
  std::ostringstream out;
  out << "data selection engine run " << record.config_hash << "\n";
  out << "stages:";
  if (record.stages.empty()) {
    out << " (none; zero stages ran)";
  } else {
    for (std::size_t i = 0; i < record.stages.size(); ++i) {
      out << (i == 0 ? " " : ", ") << record.stages[i].name;
    }
  }
  out << "\n";
  for (const StageRecord& s : record.stages) {
    out << "\n[" << s.name << "]\n";
    for (const auto& [key, value] : s.stats) {
      out << "  " << key << ": " << format_stat(key, value) << "\n";
    }
    for (const std::string& o : s.outputs) out << "  wrote " << o << "\n";
  }
  if (!record.warnings.empty()) {
    out << "\nwarnings (" << record.warnings.size() << "):\n";
    for (const std::string& w : record.warnings) out << "  - " << w << "\n";
  }
  return out.str();
}

}  // namespace dse
