// SPDX-License-Identifier: Apache-2.0
#include "dse/config.hpp"

#include <cmath>
#include <initializer_list>
#include <limits>
#include <set>

#include "json.hpp"

#include "dse/errors.hpp"
#include "dse/io_utils.hpp"
#include "dse/time_utils.hpp"

namespace dse {

using nlohmann::json;

namespace {

void check_keys(const json& obj, const std::string& section,
                std::initializer_list<const char*> known, std::vector<std::string>& v) {
  for (const auto& [key, value] : obj.items()) {
    bool ok = false;
    for (const char* k : known) ok = ok || key == k;
    if (!ok) v.push_back(section + ": unknown key '" + key + "'");
  }
}

template <typename T>
T get_or(const json& obj, const char* key, T fallback, const std::string& section,
         std::vector<std::string>& v) {
  if (!obj.contains(key)) return fallback;
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    v.push_back(section + "." + key + ": wrong type");
    return fallback;
  }
}

std::filesystem::path get_path(const json& obj, const char* key,
                               const std::filesystem::path& base_dir,
                               const std::string& section, std::vector<std::string>& v) {
  const std::string raw = get_or<std::string>(obj, key, "", section, v);
  if (raw.empty()) return {};
  std::filesystem::path p(raw);
  return p.is_absolute() ? p : base_dir / p;
}

Timestamp get_time(const json& obj, const char* key, Timestamp fallback,
                   const std::string& section, std::vector<std::string>& v) {
  const std::string raw = get_or<std::string>(obj, key, "", section, v);
  if (raw.empty()) return fallback;
  try {
    return parse_rfc3339(raw);
  } catch (const DataError& e) {
    v.push_back(section + "." + key + ": " + e.what());
    return fallback;
  }
}

ClassMix get_mix(const json& obj, const char* key, const std::string& section,
                 std::vector<std::string>& v) {
  ClassMix mix;
  if (!obj.contains(key)) return mix;
  const json& m = obj.at(key);
  if (!m.is_object()) {
    v.push_back(section + "." + key + ": expected an object of label -> weight");
    return mix;
  }
  for (const auto& [label, weight] : m.items()) {  // nlohmann iterates keys sorted
    if (!weight.is_number()) {
      v.push_back(section + "." + key + "." + label + ": weight must be numeric");
      continue;
    }
    mix.emplace_back(label, weight.get<double>());
  }
  return mix;
}

Scenario parse_scenario(const json& obj, std::uint64_t default_seed,
                        std::vector<std::string>& v) {
  const std::string section = "scenario";
  check_keys(obj, section,
             {"dataset_name", "frames", "mean_instances", "scene", "class_mix", "detectors",
              "seed"},
             v);
  Scenario s;
  s.dataset_name = get_or<std::string>(obj, "dataset_name", s.dataset_name, section, v);
  s.frame_count = get_or<std::uint64_t>(obj, "frames", 0, section, v);
  s.mean_instances = get_or<double>(obj, "mean_instances", s.mean_instances, section, v);
  s.seed = get_or<std::uint64_t>(obj, "seed", default_seed, section, v);
  s.class_mix = get_mix(obj, "class_mix", section, v);

  if (obj.contains("scene") && obj.at("scene").is_object()) {
    const json& sc = obj.at("scene");
    check_keys(sc, "scenario.scene",
               {"width", "height", "min_box", "max_box", "max_overlap", "max_retries"}, v);
    s.scene.width = get_or<int>(sc, "width", s.scene.width, "scenario.scene", v);
    s.scene.height = get_or<int>(sc, "height", s.scene.height, "scenario.scene", v);
    s.scene.min_box = get_or<double>(sc, "min_box", s.scene.min_box, "scenario.scene", v);
    s.scene.max_box = get_or<double>(sc, "max_box", s.scene.max_box, "scenario.scene", v);
    s.scene.max_overlap =
        get_or<double>(sc, "max_overlap", s.scene.max_overlap, "scenario.scene", v);
    s.scene.max_retries =
        get_or<int>(sc, "max_retries", s.scene.max_retries, "scenario.scene", v);
  } else if (obj.contains("scene")) {
    v.push_back("scenario.scene: expected an object");
  }

  if (obj.contains("detectors")) {
    const json& ds = obj.at("detectors");
    if (!ds.is_array()) {
      v.push_back("scenario.detectors: expected an array");
    } else {
      for (std::size_t i = 0; i < ds.size(); ++i) {
        const std::string where = "scenario.detectors[" + std::to_string(i) + "]";
        const json& d = ds[i];
        if (!d.is_object()) {
          v.push_back(where + ": expected an object");
          continue;
        }
        check_keys(d, where,
                   {"model_id", "detect_prob", "fp_rate", "loc_jitter", "confidence",
                    "fp_labels", "seed"},
                   v);
        DetectorNoiseModel m;
        m.model_id = get_or<std::string>(d, "model_id", "", where, v);
        m.detect_prob = get_or<double>(d, "detect_prob", m.detect_prob, where, v);
        m.fp_rate = get_or<double>(d, "fp_rate", m.fp_rate, where, v);
        m.loc_jitter = get_or<double>(d, "loc_jitter", m.loc_jitter, where, v);
        m.seed = get_or<std::uint64_t>(d, "seed", s.seed, where, v);
        m.fp_labels =
            get_or<std::vector<std::string>>(d, "fp_labels", {}, where, v);
        if (m.fp_labels.empty()) {
          for (const auto& [label, weight] : s.class_mix) m.fp_labels.push_back(label);
        }
        if (d.contains("confidence") && d.at("confidence").is_object()) {
          const json& c = d.at("confidence");
          const std::string cw = where + ".confidence";
          check_keys(c, cw,
                     {"tp_mean", "tp_stddev", "fp_mean", "fp_stddev", "clamp_lo", "clamp_hi"},
                     v);
          m.confidence.tp_mean = get_or<double>(c, "tp_mean", m.confidence.tp_mean, cw, v);
          m.confidence.tp_stddev =
              get_or<double>(c, "tp_stddev", m.confidence.tp_stddev, cw, v);
          m.confidence.fp_mean = get_or<double>(c, "fp_mean", m.confidence.fp_mean, cw, v);
          m.confidence.fp_stddev =
              get_or<double>(c, "fp_stddev", m.confidence.fp_stddev, cw, v);
          m.confidence.clamp_lo = get_or<double>(c, "clamp_lo", m.confidence.clamp_lo, cw, v);
          m.confidence.clamp_hi = get_or<double>(c, "clamp_hi", m.confidence.clamp_hi, cw, v);
        } else if (d.contains("confidence")) {
          v.push_back(where + ".confidence: expected an object");
        }
        s.detectors.push_back(std::move(m));
      }
    }
  }
  return s;
}

}  // namespace

PipelineConfig parse_pipeline_config(const std::string& text,
                                     const std::filesystem::path& base_dir,
                                     std::vector<std::string>& violations) {
  json root = json::parse(text, nullptr, false);
  if (root.is_discarded() || !root.is_object()) {
    violations.push_back("config: not a JSON object");
    return {};
  }
  check_keys(root, "config",
             {"seed", "workers", "out_dir", "sources", "acquisition", "ensemble", "selection",
              "alignment", "split", "match", "checkpoint", "scenario"},
             violations);

  PipelineConfig cfg;
  cfg.seed = get_or<std::uint64_t>(root, "seed", 0, "config", violations);
  cfg.workers = get_or<int>(root, "workers", 0, "config", violations);
  cfg.out_dir = get_path(root, "out_dir", base_dir, "config", violations);
  if (cfg.out_dir.empty()) cfg.out_dir = base_dir / "out";

  if (root.contains("sources") && root.at("sources").is_object()) {
    const json& s = root.at("sources");
    check_keys(s, "sources",
               {"manifest", "detections", "store", "predictions", "epoch_series",
                "similarity_matrix", "merge_with"},
               violations);
    cfg.sources.manifest = get_path(s, "manifest", base_dir, "sources", violations);
    cfg.sources.predictions = get_path(s, "predictions", base_dir, "sources", violations);
    cfg.sources.epoch_series = get_path(s, "epoch_series", base_dir, "sources", violations);
    cfg.sources.similarity_matrix =
        get_path(s, "similarity_matrix", base_dir, "sources", violations);
    cfg.sources.merge_with = get_path(s, "merge_with", base_dir, "sources", violations);
    if (s.contains("detections")) {
      if (!s.at("detections").is_object()) {
        violations.push_back("sources.detections: expected an object of model -> path");
      } else {
        for (const auto& [model, path] : s.at("detections").items()) {
          if (!path.is_string()) {
            violations.push_back("sources.detections." + model + ": expected a path string");
            continue;
          }
          std::filesystem::path p(path.get<std::string>());
          cfg.sources.detections.emplace_back(model, p.is_absolute() ? p : base_dir / p);
        }
      }
    }
    if (s.contains("store") && s.at("store").is_object()) {
      const json& st = s.at("store");
      check_keys(st, "sources.store", {"locator", "key_pattern"}, violations);
      cfg.sources.store_locator =
          get_or<std::string>(st, "locator", "", "sources.store", violations);
      cfg.sources.key_pattern =
          get_or<std::string>(st, "key_pattern", "", "sources.store", violations);
    } else if (s.contains("store")) {
      violations.push_back("sources.store: expected an object");
    }
  } else if (root.contains("sources")) {
    violations.push_back("sources: expected an object");
  }

  cfg.acquisition.start = Timestamp{std::numeric_limits<std::int64_t>::min()};
  cfg.acquisition.end = Timestamp{std::numeric_limits<std::int64_t>::max()};
  if (root.contains("acquisition") && root.at("acquisition").is_object()) {
    cfg.acquisition_configured = true;
    const json& a = root.at("acquisition");
    check_keys(a, "acquisition", {"start", "end", "stride"}, violations);
    cfg.acquisition.start =
        get_time(a, "start", cfg.acquisition.start, "acquisition", violations);
    cfg.acquisition.end = get_time(a, "end", cfg.acquisition.end, "acquisition", violations);
    cfg.acquisition.stride = get_or<int>(a, "stride", 1, "acquisition", violations);
  } else if (root.contains("acquisition")) {
    violations.push_back("acquisition: expected an object");
  }

  if (root.contains("ensemble") && root.at("ensemble").is_object()) {
    const json& e = root.at("ensemble");
    check_keys(e, "ensemble",
               {"models", "quorum", "iou_threshold", "classes_of_interest", "filter_subset",
                "label_groups"},
               violations);
    cfg.ensemble.model_ids =
        get_or<std::vector<std::string>>(e, "models", {}, "ensemble", violations);
    cfg.ensemble.quorum = get_or<int>(e, "quorum", 1, "ensemble", violations);
    cfg.ensemble.iou_threshold =
        get_or<double>(e, "iou_threshold", 0.5, "ensemble", violations);
    cfg.ensemble.query.classes_of_interest = get_or<std::vector<std::string>>(
        e, "classes_of_interest", {}, "ensemble", violations);
    cfg.ensemble.query.filter_subset =
        get_or<std::vector<std::string>>(e, "filter_subset", {}, "ensemble", violations);
    if (e.contains("label_groups")) {
      if (!e.at("label_groups").is_object()) {
        violations.push_back("ensemble.label_groups: expected an object of label -> group");
      } else {
        for (const auto& [label, group] : e.at("label_groups").items()) {
          if (!group.is_string()) {
            violations.push_back("ensemble.label_groups." + label + ": expected a string");
            continue;
          }
          cfg.ensemble.label_groups[label] = group.get<std::string>();
        }
      }
    }
  } else if (root.contains("ensemble")) {
    violations.push_back("ensemble: expected an object");
  }
  // Defaulting contract: no models -> the detection sources (or the scenario
  // detectors, below); no filter -> every class of interest; no groups -> one
  // shared group (synonym handling is opt-in).
  if (cfg.ensemble.query.filter_subset.empty()) {
    cfg.ensemble.query.filter_subset = cfg.ensemble.query.classes_of_interest;
  }
  if (cfg.ensemble.label_groups.empty()) {
    for (const std::string& c : cfg.ensemble.query.filter_subset) {
      cfg.ensemble.label_groups[c] = "all";
    }
  }

  if (root.contains("selection") && root.at("selection").is_object()) {
    const json& s = root.at("selection");
    check_keys(s, "selection", {"min_instances", "crowd_threshold"}, violations);
    cfg.selection.min_instances =
        get_or<int>(s, "min_instances", cfg.selection.min_instances, "selection", violations);
    cfg.selection.crowd_threshold = get_or<int>(s, "crowd_threshold",
                                                cfg.selection.crowd_threshold, "selection",
                                                violations);
  } else if (root.contains("selection")) {
    violations.push_back("selection: expected an object");
  }

  if (root.contains("alignment") && root.at("alignment").is_object()) {
    const json& a = root.at("alignment");
    check_keys(a, "alignment", {"threshold"}, violations);
    cfg.align_threshold = get_or<double>(a, "threshold", cfg.align_threshold, "alignment",
                                         violations);
  } else if (root.contains("alignment")) {
    violations.push_back("alignment: expected an object");
  }

  cfg.split_seed = cfg.seed;
  if (root.contains("split") && root.at("split").is_object()) {
    const json& s = root.at("split");
    check_keys(s, "split", {"ratios", "seed"}, violations);
    if (s.contains("ratios")) {
      auto ratios =
          get_or<std::vector<double>>(s, "ratios", {}, "split", violations);
      if (ratios.size() == 3) {
        cfg.split_ratios = {ratios[0], ratios[1], ratios[2]};
      } else {
        violations.push_back("split.ratios: expected exactly 3 values (train, val, test)");
      }
    }
    cfg.split_seed = get_or<std::uint64_t>(s, "seed", cfg.seed, "split", violations);
  } else if (root.contains("split")) {
    violations.push_back("split: expected an object");
  }

  if (root.contains("match") && root.at("match").is_object()) {
    const json& m = root.at("match");
    check_keys(m, "match", {"iou_threshold", "confidence_threshold"}, violations);
    cfg.match.iou_threshold =
        get_or<double>(m, "iou_threshold", cfg.match.iou_threshold, "match", violations);
    cfg.match.confidence_threshold = get_or<double>(
        m, "confidence_threshold", cfg.match.confidence_threshold, "match", violations);
  } else if (root.contains("match")) {
    violations.push_back("match: expected an object");
  }

  if (root.contains("checkpoint") && root.at("checkpoint").is_object()) {
    const json& c = root.at("checkpoint");
    check_keys(c, "checkpoint", {"strategy"}, violations);
    const std::string strategy =
        get_or<std::string>(c, "strategy", "best(map)", "checkpoint", violations);
    try {
      cfg.checkpoint = parse_strategy(strategy);
    } catch (const ConfigError& e) {
      violations.push_back(std::string("checkpoint.strategy: ") + e.what());
    }
  } else if (root.contains("checkpoint")) {
    violations.push_back("checkpoint: expected an object");
  }

  if (root.contains("scenario")) {
    if (!root.at("scenario").is_object()) {
      violations.push_back("scenario: expected an object");
    } else {
      cfg.scenario = parse_scenario(root.at("scenario"), cfg.seed, violations);
    }
  }

  if (cfg.ensemble.model_ids.empty()) {
    if (!cfg.sources.detections.empty()) {
      for (const auto& [model, path] : cfg.sources.detections) {
        cfg.ensemble.model_ids.push_back(model);
      }
    } else if (cfg.scenario) {
      for (const DetectorNoiseModel& d : cfg.scenario->detectors) {
        cfg.ensemble.model_ids.push_back(d.model_id);
      }
    }
  }
  return cfg;
}

std::vector<std::string> validate_pipeline_config(const PipelineConfig& config) {
  std::vector<std::string> v;
  if (config.workers < 0) v.push_back("workers must be >= 0");
  if (config.acquisition.stride < 1) v.push_back("acquisition.stride must be >= 1");

  // The ensemble only has to hold together when something can feed it.
  if (!config.sources.detections.empty() || config.scenario) {
    for (std::string& msg : config.ensemble.validate()) v.push_back(std::move(msg));
  }
  for (std::string& msg : config.selection.validate()) v.push_back(std::move(msg));
  for (std::string& msg : config.match.validate()) v.push_back(std::move(msg));
  if (!(config.align_threshold > 0.0 && config.align_threshold <= 1.0)) {
    v.push_back("alignment.threshold must be in (0,1]");
  }

  double ratio_sum = 0.0;
  bool ratios_ok = true;
  for (double r : config.split_ratios) {
    if (!(r >= 0.0)) {
      v.push_back("BadRatios: split ratios must be non-negative");
      ratios_ok = false;
      break;
    }
    ratio_sum += r;
  }
  if (ratios_ok && std::abs(ratio_sum - 1.0) > 1e-9) {
    v.push_back("BadRatios: split ratios must sum to 1");
  }

  if (config.scenario) {
    for (std::string& msg : config.scenario->validate()) v.push_back(std::move(msg));
  }

  auto check_file = [&v](const std::filesystem::path& p, const std::string& what) {
    if (!p.empty() && !std::filesystem::exists(p)) {
      v.push_back(what + ": file not found: " + p.string());
    }
  };
  check_file(config.sources.manifest, "sources.manifest");
  check_file(config.sources.predictions, "sources.predictions");
  check_file(config.sources.epoch_series, "sources.epoch_series");
  check_file(config.sources.similarity_matrix, "sources.similarity_matrix");
  check_file(config.sources.merge_with, "sources.merge_with");
  for (const auto& [model, path] : config.sources.detections) {
    check_file(path, "sources.detections." + model);
  }
  return v;
}

PipelineConfig load_pipeline_config(const std::filesystem::path& path) {
  std::string text;
  try {
    text = read_text_file(path);
  } catch (const DataError& e) {
    throw ConfigError(e.what());  // a missing config file is a usage problem
  }
  std::vector<std::string> violations;
  PipelineConfig cfg =
      parse_pipeline_config(text, std::filesystem::absolute(path).parent_path(), violations);
  for (std::string& msg : validate_pipeline_config(cfg)) violations.push_back(std::move(msg));
  if (!violations.empty()) throw ConfigInvalid(std::move(violations));
  return cfg;
}

void override_seeds(PipelineConfig& config, std::uint64_t seed) {
  config.seed = seed;
  config.split_seed = seed;
  if (config.scenario) {
    config.scenario->seed = seed;
    for (DetectorNoiseModel& d : config.scenario->detectors) d.seed = seed;
  }
}

std::string effective_config_json(const PipelineConfig& config) {
  json sources = {{"manifest", config.sources.manifest.generic_string()},
                  {"predictions", config.sources.predictions.generic_string()},
                  {"epoch_series", config.sources.epoch_series.generic_string()},
                  {"similarity_matrix", config.sources.similarity_matrix.generic_string()},
                  {"merge_with", config.sources.merge_with.generic_string()}};
  json detections = json::object();
  for (const auto& [model, path] : config.sources.detections) {
    detections[model] = path.generic_string();
  }
  sources["detections"] = detections;
  sources["store"] = {{"locator", config.sources.store_locator},
                      {"key_pattern", config.sources.key_pattern}};

  json label_groups = json::object();
  for (const auto& [label, group] : config.ensemble.label_groups) {
    label_groups[label] = group;
  }

  constexpr std::int64_t kMin = std::numeric_limits<std::int64_t>::min();
  constexpr std::int64_t kMax = std::numeric_limits<std::int64_t>::max();
  json acquisition = {
      {"start", config.acquisition.start.micros == kMin
                    ? ""
                    : format_rfc3339(config.acquisition.start)},
      {"end",
       config.acquisition.end.micros == kMax ? "" : format_rfc3339(config.acquisition.end)},
      {"stride", config.acquisition.stride}};

  json j = {
      {"seed", config.seed},
      {"workers", config.workers},
      {"out_dir", config.out_dir.generic_string()},
      {"sources", sources},
      {"acquisition", acquisition},
      {"ensemble",
       {{"models", config.ensemble.model_ids},
        {"quorum", config.ensemble.quorum},
        {"iou_threshold", config.ensemble.iou_threshold},
        {"classes_of_interest", config.ensemble.query.classes_of_interest},
        {"filter_subset", config.ensemble.query.filter_subset},
        {"label_groups", label_groups}}},
      {"selection",
       {{"min_instances", config.selection.min_instances},
        {"crowd_threshold", config.selection.crowd_threshold}}},
      {"alignment", {{"threshold", config.align_threshold}}},
      {"split",
       {{"ratios", config.split_ratios}, {"seed", config.split_seed}}},
      {"match",
       {{"iou_threshold", config.match.iou_threshold},
        {"confidence_threshold", config.match.confidence_threshold}}},
      {"checkpoint", {{"strategy", config.checkpoint.describe()}}},
  };
  if (config.scenario) {
    const Scenario& s = *config.scenario;
    json mix = json::object();
    for (const auto& [label, weight] : s.class_mix) mix[label] = weight;
    json detectors = json::array();
    for (const DetectorNoiseModel& d : s.detectors) {
      detectors.push_back({{"model_id", d.model_id},
                           {"detect_prob", d.detect_prob},
                           {"fp_rate", d.fp_rate},
                           {"loc_jitter", d.loc_jitter},
                           {"confidence",
                            {{"tp_mean", d.confidence.tp_mean},
                             {"tp_stddev", d.confidence.tp_stddev},
                             {"fp_mean", d.confidence.fp_mean},
                             {"fp_stddev", d.confidence.fp_stddev},
                             {"clamp_lo", d.confidence.clamp_lo},
                             {"clamp_hi", d.confidence.clamp_hi}}},
                           {"fp_labels", d.fp_labels},
                           {"seed", d.seed}});
    }
    j["scenario"] = {{"dataset_name", s.dataset_name},
                     {"frames", s.frame_count},
                     {"mean_instances", s.mean_instances},
                     {"scene",
                      {{"width", s.scene.width},
                       {"height", s.scene.height},
                       {"min_box", s.scene.min_box},
                       {"max_box", s.scene.max_box},
                       {"max_overlap", s.scene.max_overlap},
                       {"max_retries", s.scene.max_retries}}},
                     {"class_mix", mix},
                     {"detectors", detectors},
                     {"seed", s.seed}};
  }
  return j.dump(2) + "\n";
}

}  // namespace dse
