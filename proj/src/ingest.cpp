// SPDX-License-Identifier: Apache-2.0
#include "dse/ingest.hpp"

#include <algorithm>
#include <regex>
#include <set>
#include <sstream>

#include "json.hpp"

#include "dse/errors.hpp"
#include "dse/io_utils.hpp"

namespace dse {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json parse_line(const std::string& line, const fs::path& path, std::size_t lineno) {
  json j = json::parse(line, nullptr, false);
  if (j.is_discarded() || !j.is_object()) {
    throw ParseError(path.string() + ":" + std::to_string(lineno) + ": malformed JSON record");
  }
  return j;
}

// Splits file content into non-empty lines; requires at least the header.
std::vector<std::string> read_lines(const fs::path& path) {
  const std::string content = read_text_file(path);
  std::vector<std::string> lines;
  std::istringstream in(content);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) lines.push_back(line);
  }
  if (lines.empty()) throw ParseError(path.string() + ": empty file, header expected");
  return lines;
}

double require_number(const json& j, const char* key, const fs::path& path,
                      std::size_t lineno) {
  auto it = j.find(key);
  if (it == j.end() || !it->is_number()) {
    throw ParseError(path.string() + ":" + std::to_string(lineno) + ": missing numeric field '" +
                     key + "'");
  }
  return it->get<double>();
}

std::string require_string(const json& j, const char* key, const fs::path& path,
                           std::size_t lineno) {
  auto it = j.find(key);
  if (it == j.end() || !it->is_string()) {
    throw ParseError(path.string() + ":" + std::to_string(lineno) + ": missing string field '" +
                     key + "'");
  }
  return it->get<std::string>();
}

json box_to_json(const BoundingBox& b) {
  return json{b.x_min, b.y_min, b.x_max, b.y_max};
}

BoundingBox box_from_json(const json& j, const fs::path& path, std::size_t lineno) {
  if (!j.is_array() || j.size() != 4 || !j[0].is_number() || !j[1].is_number() ||
      !j[2].is_number() || !j[3].is_number()) {
    throw ParseError(path.string() + ":" + std::to_string(lineno) +
                     ": box must be [x_min,y_min,x_max,y_max]");
  }
  return BoundingBox{j[0].get<double>(), j[1].get<double>(), j[2].get<double>(),
                     j[3].get<double>()};
}

// Raw record coordinates interpreted per convention. For "cxcywh" the four
// fields hold center x, center y, width, height.
BoundingBox convert_box(double a, double b, double c, double d,
                        const std::string& convention, const Frame& frame,
                        const fs::path& path, std::size_t lineno) {
  if (convention == "xyxy" || convention.empty()) {
    return BoundingBox{a, b, c, d};
  }
  if (convention == "cxcywh") {
    return BoundingBox{a - c / 2.0, b - d / 2.0, a + c / 2.0, b + d / 2.0};
  }
  if (convention == "norm_xyxy") {
    return BoundingBox{a * frame.width, b * frame.height, c * frame.width, d * frame.height};
  }
  throw ParseError(path.string() + ":" + std::to_string(lineno) + ": unknown coordinate convention '" +
                   convention + "'");
}

}  // namespace

DatasetManifest load_manifest(const fs::path& path) {
  const auto lines = read_lines(path);
  json header = parse_line(lines[0], path, 1);
  if (header.value("type", "") != "manifest") {
    throw ParseError(path.string() + ": header line must declare \"type\":\"manifest\"");
  }

  DatasetManifest m;
  m.name = header.value("name", "");
  m.provenance = header.value("provenance", "");
  if (header.contains("class_set")) {
    for (const auto& c : header.at("class_set")) m.class_set.push_back(c.get<std::string>());
  }
  const std::set<std::string> classes(m.class_set.begin(), m.class_set.end());

  std::set<std::string> seen_ids;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const std::size_t lineno = i + 1;
    json j = parse_line(lines[i], path, lineno);
    Frame f;
    f.frame_id = require_string(j, "frame_id", path, lineno);
    f.source_id = j.value("source_id", "");
    f.timestamp = parse_rfc3339(require_string(j, "timestamp", path, lineno));
    f.width = static_cast<int>(require_number(j, "width", path, lineno));
    f.height = static_cast<int>(require_number(j, "height", path, lineno));
    if (f.width <= 0 || f.height <= 0) {
      throw ParseError(path.string() + ":" + std::to_string(lineno) +
                       ": frame dimensions must be positive");
    }
    if (!seen_ids.insert(f.frame_id).second) {
      throw DuplicateFrameId(path.string() + ": duplicate frame_id '" + f.frame_id + "'");
    }
    if (j.contains("tags")) {
      for (const auto& t : j.at("tags")) f.tags.insert(t.get<std::string>());
    }
    if (j.contains("ground_truth")) {
      std::vector<GroundTruthBox> gt;
      for (const auto& g : j.at("ground_truth")) {
        GroundTruthBox box;
        box.label = require_string(g, "label", path, lineno);
        if (box.label.empty()) {
          throw ParseError(path.string() + ":" + std::to_string(lineno) + ": empty label");
        }
        if (!classes.count(box.label)) {
          throw UnknownLabel(path.string() + ": ground-truth label '" + box.label +
                             "' missing from class_set");
        }
        BoundingBox raw = box_from_json(g.at("box"), path, lineno);
        auto clamped = clamp_box(raw, f.width, f.height);
        if (!clamped) {
          throw ParseError(path.string() + ":" + std::to_string(lineno) +
                           ": degenerate ground-truth box for frame '" + f.frame_id + "'");
        }
        box.box = *clamped;
        gt.push_back(std::move(box));
      }
      f.ground_truth = std::move(gt);
    }
    m.frames.push_back(std::move(f));
  }
  return m;
}

std::string manifest_to_jsonl(const DatasetManifest& manifest) {
  std::string out;
  json header;
  header["type"] = "manifest";
  header["name"] = manifest.name;
  header["class_set"] = manifest.class_set;
  header["provenance"] = manifest.provenance;
  out += header.dump();
  out += '\n';
  for (const Frame& f : manifest.frames) {
    json j;
    j["frame_id"] = f.frame_id;
    j["source_id"] = f.source_id;
    j["timestamp"] = format_rfc3339(f.timestamp);
    j["width"] = f.width;
    j["height"] = f.height;
    if (!f.tags.empty()) j["tags"] = f.tags;
    if (f.ground_truth) {
      json gt = json::array();
      for (const GroundTruthBox& g : *f.ground_truth) {
        gt.push_back(json{{"label", g.label}, {"box", box_to_json(g.box)}});
      }
      j["ground_truth"] = std::move(gt);
    }
    out += j.dump();
    out += '\n';
  }
  return out;
}

void save_manifest(const DatasetManifest& manifest, const fs::path& path) {
  atomic_write_text(path, manifest_to_jsonl(manifest));
}

DetectionLoadResult load_detections(const fs::path& path, const DatasetManifest& manifest) {
  const auto lines = read_lines(path);
  json header = parse_line(lines[0], path, 1);
  if (header.value("type", "") != "detections") {
    throw ParseError(path.string() + ": header line must declare \"type\":\"detections\"");
  }

  DetectionLoadResult result;
  result.model_id = header.value("model_id", "");

  std::map<std::string, const Frame*> frames;
  for (const Frame& f : manifest.frames) frames.emplace(f.frame_id, &f);

  for (std::size_t i = 1; i < lines.size(); ++i) {
    const std::size_t lineno = i + 1;
    json j = parse_line(lines[i], path, lineno);
    const std::string frame_id = require_string(j, "frame_id", path, lineno);
    auto frame_it = frames.find(frame_id);
    if (frame_it == frames.end()) {
      ++result.orphaned;
      continue;
    }
    const Frame& frame = *frame_it->second;

    Detection d;
    d.frame_id = frame_id;
    d.model_id = j.value("model_id", result.model_id);
    d.label = require_string(j, "label", path, lineno);
    if (d.label.empty()) {
      throw ParseError(path.string() + ":" + std::to_string(lineno) + ": empty label");
    }
    d.confidence = require_number(j, "confidence", path, lineno);
    if (!(d.confidence >= 0.0 && d.confidence <= 1.0)) {
      throw ParseError(path.string() + ":" + std::to_string(lineno) +
                       ": confidence outside [0,1]");
    }
    const double a = require_number(j, "x_min", path, lineno);
    const double b = require_number(j, "y_min", path, lineno);
    const double c = require_number(j, "x_max", path, lineno);
    const double e = require_number(j, "y_max", path, lineno);
    const std::string convention = j.value("convention", "xyxy");
    BoundingBox raw = convert_box(a, b, c, e, convention, frame, path, lineno);
    auto clamped = clamp_box(raw, frame.width, frame.height);
    if (!clamped) {
      ++result.degenerate;
      continue;
    }
    d.box = *clamped;
    result.by_frame[frame_id].push_back(std::move(d));
    ++result.total;
  }
  return result;
}

std::string detections_to_jsonl(std::span<const Detection> detections,
                                const std::string& model_id) {
  std::string out;
  json header;
  header["type"] = "detections";
  header["model_id"] = model_id;
  out += header.dump();
  out += '\n';
  for (const Detection& d : detections) {
    json j;
    j["frame_id"] = d.frame_id;
    if (d.model_id != model_id) j["model_id"] = d.model_id;
    j["label"] = d.label;
    j["confidence"] = d.confidence;
    j["x_min"] = d.box.x_min;
    j["y_min"] = d.box.y_min;
    j["x_max"] = d.box.x_max;
    j["y_max"] = d.box.y_max;
    out += j.dump();
    out += '\n';
  }
  return out;
}

void save_detections(std::span<const Detection> detections, const std::string& model_id,
                     const fs::path& path) {
  atomic_write_text(path, detections_to_jsonl(detections, model_id));
}

DetectionLoadResult load_coco_results(const fs::path& results_path,
                                      const fs::path& sidecar_path,
                                      const DatasetManifest& manifest) {
  json sidecar = json::parse(read_text_file(sidecar_path), nullptr, false);
  if (sidecar.is_discarded() || !sidecar.is_object()) {
    throw ParseError(sidecar_path.string() + ": malformed sidecar");
  }
  DetectionLoadResult result;
  result.model_id = sidecar.value("model_id", "");
  std::map<std::string, std::string> categories;
  if (!sidecar.contains("categories") || !sidecar.at("categories").is_object()) {
    throw ParseError(sidecar_path.string() + ": sidecar needs a \"categories\" map");
  }
  for (const auto& [key, value] : sidecar.at("categories").items()) {
    categories[key] = value.get<std::string>();
  }
  std::map<std::string, std::string> image_ids;
  if (sidecar.contains("images")) {
    for (const auto& [key, value] : sidecar.at("images").items()) {
      image_ids[key] = value.get<std::string>();
    }
  }

  json records = json::parse(read_text_file(results_path), nullptr, false);
  if (records.is_discarded() || !records.is_array()) {
    throw ParseError(results_path.string() + ": COCO results must be a JSON array");
  }

  std::map<std::string, const Frame*> frames;
  for (const Frame& f : manifest.frames) frames.emplace(f.frame_id, &f);

  std::size_t index = 0;
  for (const auto& rec : records) {
    ++index;
    const std::string where = results_path.string() + " record " + std::to_string(index);
    if (!rec.is_object() || !rec.contains("image_id") || !rec.contains("category_id") ||
        !rec.contains("bbox") || !rec.contains("score")) {
      throw ParseError(where + ": expected {image_id, category_id, bbox, score}");
    }
    const std::string image_key = rec.at("image_id").is_string()
                                      ? rec.at("image_id").get<std::string>()
                                      : std::to_string(rec.at("image_id").get<long long>());
    const std::string frame_id =
        image_ids.count(image_key) ? image_ids.at(image_key) : image_key;

    const std::string cat_key = rec.at("category_id").is_string()
                                    ? rec.at("category_id").get<std::string>()
                                    : std::to_string(rec.at("category_id").get<long long>());
    auto cat_it = categories.find(cat_key);
    if (cat_it == categories.end()) {
      throw ParseError(where + ": category_id " + cat_key + " missing from sidecar");
    }

    auto frame_it = frames.find(frame_id);
    if (frame_it == frames.end()) {
      ++result.orphaned;
      continue;
    }
    const Frame& frame = *frame_it->second;

    const json& bbox = rec.at("bbox");
    if (!bbox.is_array() || bbox.size() != 4) {
      throw ParseError(where + ": bbox must be [x,y,w,h]");
    }
    const double x = bbox[0].get<double>();
    const double y = bbox[1].get<double>();
    const double w = bbox[2].get<double>();
    const double h = bbox[3].get<double>();

    Detection d;
    d.frame_id = frame_id;
    d.model_id = result.model_id;
    d.label = cat_it->second;
    d.confidence = rec.at("score").get<double>();
    if (!(d.confidence >= 0.0 && d.confidence <= 1.0)) {
      throw ParseError(where + ": score outside [0,1]");
    }
    auto clamped = clamp_box(BoundingBox{x, y, x + w, y + h}, frame.width, frame.height);
    if (!clamped) {
      ++result.degenerate;
      continue;
    }
    d.box = *clamped;
    result.by_frame[frame_id].push_back(std::move(d));
    ++result.total;
  }
  return result;
}

DatasetManifest filter_by_time(const DatasetManifest& manifest,
                               const AcquisitionFilter& filter) {
  DatasetManifest out;
  out.name = manifest.name;
  out.class_set = manifest.class_set;
  out.provenance = manifest.provenance;

  std::vector<const Frame*> in_range;
  for (const Frame& f : manifest.frames) {
    if (filter.start <= f.timestamp && f.timestamp <= filter.end) in_range.push_back(&f);
  }
  const std::size_t stride = filter.stride < 1 ? 1 : static_cast<std::size_t>(filter.stride);
  for (std::size_t i = 0; i < in_range.size(); i += stride) {
    out.frames.push_back(*in_range[i]);
  }
  return out;
}

ObjectListing list_remote_objects(const std::string& locator,
                                  const AcquisitionFilter& filter,
                                  const std::string& key_pattern) {
  std::string root = locator;
  if (root.rfind("file://", 0) == 0) root = root.substr(7);
  std::error_code ec;
  if (root.empty() || !fs::is_directory(root, ec)) {
    throw SourceUnreachable("object store not reachable: '" + locator + "'");
  }

  std::regex pattern;
  try {
    pattern = std::regex(key_pattern);
  } catch (const std::regex_error& e) {
    throw ConfigError("bad key pattern '" + key_pattern + "': " + e.what());
  }

  std::vector<std::string> keys;
  for (auto it = fs::recursive_directory_iterator(root, ec);
       it != fs::recursive_directory_iterator(); ++it) {
    if (it->is_regular_file()) {
      keys.push_back(fs::relative(it->path(), root).generic_string());
    }
  }
  std::sort(keys.begin(), keys.end());

  ObjectListing listing;
  std::vector<std::string> in_range;
  for (const std::string& key : keys) {
    std::smatch match;
    if (!std::regex_search(key, match, pattern) || match.size() < 2) {
      ++listing.unparseable;
      continue;
    }
    Timestamp ts;
    try {
      ts = parse_rfc3339(match[1].str());
    } catch (const ParseError&) {
      ++listing.unparseable;
      continue;
    }
    if (filter.start <= ts && ts <= filter.end) in_range.push_back(key);
  }
  const std::size_t stride = filter.stride < 1 ? 1 : static_cast<std::size_t>(filter.stride);
  for (std::size_t i = 0; i < in_range.size(); i += stride) {
    listing.keys.push_back(in_range[i]);
  }
  return listing;
}

}  // namespace dse
