// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "dse/model.hpp"

namespace dse {

// Date-range filter with stride downsampling: keep frames with
// start <= timestamp <= end, then every stride-th survivor.
struct AcquisitionFilter {
  Timestamp start;
  Timestamp end;
  int stride = 1;
};

// Manifest file: one JSON header line ({"type":"manifest",...}) followed by
// one JSON frame record per line. save_manifest emits the canonical form
// (sorted keys, compact separators), so save(load(p)) round-trips byte-exact
// for canonical files.
DatasetManifest load_manifest(const std::filesystem::path& path);
std::string manifest_to_jsonl(const DatasetManifest& manifest);
void save_manifest(const DatasetManifest& manifest, const std::filesystem::path& path);

struct DetectionLoadResult {
  std::string model_id;
  std::map<std::string, std::vector<Detection>> by_frame;  // file order per frame
  std::size_t orphaned = 0;    // records whose frame_id is not in the manifest
  std::size_t degenerate = 0;  // records whose box collapsed during clamping
  std::size_t total = 0;       // records kept
};

// Detection file: JSON header line ({"type":"detections","model_id":...})
// followed by one record per line. Records carry a coordinate convention
// ("xyxy" absolute corners, default; "cxcywh" absolute center/size;
// "norm_xyxy" corners normalized to [0,1]); everything is converted to
// absolute corners and clamped against the owning frame. Orphaned and
// degenerate records are counted, not fatal.
DetectionLoadResult load_detections(const std::filesystem::path& path,
                                    const DatasetManifest& manifest);

std::string detections_to_jsonl(std::span<const Detection> detections,
                                const std::string& model_id);
void save_detections(std::span<const Detection> detections, const std::string& model_id,
                     const std::filesystem::path& path);

// COCO results import: a JSON array of {image_id, category_id, bbox [x,y,w,h],
// score} plus a sidecar {"model_id":..., "categories": {"<id>": "<label>"},
// "images": {"<id>": "<frame_id>"}} (the images map is optional; image ids
// stringify directly when absent).
DetectionLoadResult load_coco_results(const std::filesystem::path& results_path,
                                      const std::filesystem::path& sidecar_path,
                                      const DatasetManifest& manifest);

DatasetManifest filter_by_time(const DatasetManifest& manifest,
                               const AcquisitionFilter& filter);

struct ObjectListing {
  std::vector<std::string> keys;  // lexicographic, range-filtered, strided
  std::size_t unparseable = 0;    // keys whose timestamp could not be read
};

// Lists keys under a local object-store root (plain directory path or
// file:// locator). key_pattern is a regex whose first capture group holds
// an RFC 3339 timestamp embedded in the key.
ObjectListing list_remote_objects(const std::string& locator,
                                  const AcquisitionFilter& filter,
                                  const std::string& key_pattern);

}  // namespace dse
