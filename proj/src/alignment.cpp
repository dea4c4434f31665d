// SPDX-License-Identifier: Apache-2.0
#include "dse/alignment.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "json.hpp"

#include "dse/errors.hpp"
#include "dse/io_utils.hpp"
#include "dse/rng.hpp"

namespace dse {

using nlohmann::json;

void SimilarityMatrix::validate() const {
  if (values.size() != source_classes.size()) {
    throw DataError("similarity matrix: row count does not match source classes");
  }
  for (const auto& row : values) {
    if (row.size() != target_classes.size()) {
      throw DataError("similarity matrix: row width does not match target classes");
    }
    for (double v : row) {
      if (!(v >= 0.0 && v <= 1.0)) {
        throw DataError("similarity matrix: score outside [0,1]");
      }
    }
  }
}

SimilarityMatrix load_similarity_matrix(const std::filesystem::path& path) {
  json j = json::parse(read_text_file(path), nullptr, false);
  if (j.is_discarded() || !j.is_object()) {
    throw ParseError(path.string() + ": malformed similarity matrix");
  }
  SimilarityMatrix m;
  try {
    m.source_classes = j.at("source_classes").get<std::vector<std::string>>();
    m.target_classes = j.at("target_classes").get<std::vector<std::string>>();
    m.values = j.at("values").get<std::vector<std::vector<double>>>();
  } catch (const json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  m.validate();
  return m;
}

const AlignmentDecision* AlignmentMap::find(const std::string& source) const {
  for (const AlignmentDecision& d : decisions) {
    if (d.source == source) return &d;
  }
  return nullptr;
}

AlignmentMap build_alignment(const SimilarityMatrix& matrix, double threshold) {
  matrix.validate();
  AlignmentMap map;
  map.threshold = threshold;
  for (std::size_t i = 0; i < matrix.source_classes.size(); ++i) {
    const auto& row = matrix.values[i];
    AlignmentDecision decision;
    decision.source = matrix.source_classes[i];
    std::size_t best = 0;
    for (std::size_t jx = 1; jx < row.size(); ++jx) {
      if (row[jx] > row[best]) best = jx;  // ties keep the earlier target
    }
    if (!row.empty()) {
      decision.score = row[best];
      if (row[best] >= threshold) decision.target = matrix.target_classes[best];
    }
    map.decisions.push_back(std::move(decision));
  }
  return map;
}

namespace {

// Mapped target, retained original, or UnknownSourceClass when strict and the
// label is neither mapped nor already a target class.
std::string transform_label(const std::string& label, const AlignmentMap& map,
                            const std::set<std::string>& targets, bool strict) {
  if (const AlignmentDecision* d = map.find(label)) {
    return d->target ? *d->target : label;
  }
  if (strict && !targets.count(label)) {
    throw UnknownSourceClass("label '" + label + "' is neither a source nor a target class");
  }
  return label;
}

}  // namespace

DatasetManifest apply_alignment(const DatasetManifest& manifest, const AlignmentMap& map) {
  std::set<std::string> targets;
  for (const AlignmentDecision& d : map.decisions) {
    if (d.target) targets.insert(*d.target);
  }

  DatasetManifest out = manifest;
  for (Frame& f : out.frames) {
    if (!f.ground_truth) continue;
    for (GroundTruthBox& g : *f.ground_truth) {
      g.label = transform_label(g.label, map, targets, /*strict=*/true);
    }
  }
  // class_set follows the same mapping; classes the map does not mention pass
  // through so unused classes survive alignment.
  std::vector<std::string> classes;
  std::set<std::string> seen;
  for (const std::string& c : manifest.class_set) {
    std::string mapped = transform_label(c, map, targets, /*strict=*/false);
    if (seen.insert(mapped).second) classes.push_back(std::move(mapped));
  }
  out.class_set = std::move(classes);
  return out;
}

DatasetManifest merge_datasets(const DatasetManifest& a, const DatasetManifest& b) {
  if (a.class_set != b.class_set) {
    throw SchemeMismatch("cannot merge '" + a.name + "' and '" + b.name +
                         "': class schemes differ");
  }
  DatasetManifest out;
  out.name = a.name + "+" + b.name;
  out.class_set = a.class_set;
  out.provenance = "merge(" + a.provenance + "; " + b.provenance + ")";

  std::set<std::string> ids;
  for (const Frame& f : a.frames) {
    ids.insert(f.frame_id);
    out.frames.push_back(f);
  }
  for (const Frame& f : b.frames) {
    if (!ids.insert(f.frame_id).second) {
      throw DuplicateFrameId("merge: frame_id '" + f.frame_id + "' exists in both datasets");
    }
    out.frames.push_back(f);
  }
  return out;
}

std::array<DatasetManifest, 3> split_dataset(const DatasetManifest& manifest,
                                             const std::array<double, 3>& ratios,
                                             std::uint64_t seed) {
  double sum = 0.0;
  bool any_positive = false;
  for (double r : ratios) {
    if (!(r >= 0.0)) throw BadRatios("split ratios must be non-negative");
    if (r > 0.0) any_positive = true;
    sum += r;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw BadRatios("split ratios must sum to 1");
  if (!any_positive) throw BadRatios("at least one split ratio must be positive");

  const std::size_t n = manifest.frames.size();
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;

  // Fisher-Yates with our own stream; std::shuffle output is
  // implementation-defined and would break bit-for-bit reproducibility.
  rng::Stream stream = rng::Stream::keyed(seed, "split", manifest.name);
  for (std::size_t i = n; i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(stream.below(i));
    std::swap(order[i - 1], order[j]);
  }

  // Largest-remainder apportionment: floors first, leftovers to the largest
  // fractional parts (ties to the earlier split).
  std::array<std::size_t, 3> sizes{};
  std::array<double, 3> fraction{};
  std::size_t assigned = 0;
  for (int k = 0; k < 3; ++k) {
    const double exact = static_cast<double>(n) * ratios[k];
    sizes[k] = static_cast<std::size_t>(std::floor(exact));
    fraction[k] = exact - std::floor(exact);
    assigned += sizes[k];
  }
  std::array<int, 3> by_fraction{0, 1, 2};
  std::stable_sort(by_fraction.begin(), by_fraction.end(),
                   [&](int a, int b) { return fraction[a] > fraction[b]; });
  for (std::size_t leftover = n - assigned, k = 0; leftover > 0; --leftover, ++k) {
    ++sizes[by_fraction[k % 3]];
  }

  static constexpr const char* kSplitNames[3] = {"train", "val", "test"};
  std::array<DatasetManifest, 3> out;
  std::size_t cursor = 0;
  for (int k = 0; k < 3; ++k) {
    out[k].name = manifest.name + "-" + kSplitNames[k];
    out[k].class_set = manifest.class_set;
    out[k].provenance = "split(" + std::string(kSplitNames[k]) + ", seed=" +
                        std::to_string(seed) + ") of " + manifest.name;
    for (std::size_t i = 0; i < sizes[k]; ++i, ++cursor) {
      out[k].frames.push_back(manifest.frames[order[cursor]]);
    }
  }
  return out;
}

}  // namespace dse
