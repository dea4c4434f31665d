// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <map>
#include <set>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "doctest.h"
#include "dse/consensus.hpp"
#include "dse/errors.hpp"
#include "dse/rng.hpp"
#include "oracles.hpp"

using namespace dse;

namespace {

Detection det(std::string model, std::string label, double conf, BoundingBox box) {
  return Detection{"f", std::move(model), std::move(label), conf, box};
}

EnsembleConfig vru_config(int n_models, int quorum, double tau = 0.5) {
  EnsembleConfig cfg;
  for (int m = 0; m < n_models; ++m) cfg.model_ids.push_back("m" + std::to_string(m));
  cfg.quorum = quorum;
  cfg.iou_threshold = tau;
  cfg.query.classes_of_interest = {"person", "pedestrian", "car"};
  cfg.query.filter_subset = {"person", "pedestrian", "car"};
  cfg.label_groups = {{"person", "vru"}, {"pedestrian", "vru"}, {"car", "vehicle"}};
  return cfg;
}

struct Instance {
  EnsembleConfig config;
  std::vector<GroupedDetection> dets;
};

// Small coordinate grid and quantized confidences so overlaps and ties are
// common; that is where greedy clustering earns its tie-break rules.
Instance random_instance(rng::Stream& r) {
  const int n_models = 1 + static_cast<int>(r.below(5));
  Instance inst;
  inst.config = vru_config(n_models, 1 + static_cast<int>(r.below(n_models)));
  const double taus[] = {0.3, 0.5, 0.7};
  inst.config.iou_threshold = taus[r.below(3)];

  const char* labels[] = {"person", "pedestrian", "car"};
  const std::size_t count = r.below(11);
  std::vector<Detection> raw;
  for (std::size_t i = 0; i < count; ++i) {
    const double x = static_cast<double>(r.below(30));
    const double y = static_cast<double>(r.below(30));
    const double w = static_cast<double>(5 + r.below(26));
    const double h = static_cast<double>(5 + r.below(26));
    raw.push_back(det("m" + std::to_string(r.below(n_models)), labels[r.below(3)],
                      static_cast<double>(1 + r.below(64)) / 64.0,
                      BoundingBox{x, y, x + w, y + h}));
  }
  inst.dets = filter_to_query(raw, inst.config.query, inst.config.label_groups);
  return inst;
}

std::multiset<std::tuple<std::string, double, double, double>> membership(
    std::span<const ConsensusCluster> clusters) {
  std::multiset<std::tuple<std::string, double, double, double>> out;
  for (const auto& c : clusters) {
    for (const auto& [model, s] : c.supporters) {
      out.insert({model, s.det.confidence, s.det.box.x_min, s.det.box.y_min});
    }
  }
  return out;
}

}  // namespace

TEST_SUITE("consensus") {

TEST_CASE("ensemble validation reports every violation at once") {
  EnsembleConfig cfg = vru_config(5, 3);
  CHECK(cfg.validate().empty());

  cfg.quorum = 6;
  cfg.iou_threshold = 0.0;
  cfg.query.filter_subset.push_back("bicycle");  // not of interest, not grouped
  const auto problems = cfg.validate();
  CHECK(problems.size() == 4);

  EnsembleConfig empty;
  empty.model_ids = {};
  empty.query.filter_subset = {};
  CHECK_FALSE(empty.validate().empty());

  EnsembleConfig dup = vru_config(2, 1);
  dup.model_ids = {"m0", "m0"};
  bool mentions_duplicate = false;
  for (const auto& p : dup.validate()) {
    if (p.find("duplicate") != std::string::npos) mentions_duplicate = true;
  }
  CHECK(mentions_duplicate);
}

TEST_CASE("filter_to_query keeps subset labels in order with groups") {
  const ClassQuery query{{"person", "pedestrian", "car"}, {"person", "pedestrian"}};
  const std::map<std::string, std::string> groups{{"person", "vru"},
                                                  {"pedestrian", "vru"}};
  std::vector<Detection> dets = {
      det("m0", "person", 0.9, {0, 0, 10, 10}),
      det("m1", "car", 0.8, {20, 20, 30, 30}),
      det("m2", "pedestrian", 0.7, {5, 5, 15, 15}),
  };
  const auto kept = filter_to_query(dets, query, groups);
  REQUIRE(kept.size() == 2);
  CHECK(kept[0].det.label == "person");
  CHECK(kept[0].group == "vru");
  CHECK(kept[1].det.label == "pedestrian");
  CHECK(kept[1].group == "vru");

  CHECK(filter_to_query({}, query, groups).empty());
  std::vector<Detection> outside = {det("m0", "car", 0.9, {0, 0, 10, 10})};
  CHECK(filter_to_query(outside, query, groups).empty());

  const std::map<std::string, std::string> missing{{"person", "vru"}};
  CHECK_THROWS_AS(filter_to_query(dets, query, missing), UnmappedLabel);
}

TEST_CASE("five agreeing models pass a 3-of-5 quorum") {
  const EnsembleConfig cfg = vru_config(5, 3);
  std::vector<Detection> raw;
  for (int m = 0; m < 5; ++m) {
    raw.push_back(det("m" + std::to_string(m), "person", 0.9 - 0.05 * m,
                      BoundingBox{100, 100, 200, 200}));
  }
  const auto grouped = filter_to_query(raw, cfg.query, cfg.label_groups);
  const auto clusters = cluster_frame(grouped, cfg);
  REQUIRE(clusters.size() == 1);
  CHECK(clusters[0].passed);
  CHECK(clusters[0].supporters.size() == 5);
  CHECK(clusters[0].group == "vru");
  // highest confidence anchors
  CHECK(clusters[0].anchor.model_id == "m0");
  CHECK(clusters[0].supporters.at("m0").iou == 1.0);

  const auto accepted = consensus_detections(clusters);
  REQUIRE(accepted.size() == 1);
  CHECK(accepted[0].confidence == 0.9);
}

TEST_CASE("a single model with quorum 1 passes each detection separately") {
  const EnsembleConfig cfg = vru_config(1, 1);
  std::vector<Detection> raw = {
      det("m0", "person", 0.9, {0, 0, 10, 10}),
      det("m0", "person", 0.8, {1, 1, 11, 11}),  // overlaps the first
      det("m0", "pedestrian", 0.7, {50, 50, 60, 60}),
  };
  const auto clusters = cluster_frame(filter_to_query(raw, cfg.query, cfg.label_groups), cfg);
  REQUIRE(clusters.size() == 3);
  for (const auto& c : clusters) {
    CHECK(c.passed);
    CHECK(c.supporters.size() == 1);
  }
}

TEST_CASE("two-model agreement fails a 3-of-5 quorum") {
  const EnsembleConfig cfg = vru_config(5, 3);
  std::vector<Detection> raw = {
      det("m0", "person", 0.9, {0, 0, 100, 100}),
      det("m1", "pedestrian", 0.8, {5, 0, 105, 100}),  // IoU with m0 well above 0.5
      det("m2", "person", 0.7, {500, 500, 600, 600}),  // disjoint
  };
  const auto clusters = cluster_frame(filter_to_query(raw, cfg.query, cfg.label_groups), cfg);
  REQUIRE(clusters.size() == 2);
  CHECK_FALSE(clusters[0].passed);
  CHECK_FALSE(clusters[1].passed);
  CHECK(clusters[0].supporters.size() == 2);
  CHECK(clusters[0].supporters.count("m0") == 1);
  CHECK(clusters[0].supporters.count("m1") == 1);
  CHECK(clusters[1].supporters.size() == 1);
  CHECK(clusters[1].supporters.count("m2") == 1);
  CHECK(consensus_detections(clusters).empty());
}

TEST_CASE("clusters keep group boundaries") {
  const EnsembleConfig cfg = vru_config(2, 2);
  // same geometry, different groups: must not support each other
  std::vector<Detection> raw = {
      det("m0", "person", 0.9, {0, 0, 100, 100}),
      det("m1", "car", 0.8, {0, 0, 100, 100}),
  };
  const auto clusters = cluster_frame(filter_to_query(raw, cfg.query, cfg.label_groups), cfg);
  REQUIRE(clusters.size() == 2);
  CHECK(clusters[0].group != clusters[1].group);
  CHECK_FALSE(clusters[0].passed);
  CHECK_FALSE(clusters[1].passed);
}

TEST_CASE("cluster structure invariants hold on random instances") {
  rng::Stream r = rng::Stream::keyed(21, "consensus", "structure");
  for (int trial = 0; trial < 300; ++trial) {
    const Instance inst = random_instance(r);
    const auto clusters = cluster_frame(inst.dets, inst.config);

    std::size_t members = 0;
    for (const auto& c : clusters) {
      REQUIRE(c.supporters.count(c.anchor.model_id) == 1);
      CHECK(c.supporters.at(c.anchor.model_id).iou == 1.0);
      CHECK(c.passed == (static_cast<int>(c.supporters.size()) >= inst.config.quorum));
      for (const auto& [model, s] : c.supporters) {
        CHECK(s.det.model_id == model);
        if (model != c.anchor.model_id) {
          CHECK(s.iou >= inst.config.iou_threshold);
          CHECK(s.iou == iou(c.anchor.box, s.det.box));
        }
      }
      members += c.supporters.size();
    }
    // exactly-once assignment: cluster membership is the input multiset
    CHECK(members == inst.dets.size());
    std::multiset<std::tuple<std::string, double, double, double>> input;
    for (const auto& g : inst.dets) {
      input.insert({g.det.model_id, g.det.confidence, g.det.box.x_min, g.det.box.y_min});
    }
    CHECK(membership(clusters) == input);
  }
}

TEST_CASE("greedy clustering matches the brute-force reference") {
  rng::Stream r = rng::Stream::keyed(22, "consensus", "oracle");
  int nonempty = 0;
  for (int trial = 0; trial < 300; ++trial) {
    const Instance inst = random_instance(r);
    const auto fast = cluster_frame(inst.dets, inst.config);
    const auto slow = reference::cluster_frame(inst.dets, inst.config);
    CHECK(reference::clusters_equal(fast, slow));
    if (!inst.dets.empty()) ++nonempty;
  }
  CHECK(nonempty > 250);  // the generator is actually producing work
}

TEST_CASE("raising the quorum never adds passed clusters") {
  rng::Stream r = rng::Stream::keyed(23, "consensus", "quorum");
  for (int trial = 0; trial < 100; ++trial) {
    Instance inst = random_instance(r);
    std::size_t previous = ~std::size_t{0};
    const int n = static_cast<int>(inst.config.model_ids.size());
    for (int m = 1; m <= n; ++m) {
      inst.config.quorum = m;
      const auto clusters = cluster_frame(inst.dets, inst.config);
      std::size_t passed = 0;
      for (const auto& c : clusters) passed += c.passed ? 1 : 0;
      CHECK(passed <= previous);
      previous = passed;
    }
  }
}

TEST_CASE("verdicts survive model relabeling when confidences are distinct") {
  rng::Stream r = rng::Stream::keyed(24, "consensus", "permute");
  for (int trial = 0; trial < 100; ++trial) {
    Instance inst = random_instance(r);
    // force all-distinct confidences, keeping values in (0, 1]
    for (std::size_t i = 0; i < inst.dets.size(); ++i) {
      inst.dets[i].det.confidence = 1.0 - static_cast<double>(i) / 64.0;
    }
    const int n = static_cast<int>(inst.config.model_ids.size());

    auto verdicts = [](const std::vector<ConsensusCluster>& clusters) {
      std::multiset<std::tuple<double, double, double, bool>> v;
      for (const auto& c : clusters) {
        v.insert({c.anchor.confidence, c.anchor.box.x_min, c.anchor.box.y_min, c.passed});
      }
      return v;
    };

    const auto baseline = verdicts(cluster_frame(inst.dets, inst.config));

    // rotate model identities: m_i becomes m_{(i+1) mod n}
    Instance rotated = inst;
    for (auto& g : rotated.dets) {
      const int mi = inst.config.model_index(g.det.model_id);
      g.det.model_id = "m" + std::to_string((mi + 1) % n);
    }
    CHECK(verdicts(cluster_frame(rotated.dets, rotated.config)) == baseline);
  }
}

TEST_CASE("run_consensus merges frames in manifest order for any worker count") {
  const EnsembleConfig cfg = vru_config(3, 2);
  DatasetManifest manifest;
  manifest.name = "batch";
  rng::Stream r = rng::Stream::keyed(25, "consensus", "batch");
  std::map<std::string, std::vector<Detection>> by_frame;
  for (int i = 0; i < 40; ++i) {
    Frame f;
    f.frame_id = "f" + std::to_string(1000 + i);
    f.width = 640;
    f.height = 480;
    manifest.frames.push_back(f);
    std::vector<Detection>& dets = by_frame[f.frame_id];
    const std::size_t count = r.below(8);
    for (std::size_t k = 0; k < count; ++k) {
      const double x = static_cast<double>(r.below(600));
      const double y = static_cast<double>(r.below(440));
      Detection d = det("m" + std::to_string(r.below(3)), "person",
                        static_cast<double>(1 + r.below(100)) / 100.0,
                        BoundingBox{x, y, x + 30, y + 30});
      d.frame_id = f.frame_id;
      dets.push_back(d);
    }
  }

  const auto serial = run_consensus(manifest, by_frame, cfg, 1);
  const auto parallel = run_consensus(manifest, by_frame, cfg, 4);
  REQUIRE(serial.size() == manifest.frames.size());
  REQUIRE(parallel.size() == serial.size());
  for (std::size_t i = 0; i < serial.size(); ++i) {
    CHECK(serial[i].frame_id == manifest.frames[i].frame_id);
    CHECK(serial[i].detections_in == parallel[i].detections_in);
    CHECK(serial[i].clusters == parallel[i].clusters);
    REQUIRE(serial[i].accepted.size() == parallel[i].accepted.size());
    for (std::size_t k = 0; k < serial[i].accepted.size(); ++k) {
      CHECK(serial[i].accepted[k].model_id == parallel[i].accepted[k].model_id);
      CHECK(serial[i].accepted[k].confidence == parallel[i].accepted[k].confidence);
      CHECK(serial[i].accepted[k].box == parallel[i].accepted[k].box);
    }
  }

  // and the serial reference driver agrees wholesale
  const auto oracle = reference::run_consensus(manifest, by_frame, cfg);
  REQUIRE(oracle.size() == serial.size());
  for (std::size_t i = 0; i < serial.size(); ++i) {
    CHECK(oracle[i].accepted.size() == serial[i].accepted.size());
  }

  std::map<std::string, std::vector<Detection>> rogue = by_frame;
  rogue["f1000"].push_back(det("mystery", "person", 0.5, {0, 0, 10, 10}));
  CHECK_THROWS_AS(run_consensus(manifest, rogue, cfg, 1), ConfigError);

  EnsembleConfig bad = cfg;
  bad.quorum = 99;
  CHECK_THROWS_AS(run_consensus(manifest, by_frame, bad, 1), ConfigInvalid);
}

TEST_CASE("consensus_detections orders passed anchors by confidence") {
  ConsensusCluster low;
  low.anchor = det("m0", "person", 0.4, {0, 0, 10, 10});
  low.passed = true;
  ConsensusCluster high;
  high.anchor = det("m1", "person", 0.9, {20, 20, 30, 30});
  high.passed = true;
  ConsensusCluster failed;
  failed.anchor = det("m2", "person", 0.99, {40, 40, 50, 50});
  failed.passed = false;

  const std::vector<ConsensusCluster> clusters = {low, high, failed};
  const auto out = consensus_detections(clusters);
  REQUIRE(out.size() == 2);
  CHECK(out[0].confidence == 0.9);
  CHECK(out[1].confidence == 0.4);
  CHECK(consensus_detections(std::vector<ConsensusCluster>{}).empty());
}

}  // TEST_SUITE
