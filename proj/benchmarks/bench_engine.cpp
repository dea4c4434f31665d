// SPDX-License-Identifier: Apache-2.0
//
// Compares the production consensus kernel (OpenMP, precomputed ranks)
// against the serial brute-force reference on one synthetic workload, then
// times frame selection on the resulting counts. The reference is the same
// code the tests trust as an oracle, so the speed numbers come with a
// built-in correctness cross-check.
#include <chrono>
#include <cstdio>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "dse/consensus.hpp"
#include "dse/parallel.hpp"
#include "dse/selection.hpp"
#include "dse/simgen.hpp"
#include "oracles.hpp"

using namespace dse;

namespace {

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

long long accepted_total(const std::vector<FrameConsensus>& results) {
  long long total = 0;
  for (const FrameConsensus& r : results) total += static_cast<long long>(r.accepted.size());
  return total;
}

}  // namespace

int main(int argc, char** argv) {
  std::size_t frames = 10'000;
  int models = 5;
  std::uint64_t seed = 7;
  CLI::App app{"consensus engine benchmark: brute-force reference vs production kernel"};
  app.add_option("--frames", frames, "synthetic frames to generate");
  app.add_option("--models", models, "detectors in the ensemble");
  app.add_option("--seed", seed, "scenario seed");
  CLI11_PARSE(app, argc, argv);

  Scenario sc;
  sc.frame_count = frames;
  sc.mean_instances = 8.75;
  sc.class_mix = {{"pedestrian", 0.7}, {"cyclist", 0.3}};
  sc.seed = seed;
  EnsembleConfig ens;
  for (int i = 0; i < models; ++i) {
    DetectorNoiseModel d;
    d.model_id = "det" + std::to_string(i);
    d.detect_prob = 0.8;
    d.fp_rate = 1.0;
    d.loc_jitter = 2.0;
    d.fp_labels = {"pedestrian", "cyclist"};
    d.seed = seed;
    sc.detectors.push_back(d);
    ens.model_ids.push_back(d.model_id);
  }
  ens.quorum = (models + 1) / 2;
  ens.iou_threshold = 0.5;
  ens.query.classes_of_interest = {"pedestrian", "cyclist"};
  ens.query.filter_subset = ens.query.classes_of_interest;
  ens.label_groups = {{"pedestrian", "all"}, {"cyclist", "all"}};

  std::printf("generating %zu frames, %d detectors, quorum %d...\n", frames, models,
              ens.quorum);
  auto start = std::chrono::steady_clock::now();
  const SyntheticBatch batch = generate_batch(sc, 0);
  std::size_t detections = 0;
  for (const auto& [frame, dets] : batch.by_frame) detections += dets.size();
  std::printf("generated %zu detections in %.2f s\n\n", detections, seconds_since(start));

  struct Row {
    std::string name;
    double sec = 0.0;
    long long accepted = 0;
  };
  std::vector<Row> rows;

  start = std::chrono::steady_clock::now();
  const auto reference = reference::run_consensus(batch.manifest, batch.by_frame, ens);
  rows.push_back({"reference (serial brute force)", seconds_since(start),
                  accepted_total(reference)});

  start = std::chrono::steady_clock::now();
  const auto serial = run_consensus(batch.manifest, batch.by_frame, ens, 1);
  rows.push_back({"production, 1 worker", seconds_since(start), accepted_total(serial)});

  const int hw = default_workers();
  start = std::chrono::steady_clock::now();
  const auto parallel = run_consensus(batch.manifest, batch.by_frame, ens, hw);
  rows.push_back({"production, " + std::to_string(hw) + " worker(s)", seconds_since(start),
                  accepted_total(parallel)});

  std::printf("%-34s %10s %12s %10s %9s\n", "variant", "seconds", "frames/s", "accepted",
              "speedup");
  for (const Row& row : rows) {
    std::printf("%-34s %10.3f %12.0f %10lld %8.2fx\n", row.name.c_str(), row.sec,
                frames / row.sec, row.accepted, rows.front().sec / row.sec);
  }

  bool agree = rows[0].accepted == rows[1].accepted && rows[1].accepted == rows[2].accepted;
  for (std::size_t i = 0; agree && i < reference.size(); ++i) {
    agree = reference[i].frame_id == parallel[i].frame_id &&
            reference[i].accepted.size() == parallel[i].accepted.size();
  }
  std::printf("\nvariants agree: %s\n", agree ? "yes" : "NO (investigate!)");

  std::map<std::string, int> counts;
  for (const FrameConsensus& r : parallel) {
    counts[r.frame_id] = static_cast<int>(r.accepted.size());
  }
  start = std::chrono::steady_clock::now();
  const SelectionResult sel = select_frames(counts, SelectionPolicy{1, 40});
  std::printf("selection over %zu frames: %.3f s (%.2f%% eliminated)\n", counts.size(),
              seconds_since(start), sel.report.eliminated_any_pct);
  return agree ? 0 : 1;
}
