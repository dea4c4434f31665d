// SPDX-License-Identifier: Apache-2.0
#include "dse/cli.hpp"

#include <cstdint>
#include <iostream>
#include <optional>

#include "CLI11.hpp"

#include "dse/errors.hpp"
#include "dse/io_utils.hpp"
#include "dse/pipeline.hpp"

namespace dse {

namespace {

struct CliOptions {
  std::string config_path;
  std::string out_dir;
  std::string stages;
  int workers = -1;  // -1 = keep the config's value
  std::optional<std::uint64_t> seed_override;
};

void add_common_options(CLI::App* cmd, CliOptions& opts) {
  cmd->add_option("--config", opts.config_path, "pipeline config file (JSON)");
  cmd->add_option("--workers", opts.workers, "worker threads (0 = one per hardware thread)");
  cmd->add_option("--out", opts.out_dir, "output directory (overrides the config)");
  cmd->add_option("--seed-override", opts.seed_override,
                  "replace every seed in the config (global, split, scenario)");
}

PipelineConfig load_config(const CliOptions& opts) {
  if (opts.config_path.empty()) throw ConfigError("--config is required");
  PipelineConfig config = load_pipeline_config(opts.config_path);
  if (opts.workers >= 0) config.workers = opts.workers;
  if (!opts.out_dir.empty()) config.out_dir = opts.out_dir;
  if (opts.seed_override) override_seeds(config, *opts.seed_override);
  return config;
}

int run_stages(const CliOptions& opts, const std::vector<Stage>& stages) {
  const PipelineConfig config = load_config(opts);
  const RunRecord record = run_pipeline(config, stages);
  std::cout << render_report(record);
  return 0;
}

int run_full(const CliOptions& opts) {
  const PipelineConfig config = load_config(opts);
  const std::vector<Stage> stages =
      opts.stages.empty() ? default_stages(config) : parse_stages(opts.stages);
  const RunRecord record = run_pipeline(config, stages);
  std::cout << render_report(record);
  return 0;
}

int run_report(const CliOptions& opts) {
  std::filesystem::path out_dir;
  if (!opts.out_dir.empty()) {
    out_dir = opts.out_dir;
  } else {
    out_dir = load_config(opts).out_dir;
  }
  const RunRecord record = run_record_from_json(read_text_file(out_dir / "run_record.json"));
  std::cout << render_report(record);
  return 0;
}

}  // namespace

int cli_main(int argc, const char* const* argv) {
  CLI::App app{"data selection engine: detection-ensemble consensus, frame selection,\n"
               "label alignment, detection metrics, and checkpoint selection"};
  app.require_subcommand(1);

  CliOptions opts;
  add_common_options(&app, opts);

  struct Sub {
    const char* name;
    const char* help;
    std::vector<Stage> stages;
  };
  const Sub subs[] = {
      {"simulate", "generate a synthetic manifest and detection files", {Stage::simulate}},
      {"ingest", "load and canonicalize the manifest and detection files", {Stage::ingest}},
      {"acquire", "apply date-range and stride filters; list store objects", {Stage::acquire}},
      {"consensus", "run m-of-n IoU consensus over the ensemble detections", {Stage::consensus}},
      {"select", "keep frames with enough consensus instances; tag crowds", {Stage::select}},
      {"align", "map the label scheme through a similarity matrix", {Stage::align}},
      {"merge", "merge the working manifest with sources.merge_with", {Stage::merge}},
      {"split", "seeded train/val/test split", {Stage::split}},
      {"eval", "precision/recall/F1 and mAP@0.5 against ground truth", {Stage::evaluate}},
      {"pick-weights", "choose a checkpoint from an epoch series", {Stage::pick_weights}},
  };
  for (const Sub& sub : subs) {
    CLI::App* cmd = app.add_subcommand(sub.name, sub.help);
    add_common_options(cmd, opts);
    const std::vector<Stage> stages = sub.stages;
    cmd->callback([&opts, stages]() { run_stages(opts, stages); });
  }

  CLI::App* run_cmd = app.add_subcommand("run", "run the configured pipeline stages");
  add_common_options(run_cmd, opts);
  run_cmd->add_option("--stages", opts.stages,
                      "comma-separated stage subset (default: every stage the config can feed)");
  run_cmd->callback([&opts]() { run_full(opts); });

  CLI::App* report_cmd =
      app.add_subcommand("report", "re-render the summary for an existing run");
  add_common_options(report_cmd, opts);
  report_cmd->callback([&opts]() { run_report(opts); });

  try {
    app.parse(argc, argv);
    return 0;
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);  // prints help/usage text itself
    return code == 0 ? 0 : 1;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 3;
  }
}

int cli_main(const std::vector<std::string>& args) {
  std::vector<const char*> argv;
  argv.push_back("dse");
  for (const std::string& a : args) argv.push_back(a.c_str());
  return cli_main(static_cast<int>(argv.size()), argv.data());
}

}  // namespace dse
