/*
 * Copyright (C) 2026 The SAA Engine Authors
 * SPDX-License-Identifier: Apache-2.0
 */

#include <spdlog/cfg/env.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <cstdlib>
#include <iostream>

#include "CLI11.hpp"
#include "commands.hpp"
#include "saa/errors.hpp"

namespace {

void setup_logging() {
  auto logger = spdlog::stderr_color_mt("saa");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::warn);
  if (const char* level = std::getenv("SAA_LOG"); level && *level) {
    spdlog::set_level(spdlog::level::from_str(level));
  }
}

}  // namespace

int main(int argc, char** argv) {
  using namespace saa::cli;
  setup_logging();

  CLI::App app{"Training-free anomaly segmentation from region proposals", "saa"};
  app.require_subcommand(1);

  // run
  auto* run = app.add_subcommand("run", "Run the pipeline on case manifests");
  std::vector<fs::path> run_inputs;
  ConfigOverrides overrides;
  std::string config_file;
  fs::path run_out;
  unsigned workers = 0;
  run->add_option("manifests", run_inputs, "Manifest files or directories")->required();
  run->add_option("--config", config_file, "Pipeline config JSON");
  run->add_option("--out", run_out, "Output directory")->required();
  run->add_option("--disable", overrides.disable, "Stage to switch off (repeatable)")
      ->check(CLI::IsMember({"property_filter", "saliency", "confidence"}));
  run->add_option("--workers", workers, "Concurrent cases (default: all cores)");
  run->add_option("--overlap-mode", overrides.overlap_mode,
                  "intersection-over-region | intersection-over-union");
  run->add_option("--theta-iou", overrides.theta_iou);
  run->add_option("--theta-area", overrides.theta_area);
  run->add_option("--top-k", overrides.top_k);
  run->add_option("--n-neighbors", overrides.n_neighbors);

  // eval
  auto* eval = app.add_subcommand("eval", "Score predicted maps against ground truth");
  EvalOptions eval_opts;
  std::vector<fs::path> eval_inputs;
  std::string grouping, report_path, pixel_sweep = "auto", region_overlap = "iou";
  eval->add_option("--pred", eval_opts.pred_dir, "Directory of <case>.map.saat files")->required();
  eval->add_option("manifests", eval_inputs, "Manifest files or directories")->required();
  eval->add_option("--grouping", grouping, "JSON object mapping case name to category");
  eval->add_option("--out", report_path, "Write the report JSON here");
  eval->add_option("--pixel-sweep", pixel_sweep)->check(CLI::IsMember({"auto", "exact", "quantized"}));
  eval->add_option("--region-overlap", region_overlap)->check(CLI::IsMember({"iou", "iot"}));
  eval->add_option("--region-match", eval_opts.metric.region_match, "Strict overlap threshold");
  eval->add_option("--region-thresholds", eval_opts.metric.region_thresholds);
  eval->add_option("--workers", eval_opts.metric.workers);

  // fixture
  auto* fixture = app.add_subcommand("fixture", "Generate a synthetic case suite");
  std::string fixture_spec;
  fs::path fixture_out;
  fixture->add_option("spec", fixture_spec, "Suite spec JSON (default: standard suite)");
  fixture->add_option("--out", fixture_out, "Output directory")->required();

  // viz
  auto* viz = app.add_subcommand("viz", "Overlay an anomaly map on its image");
  fs::path viz_map, viz_image, viz_out;
  viz->add_option("map", viz_map)->required();
  viz->add_option("image", viz_image)->required();
  viz->add_option("--out", viz_out)->required();

  // inspect
  auto* inspect = app.add_subcommand("inspect", "Print a tensor file header");
  fs::path inspect_path;
  inspect->add_option("tensor", inspect_path)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*run) {
      if (!config_file.empty()) overrides.config_file = config_file;
      RunOptions opts;
      opts.config = resolve_config(overrides);
      opts.manifests = expand_manifests(run_inputs);
      opts.out_dir = run_out;
      opts.workers = workers;
      const auto summary = cmd_run(opts);
      std::cout << summary.succeeded << "/" << summary.cases.size() << " cases succeeded\n";
      for (const auto& c : summary.cases) {
        if (!c.ok) std::cout << "FAILED " << c.manifest.string() << ": " << c.error << "\n";
      }
      return exit_code(summary);
    }
    if (*eval) {
      if (!grouping.empty()) eval_opts.grouping = grouping;
      if (!report_path.empty()) eval_opts.report_path = report_path;
      eval_opts.metric.pixel_sweep = pixel_sweep == "exact"       ? saa::PixelSweep::kExact
                                     : pixel_sweep == "quantized" ? saa::PixelSweep::kQuantized
                                                                  : saa::PixelSweep::kAuto;
      eval_opts.metric.region_overlap = region_overlap == "iot"
                                            ? saa::RegionOverlap::kIntersectionOverTruth
                                            : saa::RegionOverlap::kIoU;
      eval_opts.manifests = expand_manifests(eval_inputs);
      cmd_eval(eval_opts, std::cout);
      return kExitOk;
    }
    if (*fixture) {
      std::optional<fs::path> spec;
      if (!fixture_spec.empty()) spec = fixture_spec;
      const auto written = cmd_fixture(spec, fixture_out);
      std::cout << "wrote " << written.size() << " cases to " << fixture_out.string() << "\n";
      return kExitOk;
    }
    if (*viz) {
      cmd_viz(viz_map, viz_image, viz_out);
      return kExitOk;
    }
    if (*inspect) {
      std::cout << cmd_inspect(inspect_path);
      return kExitOk;
    }
  } catch (const saa::ConfigError& e) {
    spdlog::error("{}", e.what());
    return kExitUsage;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return kExitPartialFailure;
  }
  return kExitUsage;
}
