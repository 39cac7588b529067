/*
 * Copyright (C) 2026 The SAA Engine Authors
 * SPDX-License-Identifier: Apache-2.0
 */

#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "saa/core.hpp"
#include "saa/metrics.hpp"
#include "saa/regulator.hpp"

namespace saa::cli {

namespace fs = std::filesystem;

inline constexpr int kExitOk = 0;
inline constexpr int kExitPartialFailure = 1;
inline constexpr int kExitUsage = 2;

/// Command-line overrides applied on top of the config file.
struct ConfigOverrides {
  std::optional<fs::path> config_file;
  std::vector<std::string> disable;  // property_filter | saliency | confidence
  std::optional<std::string> overlap_mode;
  std::optional<double> theta_iou;
  std::optional<double> theta_area;
  std::optional<int> top_k;
  std::optional<int> n_neighbors;
};

/// Config file (or defaults), then flags. Throws ConfigError.
PipelineConfig resolve_config(const ConfigOverrides& overrides);

/// Directories expand to their *.json files (sorted); files pass through.
std::vector<fs::path> expand_manifests(const std::vector<fs::path>& inputs);

struct CaseRun {
  fs::path manifest;
  fs::path map_path;
  fs::path trace_path;
  bool ok = false;
  std::string error;
  double wall_ms = 0;
  StageCounts counts;
};

struct RunSummary {
  std::vector<CaseRun> cases;
  std::size_t succeeded = 0;
  std::size_t failed = 0;
  StageCounts totals;
  double wall_ms = 0;
};

struct RunOptions {
  std::vector<fs::path> manifests;
  fs::path out_dir;
  PipelineConfig config;
  unsigned workers = 0;  // 0 = hardware concurrency
};

/// Writes <out>/<stem>.map.saat and <out>/<stem>.trace.json per case and <out>/summary.json.
/// A failing case is recorded and the batch continues.
RunSummary cmd_run(const RunOptions& options);
std::string summary_to_json(const RunSummary& summary);
int exit_code(const RunSummary& summary);

struct EvalOptions {
  fs::path pred_dir;
  std::vector<fs::path> manifests;
  std::optional<fs::path> grouping;  // JSON object: case stem -> category
  MetricConfig metric;
  std::optional<fs::path> report_path;
};

/// Loads <pred_dir>/<stem>.map.saat for every manifest. A manifest without ground truth counts
/// as a defect-free case. Prints the table to `table_out`. Throws Error naming a missing case.
MetricsReport cmd_eval(const EvalOptions& options, std::ostream& table_out);

std::vector<fs::path> cmd_fixture(const std::optional<fs::path>& spec_file, const fs::path& out_dir);

/// Per-image min-max normalized heat overlay; zero (or constant) maps leave the image unchanged.
ImageRef render_overlay(const AnomalyMap& map, const ImageRef& image);
void cmd_viz(const fs::path& map_path, const fs::path& image_path, const fs::path& out_png);

std::string cmd_inspect(const fs::path& tensor_path);

}  // namespace saa::cli
