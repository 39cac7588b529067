/*
 * Copyright (C) 2026 The SAA Engine Authors
 * SPDX-License-Identifier: Apache-2.0
 */

#include "commands.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <array>
#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "saa/config.hpp"
#include "saa/errors.hpp"
#include "saa/fixtures.hpp"
#include "saa/interchange.hpp"

namespace saa::cli {

using nlohmann::json;

PipelineConfig resolve_config(const ConfigOverrides& o) {
  PipelineConfig cfg = o.config_file ? load_config(*o.config_file) : PipelineConfig{};
  if (o.overlap_mode) cfg.overlap_mode = overlap_mode_from_string(*o.overlap_mode);
  if (o.theta_iou) cfg.theta_iou = *o.theta_iou;
  if (o.theta_area) cfg.theta_area = *o.theta_area;
  if (o.top_k) cfg.top_k = *o.top_k;
  if (o.n_neighbors) cfg.n_neighbors = *o.n_neighbors;
  for (const auto& stage : o.disable) {
    if (stage == "property_filter" || stage == "property") {
      cfg.toggles.property_filter = false;
    } else if (stage == "saliency" || stage == "saliency_prompt") {
      cfg.toggles.saliency_prompt = false;
    } else if (stage == "confidence" || stage == "confidence_prompt") {
      cfg.toggles.confidence_prompt = false;
    } else {
      throw ConfigError("unknown stage '" + stage + "' (property_filter|saliency|confidence)");
    }
  }
  cfg.validate();
  return cfg;
}

std::vector<fs::path> expand_manifests(const std::vector<fs::path>& inputs) {
  std::vector<fs::path> out;
  for (const auto& in : inputs) {
    if (fs::is_directory(in)) {
      std::vector<fs::path> found;
      for (const auto& e : fs::directory_iterator(in)) {
        if (e.is_regular_file() && e.path().extension() == ".json") found.push_back(e.path());
      }
      std::sort(found.begin(), found.end());
      out.insert(out.end(), found.begin(), found.end());
    } else {
      out.push_back(in);
    }
  }
  return out;
}

namespace {

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
  if (!out) throw Error("failed writing " + path.string());
}

template <typename Fn>
void for_each_worker(std::size_t n, unsigned workers, Fn&& fn) {
  if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, n));
  std::atomic<std::size_t> next{0};
  const auto drain = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < n;) fn(i);
  };
  if (workers <= 1) {
    drain();
    return;
  }
  std::vector<std::jthread> pool;
  for (unsigned w = 0; w < workers; ++w) pool.emplace_back(drain);
}

}  // namespace

RunSummary cmd_run(const RunOptions& options) {
  using Clock = std::chrono::steady_clock;
  const auto t0 = Clock::now();
  fs::create_directories(options.out_dir);

  RunSummary summary;
  summary.cases.resize(options.manifests.size());
  for_each_worker(options.manifests.size(), options.workers, [&](std::size_t i) {
    const auto start = Clock::now();
    auto& run = summary.cases[i];
    run.manifest = options.manifests[i];
    const auto stem = run.manifest.stem().string();
    try {
      const auto bundle = load_case(run.manifest);
      const auto result = run_pipeline(bundle, options.config);
      run.map_path = options.out_dir / (stem + ".map.saat");
      run.trace_path = options.out_dir / (stem + ".trace.json");
      write_anomaly_map(result.map, run.map_path);
      write_text(run.trace_path, trace_to_json(result.trace));
      run.counts = result.trace.counts;
      run.ok = true;
      spdlog::debug("{}: {} -> {} candidates", stem, run.counts.input, run.counts.selected);
    } catch (const std::exception& e) {
      run.error = e.what();
      spdlog::error("{}: {}", run.manifest.string(), e.what());
    }
    run.wall_ms = std::chrono::duration<double, std::milli>(Clock::now() - start).count();
  });

  for (const auto& c : summary.cases) {
    (c.ok ? summary.succeeded : summary.failed)++;
    summary.totals.input += c.counts.input;
    summary.totals.merged += c.counts.merged;
    summary.totals.filtered += c.counts.filtered;
    summary.totals.selected += c.counts.selected;
  }
  summary.wall_ms = std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
  write_text(options.out_dir / "summary.json", summary_to_json(summary));
  return summary;
}

std::string summary_to_json(const RunSummary& summary) {
  const auto counts = [](const StageCounts& c) {
    return json{{"input", c.input}, {"merged", c.merged}, {"filtered", c.filtered},
                {"selected", c.selected}};
  };
  json cases = json::array();
  for (const auto& c : summary.cases) {
    json j{{"manifest", c.manifest.string()},
           {"ok", c.ok},
           {"wall_ms", c.wall_ms},
           {"counts", counts(c.counts)}};
    if (c.ok) {
      j["map"] = c.map_path.string();
      j["trace"] = c.trace_path.string();
    } else {
      j["error"] = c.error;
    }
    cases.push_back(std::move(j));
  }
  json doc{{"cases", std::move(cases)},
           {"totals",
            {{"cases", summary.cases.size()},
             {"succeeded", summary.succeeded},
             {"failed", summary.failed},
             {"counts", counts(summary.totals)},
             {"wall_ms", summary.wall_ms}}}};
  return doc.dump(2) + "\n";
}

int exit_code(const RunSummary& summary) {
  return summary.failed == 0 ? kExitOk : kExitPartialFailure;
}

MetricsReport cmd_eval(const EvalOptions& options, std::ostream& table_out) {
  std::map<std::string, std::string> grouping;
  if (options.grouping) {
    std::ifstream in(*options.grouping);
    if (!in) throw ConfigError("cannot open grouping file " + options.grouping->string());
    try {
      grouping = json::parse(in).get<std::map<std::string, std::string>>();
    } catch (const json::exception& e) {
      throw ConfigError("grouping must map case names to category strings: " +
                        std::string(e.what()));
    }
  }

  std::vector<EvalCase> cases;
  for (const auto& manifest : options.manifests) {
    const auto stem = manifest.stem().string();
    const auto pred_path = options.pred_dir / (stem + ".map.saat");
    if (!fs::exists(pred_path)) {
      throw Error("missing prediction for case '" + stem + "' (expected " + pred_path.string() + ")");
    }
    auto bundle = load_case(manifest);
    EvalCase c;
    c.name = stem;
    c.prediction = read_anomaly_map(pred_path);
    c.truth = bundle.ground_truth ? std::move(*bundle.ground_truth)
                                  : BinaryMask(bundle.image.width(), bundle.image.height());
    if (c.prediction.width() != c.truth.width() || c.prediction.height() != c.truth.height()) {
      throw DimensionError("prediction for case '" + stem + "' does not match its image size");
    }
    if (!options.grouping) {
      if (auto cat = manifest_category(manifest)) grouping[stem] = *cat;
    }
    cases.push_back(std::move(c));
  }

  auto report = aggregate(cases, grouping, options.metric);
  table_out << report_to_table(report);
  if (options.report_path) write_text(*options.report_path, report_to_json(report));
  return report;
}

std::vector<fs::path> cmd_fixture(const std::optional<fs::path>& spec_file, const fs::path& out_dir) {
  SuiteSpec suite = standard_suite_spec();
  if (spec_file) {
    std::ifstream in(*spec_file);
    if (!in) throw ConfigError("cannot open fixture spec " + spec_file->string());
    std::ostringstream ss;
    ss << in.rdbuf();
    suite = suite_spec_from_json(ss.str());
  }
  return write_suite(suite, out_dir);
}

namespace {

// Piecewise-linear "jet" ramp.
std::array<double, 3> heat_color(double t) {
  const auto ramp = [](double x) { return std::clamp(1.5 - std::abs(x), 0.0, 1.0); };
  return {255.0 * ramp(4.0 * t - 3.0), 255.0 * ramp(4.0 * t - 2.0), 255.0 * ramp(4.0 * t - 1.0)};
}

}  // namespace

ImageRef render_overlay(const AnomalyMap& map, const ImageRef& image) {
  if (map.width() != image.width() || map.height() != image.height()) {
    throw DimensionError("anomaly map and image differ in size");
  }
  const auto values = map.values();
  const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
  const double lo = *lo_it, hi = *hi_it;
  std::vector<std::uint8_t> px(image.pixels().begin(), image.pixels().end());
  if (!(hi > lo)) return ImageRef(image.width(), image.height(), std::move(px));

  constexpr double kMaxAlpha = 0.6;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double t = (double(values[i]) - lo) / (hi - lo);
    const double alpha = kMaxAlpha * t;
    if (alpha == 0.0) continue;
    const auto color = heat_color(t);
    for (int c = 0; c < 3; ++c) {
      const double blended = (1.0 - alpha) * px[i * 3 + c] + alpha * color[c];
      px[i * 3 + c] = static_cast<std::uint8_t>(std::clamp(std::lround(blended), 0L, 255L));
    }
  }
  return ImageRef(image.width(), image.height(), std::move(px));
}

void cmd_viz(const fs::path& map_path, const fs::path& image_path, const fs::path& out_png) {
  const auto map = read_anomaly_map(map_path);
  const auto image = read_image_png(image_path);
  write_image_png(render_overlay(map, image), out_png);
}

std::string cmd_inspect(const fs::path& tensor_path) {
  const auto header = inspect_tensor(tensor_path);
  const auto tensor = read_tensor_file(tensor_path);
  std::ostringstream out;
  out << "file:     " << tensor_path.string() << "\n";
  out << "magic:    SAAT\n";
  out << "version:  " << int(header.version) << "\n";
  out << "dtype:    float32\n";
  out << "ndim:     " << header.dims.size() << "\n";
  out << "dims:     [";
  for (std::size_t i = 0; i < header.dims.size(); ++i) out << (i ? ", " : "") << header.dims[i];
  out << "]\n";
  out << "elements: " << header.element_count() << "\n";
  const auto [lo, hi] = std::minmax_element(tensor.values.begin(), tensor.values.end());
  double sum = 0;
  for (float v : tensor.values) sum += v;
  out << std::setprecision(9);
  out << "min:      " << *lo << "\n";
  out << "max:      " << *hi << "\n";
  out << "mean:     " << sum / double(tensor.values.size()) << "\n";
  return out.str();
}

}  // namespace saa::cli
