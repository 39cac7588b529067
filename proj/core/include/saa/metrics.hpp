/*
 * Copyright (C) 2026 The SAA Engine Authors
 * SPDX-License-Identifier: Apache-2.0
 */

#pragma once

// Max-F1 segmentation metrics at a single optimal threshold shared by all evaluated cases.
//
// Thresholding rule (both metrics): a pixel is positive iff its value >= threshold, and the
// candidate thresholds never include the pooled minimum, so "everything positive" is not an
// admissible operating point. An all-zero prediction therefore scores F1 = 0, and any strictly
// increasing transform of the predicted values leaves the pixel F1 unchanged.

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "saa/core.hpp"

namespace saa {

enum class PixelSweep {
  kAuto,       // exact unless the pooled pixel count exceeds quantize_above
  kExact,      // every distinct value is a candidate threshold
  kQuantized,  // equal-width bins over [min, max]
};

enum class RegionOverlap {
  kIoU,
  kIntersectionOverTruth,
};

struct MetricConfig {
  PixelSweep pixel_sweep = PixelSweep::kAuto;
  std::size_t quantize_above = 10'000'000;
  int quantize_bins = 1000;
  int region_thresholds = 50;
  /// A predicted/true region pair matches when overlap is strictly greater than this.
  double region_match = 0.6;
  RegionOverlap region_overlap = RegionOverlap::kIoU;
  unsigned workers = 1;
};

struct F1Result {
  double f1 = 0.0;
  double threshold = 0.0;
};

struct Confusion {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;

  /// 2TP / (2TP + FP + FN); 0 when TP = 0.
  double f1() const noexcept;
  Confusion& operator+=(const Confusion& o) noexcept {
    tp += o.tp;
    fp += o.fp;
    fn += o.fn;
    return *this;
  }
};

/// Throws std::invalid_argument on empty or misaligned input and DimensionError when a
/// prediction and its truth differ in size.
F1Result max_f1_pixel(std::span<const AnomalyMap> predictions, std::span<const BinaryMask> truths,
                      const MetricConfig& cfg = {});

/// Component labels: 0 = background, 1..count in raster order of each component's first pixel.
struct ComponentLabels {
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  std::vector<std::uint32_t> labels;
  std::vector<std::size_t> areas;  // areas[label - 1]

  std::size_t count() const noexcept { return areas.size(); }
};

ComponentLabels label_components(const BinaryMask& mask);

/// 8-connected components, ordered by their topmost-leftmost pixel.
std::vector<BinaryMask> connected_components(const BinaryMask& mask);

/// Greedy one-to-one matching of predicted and true components in descending overlap order;
/// only pairs with overlap > cfg.region_match are accepted.
Confusion match_regions(const BinaryMask& predicted, const BinaryMask& truth,
                        const MetricConfig& cfg = {});

/// Candidate thresholds of the region metric: cfg.region_thresholds evenly spaced quantiles of
/// the pooled strictly positive predicted values, deduplicated, ascending.
std::vector<double> region_threshold_candidates(std::span<const AnomalyMap> predictions,
                                                const MetricConfig& cfg = {});

F1Result max_f1_region(std::span<const AnomalyMap> predictions,
                       std::span<const BinaryMask> truths, const MetricConfig& cfg = {});

struct EvalCase {
  std::string name;
  AnomalyMap prediction;
  BinaryMask truth;
};

struct CategoryScores {
  F1Result pixel;
  F1Result region;
  std::size_t case_count = 0;
};

struct MetricsReport {
  std::optional<F1Result> pixel;   // absent when there were no cases
  std::optional<F1Result> region;
  std::map<std::string, CategoryScores> per_category;
  std::size_t case_count = 0;
};

/// Pooled metrics over all cases plus one entry per category named in `grouping`
/// (case name -> category). Pooled values are recomputed from the pooled pixels and regions.
MetricsReport aggregate(std::span<const EvalCase> cases,
                        const std::map<std::string, std::string>& grouping,
                        const MetricConfig& cfg = {});

/// Keys: f1_pixel_max, f1_region_max, threshold_pixel, threshold_region, per_category,
/// case_count.
std::string report_to_json(const MetricsReport& report);

/// Plain-text table: one row per category then a Total row, F1 values in percent.
std::string report_to_table(const MetricsReport& report);

}  // namespace saa
