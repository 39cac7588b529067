/*
 * Copyright (C) 2026 The SAA Engine Authors
 * SPDX-License-Identifier: Apache-2.0
 */

#pragma once

// Hybrid-prompt regularization of foundation-model region proposals.
//
//   candidates --merge--> deduplicated union over language prompts
//              --filter--> location + area property rules
//              --rescore--> score * exp(mask-mean saliency)
//              --top-K--> the K highest calibrated scores
//              --fuse--> per-pixel mean calibrated score of covering regions
//
// Every stage can be switched off independently; with all of them off the fused map is the
// plain detector + segmenter baseline.

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "saa/core.hpp"

namespace saa {

// --- language prompts --------------------------------------------------------

/// Position of a merged candidate in the input runs.
struct RunIndex {
  std::size_t run = 0;
  std::size_t index = 0;

  friend bool operator==(const RunIndex&, const RunIndex&) = default;
};

/// Union of all runs in descending score order (ties: earlier run, then earlier index).
/// A candidate is dropped when its box IoU with an already kept one exceeds `dedupe_iou`.
std::vector<RunIndex> merge_prompt_run_indices(
    std::span<const std::vector<RegionCandidate>> runs, double dedupe_iou);
std::vector<RegionCandidate> merge_prompt_runs(
    std::span<const std::vector<RegionCandidate>> runs, double dedupe_iou);

// --- property prompts --------------------------------------------------------

/// Indices of candidates passing both rules:
///   overlap(mask, object, cfg.overlap_mode) >= cfg.theta_iou
///   area(mask) <= cfg.theta_area * area(object)      (inclusive)
/// Without an object region the whole image is the object.
std::vector<std::size_t> property_filter_indices(std::span<const RegionCandidate> candidates,
                                                 const std::optional<RegionCandidate>& object,
                                                 const PipelineConfig& cfg);
std::vector<RegionCandidate> filter_by_property(std::span<const RegionCandidate> candidates,
                                                const std::optional<RegionCandidate>& object,
                                                const PipelineConfig& cfg);

// --- saliency prompts --------------------------------------------------------

/// Saliency on the feature grid (width = fwidth, height = fheight). Each position gets the mean
/// cosine distance (1 - cos) to its min(n_neighbors, P - 1) nearest other positions. A zero
/// feature vector has cosine 0 with everything. `workers` = 0 picks the hardware concurrency;
/// the result does not depend on it. Throws std::invalid_argument when P < 2 or n_neighbors < 1.
SaliencyMap saliency_grid(const FeatureMap& features, int n_neighbors, unsigned workers = 0);

/// Bilinear resampling with half-pixel centers (edge-clamped).
SaliencyMap upsample_bilinear(const SaliencyMap& grid, std::uint32_t out_width,
                              std::uint32_t out_height);

/// saliency_grid followed by upsample_bilinear to the image resolution.
SaliencyMap compute_saliency(const FeatureMap& features, int n_neighbors, std::uint32_t out_width,
                             std::uint32_t out_height, unsigned workers = 0);

/// exp(mean saliency under the mask), in [1, e^2]. Throws Error on an empty mask and
/// DimensionError on a size mismatch.
double saliency_prompt(const RegionCandidate& region, const SaliencyMap& saliency);

/// Copies of the candidates with saliency_prompt and calibrated_score = prompt * score set.
std::vector<RegionCandidate> rescore(std::span<const RegionCandidate> candidates,
                                     const SaliencyMap& saliency);

// --- confidence prompts ------------------------------------------------------

/// The min(k, n) largest calibrated scores, best first; ties keep input order.
/// Throws std::invalid_argument when a candidate has no calibrated score or k < 1.
std::vector<std::size_t> topk_indices(std::span<const RegionCandidate> candidates, int k);
std::vector<RegionCandidate> select_topk(std::span<const RegionCandidate> candidates, int k);

/// A(x, y) = mean calibrated score over the selected regions covering (x, y); 0 if uncovered.
AnomalyMap fuse_topk(std::span<const RegionCandidate> selected, std::uint32_t width,
                     std::uint32_t height);

// --- composition -------------------------------------------------------------

struct StageCounts {
  std::size_t input = 0;
  std::size_t merged = 0;
  std::size_t filtered = 0;
  std::size_t selected = 0;
};

struct CandidateTrace {
  std::size_t source_index = 0;  // position in CaseBundle::candidates
  std::string phrase;
  BBox box;
  double score = 0.0;
  bool passed_filter = false;
  std::optional<double> saliency_prompt;
  std::optional<double> calibrated_score;
  std::optional<std::size_t> rank;  // set when selected
};

struct StageTimings {
  double merge_ms = 0;
  double filter_ms = 0;
  double saliency_ms = 0;
  double select_ms = 0;
  double fuse_ms = 0;
};

struct PipelineTrace {
  StageCounts counts;
  std::vector<CandidateTrace> candidates;  // merged order
  StageTimings timings;
  std::optional<std::string> note;
  PipelineConfig config;
};

struct PipelineResult {
  AnomalyMap map;
  PipelineTrace trace;
};

/// Runs merge -> [filter] -> [saliency rescoring] -> [top-K] -> fuse on one case. Candidates
/// are grouped into runs by phrase in config prompt order; phrases not named in the config
/// follow in order of first appearance.
PipelineResult run_pipeline(const CaseBundle& bundle, const PipelineConfig& cfg,
                            unsigned saliency_workers = 1);

/// Trace as JSON. Timings are wall-clock and therefore excluded unless asked for.
std::string trace_to_json(const PipelineTrace& trace, bool include_timings = false);

}  // namespace saa
