/*
 * Copyright (C) 2026 The SAA Engine Authors
 * SPDX-License-Identifier: Apache-2.0
 */

#pragma once

// Brute-force reference implementations. Each one is a direct, unoptimized reading of the
// definition and shares no code with the optimized path it checks. They refuse instances
// larger than a 32x32 grid or 64 candidates (std::length_error).

#include <cstddef>
#include <span>
#include <vector>

#include "saa/core.hpp"
#include "saa/metrics.hpp"
#include "saa/regulator.hpp"

namespace saa::oracle {

inline constexpr std::size_t kMaxGridSide = 32;
inline constexpr std::size_t kMaxCandidates = 64;

/// Saliency on the feature grid from the full pairwise distance matrix.
SaliencyMap saliency(const FeatureMap& features, int n_neighbors);

double saliency_prompt(const RegionCandidate& region, const SaliencyMap& saliency);

/// Sort-and-slice top-K over calibrated scores; returns input indices best first.
std::vector<std::size_t> topk(std::span<const RegionCandidate> candidates, int k);

/// Per-pixel loop over all selected regions.
AnomalyMap fuse(std::span<const RegionCandidate> selected, std::uint32_t width,
                std::uint32_t height);

/// Repeatedly takes the best remaining candidate and discards everything overlapping it.
std::vector<RunIndex> dedupe(std::span<const std::vector<RegionCandidate>> runs, double dedupe_iou);

/// Recounts the confusion matrix from scratch at every distinct value above the minimum.
F1Result f1_sweep(std::span<const AnomalyMap> predictions, std::span<const BinaryMask> truths);

/// Two-pass union-find labeling with 8-connectivity; returns the component count.
std::size_t component_count(const BinaryMask& mask);

/// Maximum one-to-one matching by exhaustive search over pairs with overlap > `match`.
Confusion region_confusion(const BinaryMask& predicted, const BinaryMask& truth, double match);

}  // namespace saa::oracle
