/*
 * Copyright (C) 2026 The SAA Engine Authors
 * SPDX-License-Identifier: Apache-2.0
 */

#pragma once

// Deterministic synthetic inspection cases.
//
// Every case shows one rectangular object on a background. Candidates come in four roles:
//   blob       true anomaly disc inside the object; its feature cells are displaced
//   decoy      normal-looking disc inside the object with a confident detector score
//   outside    distractor disc entirely outside the object (breaks the location rule)
//   oversized  distractor covering the whole object plus a margin (breaks the area rule)
// The ground truth is the union of the blobs.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "saa/core.hpp"

namespace saa {

/// xoshiro256** seeded through splitmix64, so streams are reproducible in any language.
class Xoshiro256 {
 public:
  explicit Xoshiro256(std::uint64_t seed) noexcept;

  std::uint64_t next() noexcept;
  /// Uniform in [0, 1) from the top 53 bits.
  double uniform() noexcept;
  double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }
  /// Uniform integer in [lo, hi] (rejection sampling, no modulo bias).
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) noexcept;
  /// Standard normal via Box-Muller (one draw per call, the pair's second value is discarded).
  double normal() noexcept;

 private:
  std::uint64_t s_[4];
};

// kLoose: a wider, low-confidence proposal centred on a blob and clipped to the object.
enum class CandidateRole { kBlob, kDecoy, kLoose, kOutside, kOversized };

const char* to_string(CandidateRole role) noexcept;
inline bool is_distractor(CandidateRole r) noexcept {
  return r == CandidateRole::kOutside || r == CandidateRole::kOversized;
}

struct FixtureSpec {
  std::uint64_t seed = 0;
  std::uint32_t image_size = 128;
  int blob_count_min = 1;
  int blob_count_max = 3;
  double blob_radius_min = 5.0;
  double blob_radius_max = 9.0;
  int decoy_count_min = 3;
  int decoy_count_max = 5;
  double decoy_radius_min = 3.0;
  double decoy_radius_max = 6.0;
  double loose_probability = 0.7;  // per blob
  double loose_scale_min = 2.0;     // radius relative to the blob
  double loose_scale_max = 3.0;
  int distractor_count = 2;
  double blob_score_min = 0.55;
  double blob_score_max = 0.85;
  double decoy_score_min = 0.6;
  double decoy_score_max = 0.95;
  double loose_score_min = 0.3;
  double loose_score_max = 0.6;
  double distractor_score_min = 0.7;
  double distractor_score_max = 0.95;
  std::uint32_t feature_height = 32;
  std::uint32_t feature_width = 32;
  std::uint32_t feature_depth = 16;
  double anomaly_feature_shift = 4.0;
  double blob_strength_min = 0.6;  // each blob's shift is scaled by U(blob_strength_min, 1)
  double feature_noise = 0.03;
  std::vector<std::string> phrases{"anomaly", "defect", "black hole", "white bubble"};
};

/// The standard suite's per-case spec: defaults above with the given seed.
FixtureSpec standard_fixture_spec(std::uint64_t seed);

struct FixtureCase {
  CaseBundle bundle;
  std::vector<CandidateRole> roles;  // parallel to bundle.candidates
};

/// Same spec, same bits.
FixtureCase generate_case(const FixtureSpec& spec);

/// Suite description for `saa fixture`: a FixtureSpec (any subset of its field names) plus
/// "seeds": [..] or "seed_begin"/"count". Defaults to the standard suite (seeds 0-49).
struct SuiteSpec {
  FixtureSpec base;
  std::vector<std::uint64_t> seeds;
};

SuiteSpec suite_spec_from_json(const std::string& text);
SuiteSpec standard_suite_spec();

/// Stem used for the case with the given seed ("case_0007").
std::string fixture_stem(std::uint64_t seed);

/// Writes every case of the suite as a CaseManifest directory. Returns the manifest paths in
/// seed order.
std::vector<std::filesystem::path> write_suite(const SuiteSpec& suite,
                                               const std::filesystem::path& out_dir);

}  // namespace saa
