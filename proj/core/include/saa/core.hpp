/*
 * Copyright (C) 2026 The SAA Engine Authors
 * SPDX-License-Identifier: Apache-2.0
 */

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace saa {

/// 8-bit RGB raster, row-major, three bytes per pixel.
class ImageRef {
 public:
  ImageRef() = default;
  ImageRef(std::uint32_t width, std::uint32_t height, std::vector<std::uint8_t> pixels,
           std::string source_path = {});

  std::uint32_t width() const noexcept { return width_; }
  std::uint32_t height() const noexcept { return height_; }
  std::span<const std::uint8_t> pixels() const noexcept { return pixels_; }
  const std::string& source_path() const noexcept { return source_path_; }

  /// Compares raster content only; the source path is provenance.
  friend bool operator==(const ImageRef& a, const ImageRef& b) noexcept {
    return a.width_ == b.width_ && a.height_ == b.height_ && a.pixels_ == b.pixels_;
  }

 private:
  std::uint32_t width_ = 0;
  std::uint32_t height_ = 0;
  std::vector<std::uint8_t> pixels_;
  std::string source_path_;
};

/// Axis-aligned box in the image coordinate frame. Pixel (x, y) spans [x, x+1) x [y, y+1).
struct BBox {
  double x0 = 0, y0 = 0, x1 = 0, y1 = 0;

  /// Clips the corners to [0, width] x [0, height]. Throws std::invalid_argument when
  /// the corners are inverted or not finite.
  static BBox clipped(double x0, double y0, double x1, double y1, std::uint32_t width,
                      std::uint32_t height);

  double area() const noexcept { return (x1 - x0) * (y1 - y0); }

  friend bool operator==(const BBox&, const BBox&) = default;
};

/// One flag per pixel, row-major. Stored as bytes holding 0 or 1.
class BinaryMask {
 public:
  BinaryMask() = default;
  BinaryMask(std::uint32_t width, std::uint32_t height);
  /// Any nonzero byte in `bits` is foreground.
  BinaryMask(std::uint32_t width, std::uint32_t height, std::vector<std::uint8_t> bits);

  std::uint32_t width() const noexcept { return width_; }
  std::uint32_t height() const noexcept { return height_; }
  std::size_t size() const noexcept { return bits_.size(); }
  std::span<const std::uint8_t> bits() const noexcept { return bits_; }

  bool get(std::uint32_t x, std::uint32_t y) const noexcept { return bits_[index(x, y)] != 0; }
  void set(std::uint32_t x, std::uint32_t y, bool on = true) noexcept {
    bits_[index(x, y)] = on ? 1 : 0;
  }
  bool same_shape(const BinaryMask& other) const noexcept {
    return width_ == other.width_ && height_ == other.height_;
  }

  friend bool operator==(const BinaryMask&, const BinaryMask&) = default;

 private:
  std::size_t index(std::uint32_t x, std::uint32_t y) const noexcept {
    return static_cast<std::size_t>(y) * width_ + x;
  }

  std::uint32_t width_ = 0;
  std::uint32_t height_ = 0;
  std::vector<std::uint8_t> bits_;
};

struct RegionCandidate {
  BBox box;
  BinaryMask mask;
  std::string phrase;
  double score = 0.0;
  std::optional<double> saliency_prompt;
  std::optional<double> calibrated_score;

  friend bool operator==(const RegionCandidate&, const RegionCandidate&) = default;
};

/// Dense feature tensor laid out position-major: values[(row * fwidth + col) * depth + c].
class FeatureMap {
 public:
  FeatureMap() = default;
  /// Throws DataError on a non-finite value and std::invalid_argument on a size mismatch.
  FeatureMap(std::uint32_t fheight, std::uint32_t fwidth, std::uint32_t depth,
             std::vector<float> values);

  std::uint32_t fheight() const noexcept { return fheight_; }
  std::uint32_t fwidth() const noexcept { return fwidth_; }
  std::uint32_t depth() const noexcept { return depth_; }
  std::size_t positions() const noexcept { return static_cast<std::size_t>(fheight_) * fwidth_; }
  std::span<const float> values() const noexcept { return values_; }
  std::span<const float> vector_at(std::size_t position) const noexcept {
    return std::span<const float>(values_).subspan(position * depth_, depth_);
  }

  friend bool operator==(const FeatureMap&, const FeatureMap&) = default;

 private:
  std::uint32_t fheight_ = 0;
  std::uint32_t fwidth_ = 0;
  std::uint32_t depth_ = 0;
  std::vector<float> values_;
};

/// Row-major scalar field over the image plane.
template <typename T>
class Raster {
 public:
  using value_type = T;

  Raster() = default;
  Raster(std::uint32_t width, std::uint32_t height, T fill = T{})
      : width_(width), height_(height), values_(static_cast<std::size_t>(width) * height, fill) {}

  std::uint32_t width() const noexcept { return width_; }
  std::uint32_t height() const noexcept { return height_; }
  std::size_t size() const noexcept { return values_.size(); }
  std::span<const T> values() const noexcept { return values_; }
  std::span<T> values() noexcept { return values_; }

  T at(std::uint32_t x, std::uint32_t y) const noexcept {
    return values_[static_cast<std::size_t>(y) * width_ + x];
  }
  T& at(std::uint32_t x, std::uint32_t y) noexcept {
    return values_[static_cast<std::size_t>(y) * width_ + x];
  }

  friend bool operator==(const Raster&, const Raster&) = default;

 private:
  std::uint32_t width_ = 0;
  std::uint32_t height_ = 0;
  std::vector<T> values_;
};

/// Per-pixel mean kNN cosine distance, each value in [0, 2].
using SaliencyMap = Raster<double>;

/// Raw fused anomaly scores. Not normalized; values may exceed 1.
using AnomalyMap = Raster<float>;

enum class OverlapMode {
  kIntersectionOverRegion,
  kIntersectionOverUnion,
};

struct StageToggles {
  bool property_filter = true;
  bool saliency_prompt = true;
  bool confidence_prompt = true;

  friend bool operator==(const StageToggles&, const StageToggles&) = default;
};

struct PipelineConfig {
  std::vector<std::string> class_agnostic_prompts{"anomaly", "defect"};
  std::vector<std::string> class_specific_prompts{"black hole", "white bubble"};
  std::string object_prompt = "object";
  double theta_iou = 0.5;
  double theta_area = 0.9;
  OverlapMode overlap_mode = OverlapMode::kIntersectionOverRegion;
  int n_neighbors = 400;
  int top_k = 5;
  double dedupe_iou = 0.9;
  StageToggles toggles;
  /// Working resolution the upstream adapters resize to. Recorded, not enforced.
  std::uint32_t input_width = 400;
  std::uint32_t input_height = 400;

  /// Throws ConfigError describing the first violated invariant.
  void validate() const;

  friend bool operator==(const PipelineConfig&, const PipelineConfig&) = default;
};

struct CaseBundle {
  ImageRef image;
  std::vector<RegionCandidate> candidates;
  std::optional<RegionCandidate> object_region;
  FeatureMap features;
  std::optional<BinaryMask> ground_truth;

  friend bool operator==(const CaseBundle&, const CaseBundle&) = default;
};

std::size_t mask_area(const BinaryMask& mask) noexcept;

/// Throws DimensionError when the masks differ in size.
std::size_t intersection_area(const BinaryMask& a, const BinaryMask& b);

/// IoU or |a ∩ b| / |a|. Returns 0 when the denominator is empty.
double mask_overlap(const BinaryMask& a, const BinaryMask& b, OverlapMode mode);

/// Sets every pixel whose center (x + 0.5, y + 0.5) lies in [x0, x1) x [y0, y1).
BinaryMask box_to_mask(const BBox& box, std::uint32_t width, std::uint32_t height);

/// Continuous-coordinate IoU of two boxes; 0 when the union has no area.
double box_iou(const BBox& a, const BBox& b) noexcept;

/// Tight pixel bounding box of the set bits; all zeros for an empty mask.
BBox mask_bounds(const BinaryMask& mask) noexcept;

const char* to_string(OverlapMode mode) noexcept;
/// Accepts "intersection-over-region"/"ior" and "intersection-over-union"/"iou".
OverlapMode overlap_mode_from_string(const std::string& text);

}  // namespace saa
