/*
 * Copyright (C) 2026 The SAA Engine Authors
 * SPDX-License-Identifier: Apache-2.0
 */

#include "saa/core.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "saa/errors.hpp"

namespace saa {

ImageRef::ImageRef(std::uint32_t width, std::uint32_t height, std::vector<std::uint8_t> pixels,
                   std::string source_path)
    : width_(width), height_(height), pixels_(std::move(pixels)), source_path_(std::move(source_path)) {
  if (width_ == 0 || height_ == 0) {
    throw std::invalid_argument("image dimensions must be positive");
  }
  if (pixels_.size() != static_cast<std::size_t>(width_) * height_ * 3) {
    throw std::invalid_argument("image pixel buffer must hold width * height * 3 bytes");
  }
}

BBox BBox::clipped(double x0, double y0, double x1, double y1, std::uint32_t width,
                   std::uint32_t height) {
  if (!std::isfinite(x0) || !std::isfinite(y0) || !std::isfinite(x1) || !std::isfinite(y1)) {
    throw std::invalid_argument("box corners must be finite");
  }
  if (x0 > x1 || y0 > y1) {
    throw std::invalid_argument("box corners are inverted");
  }
  const auto w = static_cast<double>(width);
  const auto h = static_cast<double>(height);
  return BBox{std::clamp(x0, 0.0, w), std::clamp(y0, 0.0, h), std::clamp(x1, 0.0, w),
              std::clamp(y1, 0.0, h)};
}

BinaryMask::BinaryMask(std::uint32_t width, std::uint32_t height)
    : width_(width), height_(height), bits_(static_cast<std::size_t>(width) * height, 0) {}

BinaryMask::BinaryMask(std::uint32_t width, std::uint32_t height, std::vector<std::uint8_t> bits)
    : width_(width), height_(height), bits_(std::move(bits)) {
  if (bits_.size() != static_cast<std::size_t>(width_) * height_) {
    throw std::invalid_argument("mask bit buffer must hold width * height entries");
  }
  for (auto& b : bits_) b = b != 0 ? 1 : 0;
}

FeatureMap::FeatureMap(std::uint32_t fheight, std::uint32_t fwidth, std::uint32_t depth,
                       std::vector<float> values)
    : fheight_(fheight), fwidth_(fwidth), depth_(depth), values_(std::move(values)) {
  if (fheight_ == 0 || fwidth_ == 0 || depth_ == 0) {
    throw std::invalid_argument("feature map dimensions must be positive");
  }
  if (values_.size() != static_cast<std::size_t>(fheight_) * fwidth_ * depth_) {
    throw std::invalid_argument("feature map buffer size does not match its dimensions");
  }
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (!std::isfinite(values_[i])) throw DataError("non-finite feature value", i);
  }
}

void PipelineConfig::validate() const {
  if (class_agnostic_prompts.empty() && class_specific_prompts.empty()) {
    throw ConfigError("at least one language prompt is required");
  }
  if (!(theta_iou >= 0.0 && theta_iou <= 1.0)) throw ConfigError("theta_iou must lie in [0, 1]");
  if (!(theta_area > 0.0 && theta_area <= 1.0)) throw ConfigError("theta_area must lie in (0, 1]");
  if (!(dedupe_iou >= 0.0 && dedupe_iou <= 1.0)) throw ConfigError("dedupe_iou must lie in [0, 1]");
  if (n_neighbors < 1) throw ConfigError("n_neighbors must be >= 1");
  if (top_k < 1) throw ConfigError("top_k must be >= 1");
  if (input_width == 0 || input_height == 0) throw ConfigError("input resolution must be positive");
}

std::size_t mask_area(const BinaryMask& mask) noexcept {
  std::size_t n = 0;
  for (auto b : mask.bits()) n += b;
  return n;
}

std::size_t intersection_area(const BinaryMask& a, const BinaryMask& b) {
  if (!a.same_shape(b)) throw DimensionError("mask dimensions differ");
  const auto ab = a.bits();
  const auto bb = b.bits();
  std::size_t n = 0;
  for (std::size_t i = 0; i < ab.size(); ++i) n += ab[i] & bb[i];
  return n;
}

double mask_overlap(const BinaryMask& a, const BinaryMask& b, OverlapMode mode) {
  const auto inter = intersection_area(a, b);
  const auto area_a = mask_area(a);
  const auto denom = mode == OverlapMode::kIntersectionOverUnion ? area_a + mask_area(b) - inter
                                                                  : area_a;
  if (denom == 0) return 0.0;
  return static_cast<double>(inter) / static_cast<double>(denom);
}

BinaryMask box_to_mask(const BBox& box, std::uint32_t width, std::uint32_t height) {
  BinaryMask mask(width, height);
  // Pixel x is inside iff x0 <= x + 0.5 < x1.
  const auto first = [](double lo) { return std::max(0.0, std::ceil(lo - 0.5)); };
  const auto last = [](double hi, std::uint32_t n) {
    return std::min(static_cast<double>(n), std::ceil(hi - 0.5));
  };
  const auto xb = static_cast<std::uint32_t>(first(box.x0));
  const auto xe = static_cast<std::uint32_t>(std::max(0.0, last(box.x1, width)));
  const auto yb = static_cast<std::uint32_t>(first(box.y0));
  const auto ye = static_cast<std::uint32_t>(std::max(0.0, last(box.y1, height)));
  for (std::uint32_t y = yb; y < ye; ++y) {
    for (std::uint32_t x = xb; x < xe; ++x) mask.set(x, y);
  }
  return mask;
}

double box_iou(const BBox& a, const BBox& b) noexcept {
  const double iw = std::max(0.0, std::min(a.x1, b.x1) - std::max(a.x0, b.x0));
  const double ih = std::max(0.0, std::min(a.y1, b.y1) - std::max(a.y0, b.y0));
  const double inter = iw * ih;
  const double uni = a.area() + b.area() - inter;
  return uni > 0.0 ? inter / uni : 0.0;
}

BBox mask_bounds(const BinaryMask& mask) noexcept {
  std::uint32_t x0 = mask.width(), y0 = mask.height(), x1 = 0, y1 = 0;
  bool any = false;
  for (std::uint32_t y = 0; y < mask.height(); ++y) {
    for (std::uint32_t x = 0; x < mask.width(); ++x) {
      if (!mask.get(x, y)) continue;
      any = true;
      x0 = std::min(x0, x);
      y0 = std::min(y0, y);
      x1 = std::max(x1, x + 1);
      y1 = std::max(y1, y + 1);
    }
  }
  if (!any) return {};
  return BBox{double(x0), double(y0), double(x1), double(y1)};
}

const char* to_string(OverlapMode mode) noexcept {
  return mode == OverlapMode::kIntersectionOverUnion ? "intersection-over-union"
                                                     : "intersection-over-region";
}

OverlapMode overlap_mode_from_string(const std::string& text) {
  if (text == "intersection-over-region" || text == "ior") return OverlapMode::kIntersectionOverRegion;
  if (text == "intersection-over-union" || text == "iou") return OverlapMode::kIntersectionOverUnion;
  throw ConfigError("unknown overlap mode '" + text + "'");
}

}  // namespace saa
