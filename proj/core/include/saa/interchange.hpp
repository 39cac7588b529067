/*
 * Copyright (C) 2026 The SAA Engine Authors
 * SPDX-License-Identifier: Apache-2.0
 */

#pragma once

// Everything that crosses the model/engine boundary.
//
// Tensor file ("SAAT"), all integers little-endian:
//   offset 0   magic    4 bytes  "SAAT"
//   offset 4   version  u8       1
//   offset 5   dtype    u8       1 = float32 (IEEE-754, little-endian)
//   offset 6   ndim     u8
//   offset 7   dims     ndim x u32
//   then       payload  product(dims) x f32, row-major
//
// Masks are 8-bit single-channel PNG with nonzero = foreground. Images are 8-bit RGB PNG.
// A case manifest is a JSON document; relative paths resolve against the manifest's directory.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "saa/core.hpp"

namespace saa {

inline constexpr std::uint8_t kTensorVersion = 1;
inline constexpr std::uint8_t kTensorDtypeF32 = 1;

struct TensorHeader {
  std::uint8_t version = kTensorVersion;
  std::uint8_t dtype = kTensorDtypeF32;
  std::vector<std::uint32_t> dims;

  std::size_t element_count() const noexcept;
  std::size_t header_bytes() const noexcept { return 7 + 4 * dims.size(); }
};

struct Tensor {
  std::vector<std::uint32_t> dims;
  std::vector<float> values;
};

/// Serialized bytes for a tensor. Throws std::invalid_argument when the value count does not
/// match the dims or a dim is zero.
std::vector<std::uint8_t> encode_tensor(std::span<const std::uint32_t> dims,
                                        std::span<const float> values);
/// Throws FormatError (bad header, truncation, trailing bytes) or DataError (non-finite value).
Tensor decode_tensor(std::span<const std::uint8_t> bytes);

Tensor read_tensor_file(const std::filesystem::path& path);
void write_tensor_file(const std::filesystem::path& path, std::span<const std::uint32_t> dims,
                       std::span<const float> values);
/// Parses only the header (and checks the payload length).
TensorHeader inspect_tensor(const std::filesystem::path& path);

/// Requires ndim == 3, mapped as [fheight, fwidth, depth].
FeatureMap read_tensor(const std::filesystem::path& path);
void write_tensor(const FeatureMap& features, const std::filesystem::path& path);

/// Stored as a tensor with dims [height, width].
void write_anomaly_map(const AnomalyMap& map, const std::filesystem::path& path);
AnomalyMap read_anomaly_map(const std::filesystem::path& path);

BinaryMask read_mask_png(const std::filesystem::path& path);
void write_mask_png(const BinaryMask& mask, const std::filesystem::path& path);
ImageRef read_image_png(const std::filesystem::path& path);
void write_image_png(const ImageRef& image, const std::filesystem::path& path);

/// Hydrates a case. Regions without a mask get box_to_mask. Throws LoadError.
CaseBundle load_case(const std::filesystem::path& manifest_path);

/// Optional "category" key of a manifest, used for per-category metric grouping.
std::optional<std::string> manifest_category(const std::filesystem::path& manifest_path);

struct ManifestExtras {
  std::optional<std::string> category;
  /// Free-form per-region annotation written as "role"; ignored by load_case.
  std::vector<std::string> region_roles;
};

/// Writes `<dir>/<stem>.json` plus its assets under `<dir>/<stem>/`. Returns the manifest path.
/// Output bytes depend only on the inputs.
std::filesystem::path write_case(const CaseBundle& bundle, const std::filesystem::path& dir,
                                 const std::string& stem, const ManifestExtras& extras = {});

}  // namespace saa
