/*
 * Copyright (C) 2026 The SAA Engine Authors
 * SPDX-License-Identifier: Apache-2.0
 */

#include "saa/interchange.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>
#include <sstream>

#include "json.hpp"
#include "saa/errors.hpp"

namespace saa {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr char kMagic[4] = {'S', 'A', 'A', 'T'};

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get_u32(std::span<const std::uint8_t> bytes, std::size_t at) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes[at + i]) << (8 * i);
  return v;
}

std::vector<std::uint8_t> slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), {});
}

void spill(const fs::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("failed writing " + path.string());
}

// Header checks shared by decode_tensor and inspect_tensor.
TensorHeader parse_header(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 4) throw FormatError("file too short for magic", bytes.size());
  if (std::memcmp(bytes.data(), kMagic, 4) != 0) throw FormatError("bad magic, expected SAAT", 0);
  if (bytes.size() < 7) throw FormatError("truncated header", bytes.size());
  TensorHeader h;
  h.version = bytes[4];
  if (h.version != kTensorVersion) {
    throw FormatError("unsupported version " + std::to_string(h.version), 4);
  }
  h.dtype = bytes[5];
  if (h.dtype != kTensorDtypeF32) {
    throw FormatError("unsupported dtype " + std::to_string(h.dtype), 5);
  }
  const std::size_t ndim = bytes[6];
  if (ndim == 0) throw FormatError("ndim must be positive", 6);
  if (bytes.size() < 7 + 4 * ndim) throw FormatError("truncated dims", bytes.size());
  std::size_t count = 1;
  for (std::size_t i = 0; i < ndim; ++i) {
    const auto d = get_u32(bytes, 7 + 4 * i);
    if (d == 0) throw FormatError("zero-length dimension", 7 + 4 * i);
    if (count > std::numeric_limits<std::size_t>::max() / 4 / d) {
      throw FormatError("tensor too large", 7 + 4 * i);
    }
    count *= d;
    h.dims.push_back(d);
  }
  const auto expected = h.header_bytes() + 4 * count;
  if (bytes.size() < expected) throw FormatError("truncated payload", bytes.size());
  if (bytes.size() > expected) throw FormatError("trailing bytes after payload", expected);
  return h;
}

}  // namespace

std::size_t TensorHeader::element_count() const noexcept {
  std::size_t n = 1;
  for (auto d : dims) n *= d;
  return n;
}

std::vector<std::uint8_t> encode_tensor(std::span<const std::uint32_t> dims,
                                        std::span<const float> values) {
  if (dims.empty() || dims.size() > 255) throw std::invalid_argument("ndim must be in [1, 255]");
  std::size_t count = 1;
  for (auto d : dims) {
    if (d == 0) throw std::invalid_argument("tensor dims must be positive");
    count *= d;
  }
  if (count != values.size()) throw std::invalid_argument("value count does not match dims");

  std::vector<std::uint8_t> out;
  out.reserve(7 + 4 * dims.size() + 4 * count);
  out.insert(out.end(), std::begin(kMagic), std::end(kMagic));
  out.push_back(kTensorVersion);
  out.push_back(kTensorDtypeF32);
  out.push_back(static_cast<std::uint8_t>(dims.size()));
  for (auto d : dims) put_u32(out, d);
  for (float v : values) put_u32(out, std::bit_cast<std::uint32_t>(v));
  return out;
}

Tensor decode_tensor(std::span<const std::uint8_t> bytes) {
  const auto header = parse_header(bytes);
  Tensor t;
  t.dims = header.dims;
  const auto count = header.element_count();
  t.values.resize(count);
  const auto base = header.header_bytes();
  for (std::size_t i = 0; i < count; ++i) {
    const float v = std::bit_cast<float>(get_u32(bytes, base + 4 * i));
    if (!std::isfinite(v)) throw DataError("non-finite tensor value", i);
    t.values[i] = v;
  }
  return t;
}

Tensor read_tensor_file(const fs::path& path) { return decode_tensor(slurp(path)); }

void write_tensor_file(const fs::path& path, std::span<const std::uint32_t> dims,
                       std::span<const float> values) {
  spill(path, encode_tensor(dims, values));
}

TensorHeader inspect_tensor(const fs::path& path) { return parse_header(slurp(path)); }

FeatureMap read_tensor(const fs::path& path) {
  auto t = read_tensor_file(path);
  if (t.dims.size() != 3) {
    throw FormatError("feature tensor must have 3 dims, found " + std::to_string(t.dims.size()), 6);
  }
  return FeatureMap(t.dims[0], t.dims[1], t.dims[2], std::move(t.values));
}

void write_tensor(const FeatureMap& features, const fs::path& path) {
  const std::uint32_t dims[3] = {features.fheight(), features.fwidth(), features.depth()};
  write_tensor_file(path, dims, features.values());
}

void write_anomaly_map(const AnomalyMap& map, const fs::path& path) {
  const std::uint32_t dims[2] = {map.height(), map.width()};
  write_tensor_file(path, dims, map.values());
}

AnomalyMap read_anomaly_map(const fs::path& path) {
  auto t = read_tensor_file(path);
  if (t.dims.size() != 2) {
    throw FormatError("anomaly map must have 2 dims, found " + std::to_string(t.dims.size()), 6);
  }
  AnomalyMap map(t.dims[1], t.dims[0]);
  std::copy(t.values.begin(), t.values.end(), map.values().begin());
  return map;
}

// ---------------------------------------------------------------------------
// Case manifests

namespace {

fs::path resolve(const fs::path& base, const std::string& ref) {
  fs::path p(ref);
  return p.is_absolute() ? p : base / p;
}

json parse_manifest(const fs::path& manifest_path) {
  std::ifstream in(manifest_path);
  if (!in) throw LoadError("cannot open manifest " + manifest_path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw LoadError("manifest " + manifest_path.string() + " is not valid JSON: " + e.what());
  }
}

BBox parse_box(const json& j, const ImageRef& image) {
  if (!j.is_array() || j.size() != 4) throw std::invalid_argument("box must be [x0, y0, x1, y1]");
  for (const auto& v : j) {
    if (!v.is_number()) throw std::invalid_argument("box entries must be numbers");
  }
  return BBox::clipped(j[0].get<double>(), j[1].get<double>(), j[2].get<double>(),
                       j[3].get<double>(), image.width(), image.height());
}

// Loads the mask referenced by `ref` or rasterizes the box when it is null/absent.
BinaryMask region_mask(const json& region, const BBox& box, const ImageRef& image,
                       const fs::path& base) {
  auto it = region.find("mask");
  if (it == region.end() || it->is_null()) return box_to_mask(box, image.width(), image.height());
  if (!it->is_string()) throw std::invalid_argument("mask must be a path or null");
  auto mask = read_mask_png(resolve(base, it->get<std::string>()));
  if (mask.width() != image.width() || mask.height() != image.height()) {
    throw DimensionError("mask is " + std::to_string(mask.width()) + "x" +
                         std::to_string(mask.height()) + ", image is " +
                         std::to_string(image.width()) + "x" + std::to_string(image.height()));
  }
  return mask;
}

RegionCandidate parse_region(const json& j, const ImageRef& image, const fs::path& base) {
  if (!j.is_object()) throw std::invalid_argument("region must be an object");
  RegionCandidate r;
  r.box = parse_box(j.at("box"), image);
  const auto& score = j.at("score");
  if (!score.is_number()) throw std::invalid_argument("score must be a number");
  r.score = score.get<double>();
  if (!(r.score >= 0.0 && r.score <= 1.0)) {
    throw std::invalid_argument("score " + score.dump() + " outside [0, 1]");
  }
  if (auto it = j.find("phrase"); it != j.end() && !it->is_null()) r.phrase = it->get<std::string>();
  r.mask = region_mask(j, r.box, image, base);
  if (mask_area(r.mask) == 0) throw std::invalid_argument("region mask is empty");
  return r;
}

}  // namespace

CaseBundle load_case(const fs::path& manifest_path) {
  const auto doc = parse_manifest(manifest_path);
  if (!doc.is_object()) throw LoadError("manifest root must be an object");
  const auto base = manifest_path.parent_path();
  const auto where = " in " + manifest_path.string();

  CaseBundle bundle;
  try {
    bundle.image = read_image_png(resolve(base, doc.at("image").get<std::string>()));
  } catch (const std::exception& e) {
    throw LoadError(std::string("image: ") + e.what() + where);
  }

  try {
    const auto& feat = doc.at("features");
    const auto path = feat.is_string() ? feat.get<std::string>() : feat.at("path").get<std::string>();
    bundle.features = read_tensor(resolve(base, path));
    if (feat.is_object() && feat.contains("dims") && !feat["dims"].is_null()) {
      const auto dims = feat["dims"].get<std::vector<std::uint32_t>>();
      const std::vector<std::uint32_t> actual{bundle.features.fheight(), bundle.features.fwidth(),
                                              bundle.features.depth()};
      if (dims != actual) throw DimensionError("declared dims do not match tensor dims");
    }
  } catch (const std::exception& e) {
    throw LoadError(std::string("features: ") + e.what() + where);
  }

  const auto regions = doc.find("regions");
  if (regions == doc.end() || !regions->is_array()) {
    throw LoadError("manifest needs a 'regions' array" + where);
  }
  for (std::size_t i = 0; i < regions->size(); ++i) {
    try {
      bundle.candidates.push_back(parse_region((*regions)[i], bundle.image, base));
    } catch (const std::exception& e) {
      throw LoadError(e.what() + where, i);
    }
  }

  if (auto it = doc.find("object_region"); it != doc.end() && !it->is_null()) {
    try {
      RegionCandidate obj;
      obj.box = parse_box(it->at("box"), bundle.image);
      obj.mask = region_mask(*it, obj.box, bundle.image, base);
      obj.phrase = it->value("phrase", std::string{});
      obj.score = it->value("score", 1.0);
      if (mask_area(obj.mask) == 0) throw std::invalid_argument("object mask is empty");
      bundle.object_region = std::move(obj);
    } catch (const std::exception& e) {
      throw LoadError(std::string("object_region: ") + e.what() + where);
    }
  }

  if (auto it = doc.find("ground_truth"); it != doc.end() && !it->is_null()) {
    try {
      auto gt = read_mask_png(resolve(base, it->get<std::string>()));
      if (gt.width() != bundle.image.width() || gt.height() != bundle.image.height()) {
        throw DimensionError("ground truth size differs from image size");
      }
      bundle.ground_truth = std::move(gt);
    } catch (const std::exception& e) {
      throw LoadError(std::string("ground_truth: ") + e.what() + where);
    }
  }
  return bundle;
}

std::optional<std::string> manifest_category(const fs::path& manifest_path) {
  const auto doc = parse_manifest(manifest_path);
  if (auto it = doc.find("category"); it != doc.end() && it->is_string()) {
    return it->get<std::string>();
  }
  return std::nullopt;
}

fs::path write_case(const CaseBundle& bundle, const fs::path& dir, const std::string& stem,
                    const ManifestExtras& extras) {
  const auto asset_dir = dir / stem;
  fs::create_directories(asset_dir);
  const auto rel = [&](const std::string& name) { return stem + "/" + name; };

  json doc;
  write_image_png(bundle.image, asset_dir / "image.png");
  doc["image"] = rel("image.png");

  write_tensor(bundle.features, asset_dir / "features.saat");
  doc["features"] = {{"path", rel("features.saat")},
                     {"dims",
                      {bundle.features.fheight(), bundle.features.fwidth(),
                       bundle.features.depth()}}};

  const auto box_json = [](const BBox& b) { return json::array({b.x0, b.y0, b.x1, b.y1}); };

  json regions = json::array();
  for (std::size_t i = 0; i < bundle.candidates.size(); ++i) {
    const auto& r = bundle.candidates[i];
    char name[32];
    std::snprintf(name, sizeof(name), "region_%03zu.png", i);
    write_mask_png(r.mask, asset_dir / name);
    json region{{"box", box_json(r.box)}, {"score", r.score}, {"phrase", r.phrase},
                {"mask", rel(name)}};
    if (i < extras.region_roles.size()) region["role"] = extras.region_roles[i];
    regions.push_back(std::move(region));
  }
  doc["regions"] = std::move(regions);

  if (bundle.object_region) {
    write_mask_png(bundle.object_region->mask, asset_dir / "object.png");
    doc["object_region"] = {{"box", box_json(bundle.object_region->box)},
                            {"mask", rel("object.png")},
                            {"phrase", bundle.object_region->phrase},
                            {"score", bundle.object_region->score}};
  } else {
    doc["object_region"] = nullptr;
  }

  if (bundle.ground_truth) {
    write_mask_png(*bundle.ground_truth, asset_dir / "ground_truth.png");
    doc["ground_truth"] = rel("ground_truth.png");
  } else {
    doc["ground_truth"] = nullptr;
  }
  if (extras.category) doc["category"] = *extras.category;

  const auto manifest = dir / (stem + ".json");
  std::ofstream out(manifest, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write manifest " + manifest.string());
  out << doc.dump(2) << "\n";
  if (!out) throw Error("failed writing manifest " + manifest.string());
  return manifest;
}

}  // namespace saa
