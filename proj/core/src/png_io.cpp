/*
 * Copyright (C) 2026 The SAA Engine Authors
 * SPDX-License-Identifier: Apache-2.0
 */

#include <png.h>

#include <cstring>
#include <vector>

#include "saa/errors.hpp"
#include "saa/interchange.hpp"

namespace saa {

namespace {

struct PngRead {
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  std::vector<std::uint8_t> pixels;
};

PngRead read_png(const std::filesystem::path& path, std::uint32_t format, std::size_t channels) {
  png_image image;
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.c_str())) {
    throw FormatError("cannot read PNG " + path.string() + ": " + image.message, 0);
  }
  image.format = format;
  PngRead out;
  out.width = image.width;
  out.height = image.height;
  out.pixels.resize(static_cast<std::size_t>(image.width) * image.height * channels);
  if (!png_image_finish_read(&image, nullptr, out.pixels.data(), 0, nullptr)) {
    std::string msg = image.message;
    png_image_free(&image);
    throw FormatError("cannot decode PNG " + path.string() + ": " + msg, 0);
  }
  return out;
}

void write_png(const std::filesystem::path& path, std::uint32_t width, std::uint32_t height,
               std::uint32_t format, const std::uint8_t* data) {
  png_image image;
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;
  image.width = width;
  image.height = height;
  image.format = format;
  if (!png_image_write_to_file(&image, path.c_str(), 0, data, 0, nullptr)) {
    throw Error("cannot write PNG " + path.string() + ": " + image.message);
  }
}

}  // namespace

BinaryMask read_mask_png(const std::filesystem::path& path) {
  auto png = read_png(path, PNG_FORMAT_GRAY, 1);
  return BinaryMask(png.width, png.height, std::move(png.pixels));
}

void write_mask_png(const BinaryMask& mask, const std::filesystem::path& path) {
  std::vector<std::uint8_t> gray(mask.size());
  const auto bits = mask.bits();
  for (std::size_t i = 0; i < gray.size(); ++i) gray[i] = bits[i] ? 255 : 0;
  write_png(path, mask.width(), mask.height(), PNG_FORMAT_GRAY, gray.data());
}

ImageRef read_image_png(const std::filesystem::path& path) {
  auto png = read_png(path, PNG_FORMAT_RGB, 3);
  return ImageRef(png.width, png.height, std::move(png.pixels), path.string());
}

void write_image_png(const ImageRef& image, const std::filesystem::path& path) {
  write_png(path, image.width(), image.height(), PNG_FORMAT_RGB, image.pixels().data());
}

}  // namespace saa
