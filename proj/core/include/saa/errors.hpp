/*
 * Copyright (C) 2026 The SAA Engine Authors
 * SPDX-License-Identifier: Apache-2.0
 */

#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>

namespace saa {

/// Base class for every error raised by the engine.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed binary or image file. `offset` is the byte offset where parsing failed.
class FormatError : public Error {
 public:
  FormatError(const std::string& what, std::size_t offset)
      : Error(what + " (at byte offset " + std::to_string(offset) + ")"), offset_(offset) {}
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

/// Well-formed container holding invalid values (e.g. a non-finite float).
class DataError : public Error {
 public:
  DataError(const std::string& what, std::size_t index)
      : Error(what + " (at element " + std::to_string(index) + ")"), index_(index) {}
  std::size_t index() const noexcept { return index_; }

 private:
  std::size_t index_;
};

/// Two rasters that must agree in size do not.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Case manifest could not be hydrated. Carries the offending region index when one applies.
class LoadError : public Error {
 public:
  explicit LoadError(const std::string& what) : Error(what) {}
  LoadError(const std::string& what, std::size_t region_index)
      : Error("region " + std::to_string(region_index) + ": " + what), region_(region_index) {}
  std::optional<std::size_t> region_index() const noexcept { return region_; }

 private:
  std::optional<std::size_t> region_;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace saa
