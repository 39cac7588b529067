/*
 * Copyright (C) 2026 The SAA Engine Authors
 * SPDX-License-Identifier: Apache-2.0
 */

#pragma once

#include <filesystem>
#include <string>

#include "saa/core.hpp"

namespace saa {

/// Parses a JSON config document. Keys mirror PipelineConfig field names; absent keys keep
/// their defaults and unknown keys are ignored. Throws ConfigError on bad types or values.
PipelineConfig config_from_json(const std::string& text);
PipelineConfig load_config(const std::filesystem::path& path);

/// Pretty-printed JSON with every field present.
std::string config_to_json(const PipelineConfig& cfg);
void save_config(const PipelineConfig& cfg, const std::filesystem::path& path);

}  // namespace saa
