/*
 * Copyright (C) 2026 The SAA Engine Authors
 * SPDX-License-Identifier: Apache-2.0
 */

#pragma once

// Private to saa_core: keeps nlohmann/json out of the installed headers.

#include "json.hpp"
#include "saa/core.hpp"

namespace saa::detail {

nlohmann::json config_to_json_value(const PipelineConfig& cfg);

}  // namespace saa::detail
