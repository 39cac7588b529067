/*
 * Copyright (C) 2026 The SAA Engine Authors
 * SPDX-License-Identifier: Apache-2.0
 */

#include "saa/config.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"
#include "saa/errors.hpp"
#include "json_support.hpp"

namespace saa {

using nlohmann::json;

namespace detail {

json config_to_json_value(const PipelineConfig& cfg) {
  return json{
      {"class_agnostic_prompts", cfg.class_agnostic_prompts},
      {"class_specific_prompts", cfg.class_specific_prompts},
      {"object_prompt", cfg.object_prompt},
      {"theta_iou", cfg.theta_iou},
      {"theta_area", cfg.theta_area},
      {"overlap_mode", to_string(cfg.overlap_mode)},
      {"n_neighbors", cfg.n_neighbors},
      {"top_k", cfg.top_k},
      {"dedupe_iou", cfg.dedupe_iou},
      {"toggles",
       {{"property_filter", cfg.toggles.property_filter},
        {"saliency_prompt", cfg.toggles.saliency_prompt},
        {"confidence_prompt", cfg.toggles.confidence_prompt}}},
      {"input_resolution", {cfg.input_width, cfg.input_height}},
  };
}

}  // namespace detail

namespace {

template <typename T>
void read_if_present(const json& doc, const char* key, T& out) {
  auto it = doc.find(key);
  if (it == doc.end() || it->is_null()) return;
  try {
    out = it->get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config key '") + key + "': " + e.what());
  }
}

}  // namespace

PipelineConfig config_from_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ConfigError("config root must be a JSON object");

  PipelineConfig cfg;
  read_if_present(doc, "class_agnostic_prompts", cfg.class_agnostic_prompts);
  read_if_present(doc, "class_specific_prompts", cfg.class_specific_prompts);
  read_if_present(doc, "object_prompt", cfg.object_prompt);
  read_if_present(doc, "theta_iou", cfg.theta_iou);
  read_if_present(doc, "theta_area", cfg.theta_area);
  read_if_present(doc, "n_neighbors", cfg.n_neighbors);
  read_if_present(doc, "top_k", cfg.top_k);
  read_if_present(doc, "dedupe_iou", cfg.dedupe_iou);

  std::string mode;
  read_if_present(doc, "overlap_mode", mode);
  if (!mode.empty()) cfg.overlap_mode = overlap_mode_from_string(mode);

  if (auto it = doc.find("toggles"); it != doc.end() && !it->is_null()) {
    if (!it->is_object()) throw ConfigError("config key 'toggles' must be an object");
    read_if_present(*it, "property_filter", cfg.toggles.property_filter);
    read_if_present(*it, "saliency_prompt", cfg.toggles.saliency_prompt);
    read_if_present(*it, "confidence_prompt", cfg.toggles.confidence_prompt);
  }
  if (auto it = doc.find("input_resolution"); it != doc.end() && !it->is_null()) {
    std::vector<std::uint32_t> res;
    read_if_present(doc, "input_resolution", res);
    if (res.size() != 2) throw ConfigError("input_resolution must be [width, height]");
    cfg.input_width = res[0];
    cfg.input_height = res[1];
  }

  cfg.validate();
  return cfg;
}

PipelineConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return config_from_json(ss.str());
}

std::string config_to_json(const PipelineConfig& cfg) {
  return detail::config_to_json_value(cfg).dump(2) + "\n";
}

void save_config(const PipelineConfig& cfg, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write config file " + path.string());
  out << config_to_json(cfg);
  if (!out) throw Error("failed writing config file " + path.string());
}

}  // namespace saa
