/*
 * Copyright (C) 2026 The SAA Engine Authors
 * SPDX-License-Identifier: Apache-2.0
 */

#include <gtest/gtest.h>

#include "saa/config.hpp"
#include "saa/errors.hpp"
#include "test_util.hpp"

namespace saa {
namespace {

TEST(Config, EmptyObjectGivesDefaults) {
  EXPECT_EQ(config_from_json("{}"), PipelineConfig{});
}

TEST(Config, RoundTrip) {
  PipelineConfig cfg;
  cfg.class_specific_prompts = {"scratch"};
  cfg.theta_iou = 0.25;
  cfg.theta_area = 0.4;
  cfg.overlap_mode = OverlapMode::kIntersectionOverUnion;
  cfg.n_neighbors = 7;
  cfg.top_k = 3;
  cfg.toggles.saliency_prompt = false;
  cfg.input_width = 256;
  cfg.input_height = 320;
  EXPECT_EQ(config_from_json(config_to_json(cfg)), cfg);

  test::TempDir dir;
  save_config(cfg, dir / "c.json");
  EXPECT_EQ(load_config(dir / "c.json"), cfg);
}

TEST(Config, UnknownKeysIgnored) {
  const auto cfg = config_from_json(R"({"top_k": 2, "future_knob": [1, 2, 3]})");
  EXPECT_EQ(cfg.top_k, 2);
}

TEST(Config, PartialToggles) {
  const auto cfg = config_from_json(R"({"toggles": {"confidence_prompt": false}})");
  EXPECT_TRUE(cfg.toggles.property_filter);
  EXPECT_TRUE(cfg.toggles.saliency_prompt);
  EXPECT_FALSE(cfg.toggles.confidence_prompt);
}

TEST(Config, Errors) {
  EXPECT_THROW(config_from_json("not json"), ConfigError);
  EXPECT_THROW(config_from_json("[1]"), ConfigError);
  EXPECT_THROW(config_from_json(R"({"top_k": "five"})"), ConfigError);
  EXPECT_THROW(config_from_json(R"({"top_k": 0})"), ConfigError);
  EXPECT_THROW(config_from_json(R"({"overlap_mode": "dice"})"), ConfigError);
  EXPECT_THROW(config_from_json(R"({"input_resolution": [400]})"), ConfigError);
  EXPECT_THROW(load_config("/nonexistent/config.json"), ConfigError);
}

}  // namespace
}  // namespace saa
