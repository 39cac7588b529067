/*
 * Copyright (C) 2026 The SAA Engine Authors
 * SPDX-License-Identifier: Apache-2.0
 */

#include <gtest/gtest.h>

#include "json.hpp"
#include "saa/errors.hpp"
#include "saa/oracles.hpp"
#include "saa/metrics.hpp"
#include "test_util.hpp"

namespace saa {
namespace {

using test::rect;

AnomalyMap as_map(const BinaryMask& m, float on = 1.0f) {
  AnomalyMap a(m.width(), m.height());
  for (std::size_t i = 0; i < m.size(); ++i) a.values()[i] = m.bits()[i] ? on : 0.0f;
  return a;
}

AnomalyMap random_map(Xoshiro256& rng, std::uint32_t w, std::uint32_t h, int levels = 0) {
  AnomalyMap a(w, h);
  for (auto& v : a.values()) {
    const double u = rng.uniform();
    v = static_cast<float>(levels > 0 ? std::floor(u * levels) / levels : u);
  }
  return a;
}

// Disc of pixels with centers within r of (cx, cy).
BinaryMask disc(std::uint32_t w, std::uint32_t h, double cx, double cy, double r) {
  BinaryMask m(w, h);
  for (std::uint32_t y = 0; y < h; ++y) {
    for (std::uint32_t x = 0; x < w; ++x) {
      if (std::hypot(x + 0.5 - cx, y + 0.5 - cy) <= r) m.set(x, y);
    }
  }
  return m;
}

// First n pixels of a rectangle in raster order.
BinaryMask prefix_of(const BinaryMask& m, std::size_t n) {
  BinaryMask out(m.width(), m.height());
  for (std::uint32_t y = 0; y < m.height() && n; ++y) {
    for (std::uint32_t x = 0; x < m.width() && n; ++x) {
      if (m.get(x, y)) {
        out.set(x, y);
        --n;
      }
    }
  }
  return out;
}

TEST(Confusion, F1Formula) {
  EXPECT_EQ((Confusion{0, 3, 4}).f1(), 0.0);
  EXPECT_DOUBLE_EQ((Confusion{2, 1, 1}).f1(), 4.0 / 6.0);
  EXPECT_EQ((Confusion{0, 0, 0}).f1(), 0.0);
}

TEST(PixelF1, PerfectPrediction) {
  const auto gt = rect(10, 10, 2, 2, 6, 7);
  std::vector<AnomalyMap> p{as_map(gt)};
  std::vector<BinaryMask> t{gt};
  const auto r = max_f1_pixel(p, t);
  EXPECT_EQ(r.f1, 1.0);
  EXPECT_GT(r.threshold, 0.0);
  EXPECT_LE(r.threshold, 1.0);
}

TEST(PixelF1, ZeroPredictionScoresZero) {
  std::vector<AnomalyMap> p{AnomalyMap(8, 8)};
  std::vector<BinaryMask> t{rect(8, 8, 0, 0, 3, 3)};
  EXPECT_EQ(max_f1_pixel(p, t).f1, 0.0);
  EXPECT_EQ(max_f1_region(p, t).f1, 0.0);
}

TEST(PixelF1, DisjointPredictionScoresZero) {
  std::vector<AnomalyMap> p{as_map(rect(8, 8, 5, 5, 8, 8))};
  std::vector<BinaryMask> t{rect(8, 8, 0, 0, 3, 3)};
  EXPECT_EQ(max_f1_pixel(p, t).f1, 0.0);
  EXPECT_EQ(max_f1_region(p, t).f1, 0.0);
}

TEST(PixelF1, Errors) {
  std::vector<AnomalyMap> none;
  std::vector<BinaryMask> no_truth;
  EXPECT_THROW(max_f1_pixel(none, no_truth), std::invalid_argument);
  std::vector<AnomalyMap> p{AnomalyMap(4, 4), AnomalyMap(4, 4)};
  std::vector<BinaryMask> t{BinaryMask(4, 4)};
  EXPECT_THROW(max_f1_pixel(p, t), std::invalid_argument);
  std::vector<AnomalyMap> p1{AnomalyMap(4, 5)};
  EXPECT_THROW(max_f1_pixel(p1, t), DimensionError);
}

TEST(PixelF1, RandomMatchesExhaustiveOracle) {
  Xoshiro256 rng(32);
  for (int trial = 0; trial < 50; ++trial) {
    const int cases = static_cast<int>(rng.uniform_int(1, 3));
    std::vector<AnomalyMap> p;
    std::vector<BinaryMask> t;
    for (int c = 0; c < cases; ++c) {
      p.push_back(random_map(rng, 32, 32, trial % 2 ? 17 : 0));
      t.push_back(test::random_mask(rng, 32, 32, rng.uniform(0.05, 0.5)));
    }
    MetricConfig cfg;
    cfg.pixel_sweep = PixelSweep::kExact;
    const auto fast = max_f1_pixel(p, t, cfg);
    const auto slow = oracle::f1_sweep(p, t);
    EXPECT_LT(test::rel_err(fast.f1, slow.f1), 1e-5);
    EXPECT_EQ(fast.threshold, slow.threshold);
  }
}

TEST(PixelF1, AffineInvarianceIsBitExact) {
  Xoshiro256 rng(44);
  std::vector<AnomalyMap> p{random_map(rng, 24, 24, 40), random_map(rng, 24, 24, 40)};
  std::vector<BinaryMask> t{test::random_mask(rng, 24, 24, 0.2), test::random_mask(rng, 24, 24, 0.3)};
  // Make the truth correlate with the prediction so F1 is nontrivial.
  for (std::size_t c = 0; c < 2; ++c) {
    for (std::size_t i = 0; i < p[c].size(); ++i) {
      if (t[c].bits()[i]) p[c].values()[i] = 0.5f + 0.5f * p[c].values()[i];
    }
  }
  const auto base = max_f1_pixel(p, t);
  for (int k = 0; k < 20; ++k) {
    const float a = static_cast<float>(rng.uniform(0.5, 4.0));
    const float b = static_cast<float>(rng.uniform(-2.0, 2.0));
    auto q = p;
    for (auto& m : q) {
      for (auto& v : m.values()) v = a * v + b;
    }
    EXPECT_EQ(max_f1_pixel(q, t).f1, base.f1);
  }
}

TEST(PixelF1, QuantizedWithinHalfPercent) {
  Xoshiro256 rng(55);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<AnomalyMap> p;
    std::vector<BinaryMask> t;
    for (int c = 0; c < 3; ++c) {
      auto truth = disc(64, 64, rng.uniform(10, 54), rng.uniform(10, 54), rng.uniform(4, 12));
      AnomalyMap m(64, 64);
      for (std::size_t i = 0; i < m.size(); ++i) {
        m.values()[i] = static_cast<float>(rng.normal() * 0.3 + (truth.bits()[i] ? 1.0 : 0.0));
      }
      p.push_back(std::move(m));
      t.push_back(std::move(truth));
    }
    MetricConfig exact, quant;
    exact.pixel_sweep = PixelSweep::kExact;
    quant.pixel_sweep = PixelSweep::kQuantized;
    EXPECT_NEAR(max_f1_pixel(p, t, exact).f1, max_f1_pixel(p, t, quant).f1, 0.005);
  }
}

TEST(PixelF1, AutoSwitchesToQuantizedAboveLimit) {
  Xoshiro256 rng(3);
  std::vector<AnomalyMap> p{random_map(rng, 40, 40)};
  std::vector<BinaryMask> t{test::random_mask(rng, 40, 40, 0.3)};
  MetricConfig a, q;
  a.quantize_above = 100;
  q.pixel_sweep = PixelSweep::kQuantized;
  const auto ra = max_f1_pixel(p, t, a), rq = max_f1_pixel(p, t, q);
  EXPECT_EQ(ra.f1, rq.f1);
  EXPECT_EQ(ra.threshold, rq.threshold);
}

TEST(Components, EmptyAndDiagonal) {
  EXPECT_TRUE(connected_components(BinaryMask(5, 5)).empty());
  BinaryMask diag(4, 4);
  diag.set(1, 1);
  diag.set(2, 2);
  EXPECT_EQ(connected_components(diag).size(), 1u);
  BinaryMask apart(4, 4);
  apart.set(0, 0);
  apart.set(2, 0);
  EXPECT_EQ(connected_components(apart).size(), 2u);
}

TEST(Components, RasterOrderPartition) {
  Xoshiro256 rng(66);
  for (int trial = 0; trial < 100; ++trial) {
    const auto m = test::random_mask(rng, 30, 21, rng.uniform(0.05, 0.6));
    const auto comps = connected_components(m);
    EXPECT_EQ(comps.size(), oracle::component_count(m));
    std::vector<std::uint8_t> uni(m.size(), 0);
    std::size_t total = 0;
    std::size_t last_first = 0;
    for (std::size_t k = 0; k < comps.size(); ++k) {
      total += mask_area(comps[k]);
      std::size_t first = SIZE_MAX;
      for (std::size_t i = 0; i < comps[k].size(); ++i) {
        if (!comps[k].bits()[i]) continue;
        first = std::min(first, i);
        uni[i] = 1;
      }
      if (k > 0) {
        EXPECT_GT(first, last_first);
      }
      last_first = first;
    }
    EXPECT_EQ(BinaryMask(30, 21, uni), m);
    EXPECT_EQ(total, mask_area(m));  // disjoint
  }
}

TEST(RegionMatch, BoundaryAroundPointSix) {
  const auto gt = rect(20, 20, 0, 0, 10, 10);  // 100 px
  EXPECT_EQ(match_regions(prefix_of(gt, 59), gt).tp, 0u);
  EXPECT_EQ(match_regions(prefix_of(gt, 60), gt).tp, 0u);
  EXPECT_EQ(match_regions(prefix_of(gt, 61), gt).tp, 1u);
}

TEST(RegionMatch, HalfOverlapIsNoMatch) {
  const auto gt = rect(20, 20, 0, 0, 10, 10);
  std::vector<AnomalyMap> p{as_map(prefix_of(gt, 50))};
  std::vector<BinaryMask> t{gt};
  const auto c = match_regions(prefix_of(gt, 50), gt);
  EXPECT_EQ(c.tp, 0u);
  EXPECT_EQ(c.fp, 1u);
  EXPECT_EQ(c.fn, 1u);
  EXPECT_EQ(max_f1_region(p, t).f1, 0.0);
}

TEST(RegionMatch, IntersectionOverTruthOption) {
  const auto gt = rect(20, 20, 0, 0, 10, 10);
  const auto big = rect(20, 20, 0, 0, 20, 10);  // IoU 0.5, covers all of gt
  MetricConfig cfg;
  EXPECT_EQ(match_regions(big, gt, cfg).tp, 0u);
  cfg.region_overlap = RegionOverlap::kIntersectionOverTruth;
  EXPECT_EQ(match_regions(big, gt, cfg).tp, 1u);
}

TEST(RegionMatch, NonConflictingInstancesMatchExhaustiveOracle) {
  Xoshiro256 rng(88);
  for (int trial = 0; trial < 60; ++trial) {
    BinaryMask gt(32, 32), pred(32, 32);
    // Blobs on a coarse lattice so no prediction touches two truths.
    for (int gy = 0; gy < 3; ++gy) {
      for (int gx = 0; gx < 3; ++gx) {
        const double cx = 5.5 + 10.5 * gx, cy = 5.5 + 10.5 * gy;
        const bool has_gt = rng.uniform() < 0.6;
        const bool has_pred = rng.uniform() < 0.6;
        if (has_gt) {
          const auto d = disc(32, 32, cx, cy, rng.uniform(1.5, 4));
          for (std::size_t i = 0; i < d.size(); ++i) {
            if (d.bits()[i]) gt.set(std::uint32_t(i % 32), std::uint32_t(i / 32));
          }
        }
        if (has_pred) {
          const auto d = disc(32, 32, cx + rng.uniform(-1.5, 1.5), cy + rng.uniform(-1.5, 1.5),
                              rng.uniform(1.5, 4));
          for (std::size_t i = 0; i < d.size(); ++i) {
            if (d.bits()[i]) pred.set(std::uint32_t(i % 32), std::uint32_t(i / 32));
          }
        }
      }
    }
    const auto fast = match_regions(pred, gt);
    const auto slow = oracle::region_confusion(pred, gt, 0.6);
    EXPECT_EQ(fast.tp, slow.tp);
    EXPECT_EQ(fast.fp, slow.fp);
    EXPECT_EQ(fast.fn, slow.fn);
  }
}

TEST(RegionF1, PerfectPrediction) {
  BinaryMask gt = rect(30, 30, 2, 2, 8, 8);
  const auto second = rect(30, 30, 15, 15, 25, 20);
  for (std::size_t i = 0; i < gt.size(); ++i) {
    if (second.bits()[i]) gt.set(std::uint32_t(i % 30), std::uint32_t(i / 30));
  }
  std::vector<AnomalyMap> p{as_map(gt, 0.7f)};
  std::vector<BinaryMask> t{gt};
  EXPECT_EQ(max_f1_region(p, t).f1, 1.0);
  EXPECT_EQ(max_f1_pixel(p, t).f1, 1.0);
}

TEST(RegionF1, QuantileCandidates) {
  AnomalyMap m(10, 10);
  for (std::size_t i = 0; i < 100; ++i) m.values()[i] = float(i);  // 99 positive values
  std::vector<AnomalyMap> p{m};
  const auto c = region_threshold_candidates(p);
  ASSERT_FALSE(c.empty());
  EXPECT_EQ(c.front(), 1.0);
  EXPECT_EQ(c.back(), 99.0);
  EXPECT_LE(c.size(), 50u);
  EXPECT_TRUE(std::is_sorted(c.begin(), c.end()));
}

TEST(RegionF1, WorkerCountDoesNotMatter) {
  Xoshiro256 rng(90);
  std::vector<AnomalyMap> p{random_map(rng, 40, 40, 10)};
  std::vector<BinaryMask> t{test::random_mask(rng, 40, 40, 0.3)};
  MetricConfig one, many;
  many.workers = 4;
  const auto a = max_f1_region(p, t, one), b = max_f1_region(p, t, many);
  EXPECT_EQ(a.f1, b.f1);
  EXPECT_EQ(a.threshold, b.threshold);
}

TEST(Aggregate, SingleCategoryEqualsPooled) {
  std::vector<EvalCase> cases{{"a", as_map(rect(8, 8, 0, 0, 4, 4)), rect(8, 8, 0, 0, 4, 5)},
                              {"b", as_map(rect(8, 8, 2, 2, 6, 6), 0.5f), rect(8, 8, 2, 2, 6, 6)}};
  const auto r = aggregate(cases, {{"a", "x"}, {"b", "x"}});
  ASSERT_TRUE(r.pixel);
  EXPECT_EQ(r.per_category.at("x").pixel.f1, r.pixel->f1);
  EXPECT_EQ(r.per_category.at("x").region.f1, r.region->f1);
  EXPECT_EQ(r.case_count, 2u);
}

TEST(Aggregate, PooledFromCountsNotAveraged) {
  const auto gt = rect(8, 8, 0, 0, 2, 2);
  std::vector<EvalCase> cases{{"good", as_map(gt), gt}, {"bad", AnomalyMap(8, 8), gt}};
  const auto r = aggregate(cases, {{"good", "g"}, {"bad", "b"}});
  EXPECT_EQ(r.per_category.at("g").pixel.f1, 1.0);
  EXPECT_EQ(r.per_category.at("b").pixel.f1, 0.0);
  // TP 4, FP 0, FN 4.
  EXPECT_DOUBLE_EQ(r.pixel->f1, 2.0 / 3.0);
}

TEST(Aggregate, EmptyInputAndEmptyGrouping) {
  const auto empty = aggregate({}, {});
  EXPECT_EQ(empty.case_count, 0u);
  EXPECT_FALSE(empty.pixel);
  EXPECT_TRUE(empty.per_category.empty());

  const auto gt = rect(8, 8, 0, 0, 2, 2);
  std::vector<EvalCase> cases{{"a", as_map(gt), gt}};
  const auto r = aggregate(cases, {});
  EXPECT_EQ(r.case_count, 1u);
  EXPECT_TRUE(r.per_category.empty());
}

TEST(Report, JsonKeysAndTable) {
  const auto gt = rect(8, 8, 0, 0, 2, 2);
  std::vector<EvalCase> cases{{"a", as_map(gt), gt}};
  const auto r = aggregate(cases, {{"a", "bottle"}});
  const auto doc = nlohmann::json::parse(report_to_json(r));
  for (const char* key : {"f1_pixel_max", "f1_region_max", "threshold_pixel", "threshold_region",
                          "per_category", "case_count"}) {
    EXPECT_TRUE(doc.contains(key)) << key;
  }
  EXPECT_EQ(doc["f1_pixel_max"], 1.0);
  const auto table = report_to_table(r);
  EXPECT_NE(table.find("bottle"), std::string::npos);
  EXPECT_NE(table.find("Total"), std::string::npos);
  EXPECT_NE(table.find("100.00"), std::string::npos);
}

}  // namespace
}  // namespace saa
