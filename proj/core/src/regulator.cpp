/*
 * Copyright (C) 2026 The SAA Engine Authors
 * SPDX-License-Identifier: Apache-2.0
 */

#include "saa/regulator.hpp"

#include <algorithm>
#include <chrono>
#include <map>
#include <numeric>
#include <stdexcept>

#include "json_support.hpp"
#include "saa/errors.hpp"

namespace saa {

using nlohmann::json;

std::vector<RunIndex> merge_prompt_run_indices(std::span<const std::vector<RegionCandidate>> runs,
                                               double dedupe_iou) {
  std::vector<RunIndex> order;
  for (std::size_t r = 0; r < runs.size(); ++r) {
    for (std::size_t i = 0; i < runs[r].size(); ++i) order.push_back({r, i});
  }
  const auto at = [&](const RunIndex& ri) -> const RegionCandidate& {
    return runs[ri.run][ri.index];
  };
  // Flattened order already is (run, index), so a stable sort settles ties.
  std::stable_sort(order.begin(), order.end(), [&](const RunIndex& a, const RunIndex& b) {
    return at(a).score > at(b).score;
  });

  std::vector<RunIndex> kept;
  for (const auto& ri : order) {
    const auto& box = at(ri).box;
    const bool duplicate = std::any_of(kept.begin(), kept.end(), [&](const RunIndex& k) {
      return box_iou(at(k).box, box) > dedupe_iou;
    });
    if (!duplicate) kept.push_back(ri);
  }
  return kept;
}

std::vector<RegionCandidate> merge_prompt_runs(std::span<const std::vector<RegionCandidate>> runs,
                                               double dedupe_iou) {
  std::vector<RegionCandidate> out;
  for (const auto& ri : merge_prompt_run_indices(runs, dedupe_iou)) {
    out.push_back(runs[ri.run][ri.index]);
  }
  return out;
}

std::vector<std::size_t> property_filter_indices(std::span<const RegionCandidate> candidates,
                                                 const std::optional<RegionCandidate>& object,
                                                 const PipelineConfig& cfg) {
  std::vector<std::size_t> kept;
  if (candidates.empty()) return kept;

  const auto& first = candidates.front().mask;
  const double object_area = object ? double(mask_area(object->mask))
                                    : double(first.width()) * double(first.height());
  const double max_area = cfg.theta_area * object_area;

  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const auto& mask = candidates[i].mask;
    if (object && mask_overlap(mask, object->mask, cfg.overlap_mode) < cfg.theta_iou) continue;
    if (double(mask_area(mask)) > max_area) continue;
    kept.push_back(i);
  }
  return kept;
}

std::vector<RegionCandidate> filter_by_property(std::span<const RegionCandidate> candidates,
                                                const std::optional<RegionCandidate>& object,
                                                const PipelineConfig& cfg) {
  std::vector<RegionCandidate> out;
  for (auto i : property_filter_indices(candidates, object, cfg)) out.push_back(candidates[i]);
  return out;
}

std::vector<std::size_t> topk_indices(std::span<const RegionCandidate> candidates, int k) {
  if (k < 1) throw std::invalid_argument("k must be >= 1");
  for (const auto& c : candidates) {
    if (!c.calibrated_score) throw std::invalid_argument("top-K needs calibrated scores");
  }
  std::vector<std::size_t> idx(candidates.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return *candidates[a].calibrated_score > *candidates[b].calibrated_score;
  });
  idx.resize(std::min<std::size_t>(idx.size(), static_cast<std::size_t>(k)));
  return idx;
}

std::vector<RegionCandidate> select_topk(std::span<const RegionCandidate> candidates, int k) {
  std::vector<RegionCandidate> out;
  for (auto i : topk_indices(candidates, k)) out.push_back(candidates[i]);
  return out;
}

AnomalyMap fuse_topk(std::span<const RegionCandidate> selected, std::uint32_t width,
                     std::uint32_t height) {
  const std::size_t n = static_cast<std::size_t>(width) * height;
  std::vector<double> sum(n, 0.0);
  std::vector<std::uint32_t> cover(n, 0);
  for (const auto& r : selected) {
    if (r.mask.width() != width || r.mask.height() != height) {
      throw DimensionError("selected region mask does not match the map size");
    }
    if (!r.calibrated_score) throw std::invalid_argument("fusion needs calibrated scores");
    const double s = *r.calibrated_score;
    const auto bits = r.mask.bits();
    for (std::size_t i = 0; i < n; ++i) {
      if (bits[i]) {
        sum[i] += s;
        ++cover[i];
      }
    }
  }
  AnomalyMap map(width, height);
  auto values = map.values();
  for (std::size_t i = 0; i < n; ++i) {
    if (cover[i]) values[i] = static_cast<float>(sum[i] / double(cover[i]));
  }
  return map;
}

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

// Groups candidates by phrase: configured prompts first (agnostic, then specific), then any
// other phrase in order of first appearance. Returns runs of source indices.
std::vector<std::vector<std::size_t>> group_runs(const CaseBundle& bundle,
                                                 const PipelineConfig& cfg) {
  std::vector<std::string> phrases;
  const auto add = [&](const std::string& p) {
    if (std::find(phrases.begin(), phrases.end(), p) == phrases.end()) phrases.push_back(p);
  };
  for (const auto& p : cfg.class_agnostic_prompts) add(p);
  for (const auto& p : cfg.class_specific_prompts) add(p);
  for (const auto& c : bundle.candidates) add(c.phrase);

  std::map<std::string, std::size_t> slot;
  for (std::size_t i = 0; i < phrases.size(); ++i) slot.emplace(phrases[i], i);
  std::vector<std::vector<std::size_t>> runs(phrases.size());
  for (std::size_t i = 0; i < bundle.candidates.size(); ++i) {
    runs[slot.at(bundle.candidates[i].phrase)].push_back(i);
  }
  std::erase_if(runs, [](const auto& r) { return r.empty(); });
  return runs;
}

}  // namespace

PipelineResult run_pipeline(const CaseBundle& bundle, const PipelineConfig& cfg,
                            unsigned saliency_workers) {
  cfg.validate();
  const auto width = bundle.image.width();
  const auto height = bundle.image.height();

  PipelineResult result;
  auto& trace = result.trace;
  trace.config = cfg;
  trace.counts.input = bundle.candidates.size();

  if (bundle.candidates.empty()) {
    trace.note = "no candidates; anomaly map is zero";
    result.map = AnomalyMap(width, height);
    return result;
  }

  // Merge.
  auto t0 = Clock::now();
  const auto run_sources = group_runs(bundle, cfg);
  std::vector<std::vector<RegionCandidate>> runs;
  for (const auto& rs : run_sources) {
    auto& run = runs.emplace_back();
    for (auto i : rs) run.push_back(bundle.candidates[i]);
  }
  std::vector<RegionCandidate> merged;
  for (const auto& ri : merge_prompt_run_indices(runs, cfg.dedupe_iou)) {
    merged.push_back(runs[ri.run][ri.index]);
    auto& ct = trace.candidates.emplace_back();
    ct.source_index = run_sources[ri.run][ri.index];
    ct.phrase = merged.back().phrase;
    ct.box = merged.back().box;
    ct.score = merged.back().score;
  }
  trace.counts.merged = merged.size();
  trace.timings.merge_ms = ms_since(t0);

  // Property prompts.
  t0 = Clock::now();
  std::vector<std::size_t> alive(merged.size());
  std::iota(alive.begin(), alive.end(), std::size_t{0});
  if (cfg.toggles.property_filter) {
    alive = property_filter_indices(merged, bundle.object_region, cfg);
  }
  for (auto i : alive) trace.candidates[i].passed_filter = true;
  trace.counts.filtered = alive.size();
  trace.timings.filter_ms = ms_since(t0);

  // Saliency prompts.
  t0 = Clock::now();
  std::vector<RegionCandidate> pool;
  pool.reserve(alive.size());
  for (auto i : alive) pool.push_back(merged[i]);
  if (cfg.toggles.saliency_prompt && !pool.empty()) {
    const auto saliency =
        compute_saliency(bundle.features, cfg.n_neighbors, width, height, saliency_workers);
    pool = rescore(pool, saliency);
  } else {
    for (auto& c : pool) c.calibrated_score = c.score;
  }
  for (std::size_t j = 0; j < pool.size(); ++j) {
    trace.candidates[alive[j]].saliency_prompt = pool[j].saliency_prompt;
    trace.candidates[alive[j]].calibrated_score = pool[j].calibrated_score;
  }
  trace.timings.saliency_ms = ms_since(t0);

  // Confidence prompts.
  t0 = Clock::now();
  std::vector<std::size_t> chosen(pool.size());
  std::iota(chosen.begin(), chosen.end(), std::size_t{0});
  if (cfg.toggles.confidence_prompt) chosen = topk_indices(pool, cfg.top_k);
  std::vector<RegionCandidate> selected;
  for (std::size_t rank = 0; rank < chosen.size(); ++rank) {
    selected.push_back(pool[chosen[rank]]);
    trace.candidates[alive[chosen[rank]]].rank = rank;
  }
  trace.counts.selected = selected.size();
  trace.timings.select_ms = ms_since(t0);

  t0 = Clock::now();
  result.map = fuse_topk(selected, width, height);
  trace.timings.fuse_ms = ms_since(t0);
  if (selected.empty()) trace.note = "no candidate survived; anomaly map is zero";
  return result;
}

std::string trace_to_json(const PipelineTrace& trace, bool include_timings) {
  json doc;
  doc["config"] = detail::config_to_json_value(trace.config);
  doc["counts"] = {{"input", trace.counts.input},
                   {"merged", trace.counts.merged},
                   {"filtered", trace.counts.filtered},
                   {"selected", trace.counts.selected}};
  json cands = json::array();
  for (const auto& c : trace.candidates) {
    json j{{"source_index", c.source_index},
           {"phrase", c.phrase},
           {"box", {c.box.x0, c.box.y0, c.box.x1, c.box.y1}},
           {"score", c.score},
           {"passed_filter", c.passed_filter},
           {"saliency_prompt", nullptr},
           {"calibrated_score", nullptr},
           {"selected", c.rank.has_value()},
           {"rank", nullptr}};
    if (c.saliency_prompt) j["saliency_prompt"] = *c.saliency_prompt;
    if (c.calibrated_score) j["calibrated_score"] = *c.calibrated_score;
    if (c.rank) j["rank"] = *c.rank;
    cands.push_back(std::move(j));
  }
  doc["candidates"] = std::move(cands);
  doc["note"] = trace.note ? json(*trace.note) : json(nullptr);
  if (include_timings) {
    doc["timings_ms"] = {{"merge", trace.timings.merge_ms},
                         {"filter", trace.timings.filter_ms},
                         {"saliency", trace.timings.saliency_ms},
                         {"select", trace.timings.select_ms},
                         {"fuse", trace.timings.fuse_ms}};
  }
  return doc.dump(2) + "\n";
}

}  // namespace saa
