/*
 * Copyright (C) 2026 The SAA Engine Authors
 * SPDX-License-Identifier: Apache-2.0
 */

#include "saa/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>
#include <unordered_map>
#include <utility>

#include "json.hpp"
#include "parallel.hpp"
#include "saa/errors.hpp"

namespace saa {

double Confusion::f1() const noexcept {
  if (tp == 0) return 0.0;
  return 2.0 * double(tp) / (2.0 * double(tp) + double(fp) + double(fn));
}

namespace {

void check_aligned(std::span<const AnomalyMap> predictions, std::span<const BinaryMask> truths) {
  if (predictions.empty()) throw std::invalid_argument("no predictions to evaluate");
  if (predictions.size() != truths.size()) {
    throw std::invalid_argument("prediction and truth lists differ in length");
  }
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    if (predictions[i].width() != truths[i].width() ||
        predictions[i].height() != truths[i].height()) {
      throw DimensionError("prediction " + std::to_string(i) + " does not match its truth size");
    }
  }
}

F1Result sweep_exact(std::span<const AnomalyMap> predictions, std::span<const BinaryMask> truths,
                     std::size_t total) {
  std::vector<std::pair<float, std::uint8_t>> pooled;
  pooled.reserve(total);
  std::size_t positives = 0;
  for (std::size_t c = 0; c < predictions.size(); ++c) {
    const auto v = predictions[c].values();
    const auto t = truths[c].bits();
    for (std::size_t i = 0; i < v.size(); ++i) {
      pooled.emplace_back(v[i], t[i]);
      positives += t[i];
    }
  }
  std::sort(pooled.begin(), pooled.end(),
            [](const auto& a, const auto& b) { return a.first > b.first; });

  const float minimum = pooled.back().first;
  F1Result best{0.0, double(minimum)};
  Confusion cm;
  cm.fn = positives;
  for (std::size_t i = 0; i < pooled.size();) {
    const float value = pooled[i].first;
    if (value == minimum) break;
    for (; i < pooled.size() && pooled[i].first == value; ++i) {
      if (pooled[i].second) {
        ++cm.tp;
        --cm.fn;
      } else {
        ++cm.fp;
      }
    }
    const double f1 = cm.f1();
    if (f1 > best.f1) best = {f1, double(value)};
  }
  return best;
}

F1Result sweep_quantized(std::span<const AnomalyMap> predictions,
                         std::span<const BinaryMask> truths, int bins) {
  float lo = predictions[0].values().empty() ? 0.f : predictions[0].values()[0];
  float hi = lo;
  for (const auto& p : predictions) {
    for (float v : p.values()) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  F1Result best{0.0, double(lo)};
  if (!(hi > lo)) return best;

  const double width = (double(hi) - double(lo)) / bins;
  std::vector<std::size_t> pos(bins, 0), neg(bins, 0);
  std::size_t positives = 0;
  for (std::size_t c = 0; c < predictions.size(); ++c) {
    const auto v = predictions[c].values();
    const auto t = truths[c].bits();
    for (std::size_t i = 0; i < v.size(); ++i) {
      const auto b = std::min<std::size_t>(
          bins - 1, static_cast<std::size_t>((double(v[i]) - double(lo)) / width));
      (t[i] ? pos : neg)[b]++;
      positives += t[i];
    }
  }
  // Threshold at edge b makes bins >= b positive; bin 0 holds the minimum.
  Confusion cm;
  cm.fn = positives;
  for (int b = bins - 1; b >= 1; --b) {
    cm.tp += pos[b];
    cm.fn -= pos[b];
    cm.fp += neg[b];
    const double f1 = cm.f1();
    if (f1 > best.f1) best = {f1, double(lo) + b * width};
  }
  return best;
}

BinaryMask binarize(const AnomalyMap& map, double threshold) {
  std::vector<std::uint8_t> bits(map.size());
  const auto v = map.values();
  for (std::size_t i = 0; i < v.size(); ++i) bits[i] = double(v[i]) >= threshold;
  return BinaryMask(map.width(), map.height(), std::move(bits));
}

Confusion match_labels(const ComponentLabels& pred, const ComponentLabels& truth,
                       const MetricConfig& cfg) {
  Confusion cm;
  if (pred.count() == 0 || truth.count() == 0) {
    cm.fp = pred.count();
    cm.fn = truth.count();
    return cm;
  }
  std::unordered_map<std::uint64_t, std::size_t> inter;
  for (std::size_t i = 0; i < pred.labels.size(); ++i) {
    const auto p = pred.labels[i];
    const auto g = truth.labels[i];
    if (p && g) ++inter[(std::uint64_t(p) << 32) | g];
  }

  struct Pair {
    double overlap;
    std::uint32_t p, g;
  };
  std::vector<Pair> pairs;
  for (const auto& [key, n] : inter) {
    const auto p = static_cast<std::uint32_t>(key >> 32);
    const auto g = static_cast<std::uint32_t>(key & 0xffffffffu);
    const double ap = double(pred.areas[p - 1]);
    const double ag = double(truth.areas[g - 1]);
    const double overlap = cfg.region_overlap == RegionOverlap::kIoU
                               ? double(n) / (ap + ag - double(n))
                               : double(n) / ag;
    if (overlap > cfg.region_match) pairs.push_back({overlap, p, g});
  }
  std::sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) {
    if (a.overlap != b.overlap) return a.overlap > b.overlap;
    return std::pair(a.p, a.g) < std::pair(b.p, b.g);
  });

  std::vector<char> used_p(pred.count() + 1, 0), used_g(truth.count() + 1, 0);
  for (const auto& pr : pairs) {
    if (used_p[pr.p] || used_g[pr.g]) continue;
    used_p[pr.p] = used_g[pr.g] = 1;
    ++cm.tp;
  }
  cm.fp = pred.count() - cm.tp;
  cm.fn = truth.count() - cm.tp;
  return cm;
}

}  // namespace

F1Result max_f1_pixel(std::span<const AnomalyMap> predictions, std::span<const BinaryMask> truths,
                      const MetricConfig& cfg) {
  check_aligned(predictions, truths);
  std::size_t total = 0;
  for (const auto& p : predictions) total += p.size();
  if (total == 0) throw std::invalid_argument("predictions hold no pixels");

  const bool quantize = cfg.pixel_sweep == PixelSweep::kQuantized ||
                        (cfg.pixel_sweep == PixelSweep::kAuto && total > cfg.quantize_above);
  if (quantize) {
    if (cfg.quantize_bins < 2) throw std::invalid_argument("quantize_bins must be >= 2");
    return sweep_quantized(predictions, truths, cfg.quantize_bins);
  }
  return sweep_exact(predictions, truths, total);
}

ComponentLabels label_components(const BinaryMask& mask) {
  ComponentLabels out;
  out.width = mask.width();
  out.height = mask.height();
  out.labels.assign(mask.size(), 0);
  const auto bits = mask.bits();
  const auto w = static_cast<std::int64_t>(mask.width());
  const auto h = static_cast<std::int64_t>(mask.height());

  std::vector<std::size_t> stack;
  for (std::size_t start = 0; start < bits.size(); ++start) {
    if (!bits[start] || out.labels[start]) continue;
    const auto label = static_cast<std::uint32_t>(out.areas.size() + 1);
    std::size_t area = 0;
    out.labels[start] = label;
    stack.push_back(start);
    while (!stack.empty()) {
      const auto i = stack.back();
      stack.pop_back();
      ++area;
      const auto x = static_cast<std::int64_t>(i % mask.width());
      const auto y = static_cast<std::int64_t>(i / mask.width());
      for (std::int64_t dy = -1; dy <= 1; ++dy) {
        for (std::int64_t dx = -1; dx <= 1; ++dx) {
          const auto nx = x + dx, ny = y + dy;
          if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
          const auto j = static_cast<std::size_t>(ny * w + nx);
          if (bits[j] && !out.labels[j]) {
            out.labels[j] = label;
            stack.push_back(j);
          }
        }
      }
    }
    out.areas.push_back(area);
  }
  return out;
}

std::vector<BinaryMask> connected_components(const BinaryMask& mask) {
  const auto labels = label_components(mask);
  std::vector<std::vector<std::uint8_t>> bits(labels.count(),
                                              std::vector<std::uint8_t>(mask.size(), 0));
  for (std::size_t i = 0; i < labels.labels.size(); ++i) {
    if (labels.labels[i]) bits[labels.labels[i] - 1][i] = 1;
  }
  std::vector<BinaryMask> out;
  out.reserve(bits.size());
  for (auto& b : bits) out.emplace_back(mask.width(), mask.height(), std::move(b));
  return out;
}

Confusion match_regions(const BinaryMask& predicted, const BinaryMask& truth,
                        const MetricConfig& cfg) {
  if (!predicted.same_shape(truth)) throw DimensionError("mask dimensions differ");
  return match_labels(label_components(predicted), label_components(truth), cfg);
}

std::vector<double> region_threshold_candidates(std::span<const AnomalyMap> predictions,
                                                const MetricConfig& cfg) {
  std::vector<float> positive;
  for (const auto& p : predictions) {
    for (float v : p.values()) {
      if (v > 0.f) positive.push_back(v);
    }
  }
  std::vector<double> out;
  if (positive.empty()) return out;
  std::sort(positive.begin(), positive.end());
  const int n = std::max(1, cfg.region_thresholds);
  for (int i = 0; i < n; ++i) {
    const double q = n == 1 ? 0.0 : double(i) / double(n - 1);
    const auto idx = static_cast<std::size_t>(std::llround(q * double(positive.size() - 1)));
    const double t = positive[idx];
    if (out.empty() || out.back() != t) out.push_back(t);
  }
  return out;
}

F1Result max_f1_region(std::span<const AnomalyMap> predictions,
                       std::span<const BinaryMask> truths, const MetricConfig& cfg) {
  check_aligned(predictions, truths);
  const auto thresholds = region_threshold_candidates(predictions, cfg);
  if (thresholds.empty()) return {0.0, 0.0};

  std::vector<ComponentLabels> truth_labels;
  truth_labels.reserve(truths.size());
  for (const auto& t : truths) truth_labels.push_back(label_components(t));

  std::vector<Confusion> per_threshold(thresholds.size());
  detail::parallel_for(thresholds.size(), cfg.workers, [&](std::size_t k) {
    Confusion pooled;
    for (std::size_t c = 0; c < predictions.size(); ++c) {
      const auto pred = label_components(binarize(predictions[c], thresholds[k]));
      pooled += match_labels(pred, truth_labels[c], cfg);
    }
    per_threshold[k] = pooled;
  });

  F1Result best{0.0, thresholds.front()};
  for (std::size_t k = thresholds.size(); k-- > 0;) {
    const double f1 = per_threshold[k].f1();
    if (f1 > best.f1) best = {f1, thresholds[k]};
  }
  return best;
}

MetricsReport aggregate(std::span<const EvalCase> cases,
                        const std::map<std::string, std::string>& grouping,
                        const MetricConfig& cfg) {
  MetricsReport report;
  report.case_count = cases.size();
  if (cases.empty()) return report;

  const auto score = [&](const std::vector<const EvalCase*>& subset, CategoryScores& out) {
    std::vector<AnomalyMap> preds;
    std::vector<BinaryMask> truths;
    for (const auto* c : subset) {
      preds.push_back(c->prediction);
      truths.push_back(c->truth);
    }
    out.pixel = max_f1_pixel(preds, truths, cfg);
    out.region = max_f1_region(preds, truths, cfg);
    out.case_count = subset.size();
  };

  std::vector<const EvalCase*> all;
  std::map<std::string, std::vector<const EvalCase*>> groups;
  for (const auto& c : cases) {
    all.push_back(&c);
    if (auto it = grouping.find(c.name); it != grouping.end()) groups[it->second].push_back(&c);
  }
  CategoryScores total;
  score(all, total);
  report.pixel = total.pixel;
  report.region = total.region;
  for (const auto& [category, members] : groups) score(members, report.per_category[category]);
  return report;
}

std::string report_to_json(const MetricsReport& report) {
  using nlohmann::json;
  const auto opt = [](const std::optional<F1Result>& r, bool threshold) -> json {
    if (!r) return nullptr;
    return threshold ? r->threshold : r->f1;
  };
  json doc{{"f1_pixel_max", opt(report.pixel, false)},
           {"f1_region_max", opt(report.region, false)},
           {"threshold_pixel", opt(report.pixel, true)},
           {"threshold_region", opt(report.region, true)},
           {"case_count", report.case_count}};
  json per = json::object();
  for (const auto& [name, s] : report.per_category) {
    per[name] = {{"f1_pixel_max", s.pixel.f1},
                 {"f1_region_max", s.region.f1},
                 {"threshold_pixel", s.pixel.threshold},
                 {"threshold_region", s.region.threshold},
                 {"case_count", s.case_count}};
  }
  doc["per_category"] = std::move(per);
  return doc.dump(2) + "\n";
}

std::string report_to_table(const MetricsReport& report) {
  std::ostringstream out;
  char line[160];
  std::snprintf(line, sizeof(line), "%-24s %10s %10s %8s\n", "Category", "F1-pixel", "F1-region",
                "Cases");
  out << line << std::string(55, '-') << "\n";
  for (const auto& [name, s] : report.per_category) {
    std::snprintf(line, sizeof(line), "%-24s %10.2f %10.2f %8zu\n", name.c_str(),
                  100.0 * s.pixel.f1, 100.0 * s.region.f1, s.case_count);
    out << line;
  }
  if (!report.per_category.empty()) out << std::string(55, '-') << "\n";
  if (report.pixel && report.region) {
    std::snprintf(line, sizeof(line), "%-24s %10.2f %10.2f %8zu\n", "Total",
                  100.0 * report.pixel->f1, 100.0 * report.region->f1, report.case_count);
  } else {
    std::snprintf(line, sizeof(line), "%-24s %10s %10s %8zu\n", "Total", "-", "-",
                  report.case_count);
  }
  out << line;
  return out.str();
}

}  // namespace saa
