/*
 * Copyright (C) 2026 The SAA Engine Authors
 * SPDX-License-Identifier: Apache-2.0
 */

#include "saa/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <set>
#include <stdexcept>

namespace saa::oracle {

namespace {

void guard_side(std::size_t w, std::size_t h) {
  if (w > kMaxGridSide || h > kMaxGridSide) {
    throw std::length_error("instance too large for the oracle (max 32x32)");
  }
}

void guard_count(std::size_t n) {
  if (n > kMaxCandidates) throw std::length_error("too many candidates for the oracle (max 64)");
}

}  // namespace

SaliencyMap saliency(const FeatureMap& features, int n_neighbors) {
  guard_side(features.fwidth(), features.fheight());
  const std::size_t P = features.positions();
  const std::size_t D = features.depth();
  if (P < 2) throw std::invalid_argument("need at least two positions");

  std::vector<std::vector<double>> dist(P, std::vector<double>(P, 0.0));
  for (std::size_t a = 0; a < P; ++a) {
    for (std::size_t b = 0; b < P; ++b) {
      const auto fa = features.vector_at(a);
      const auto fb = features.vector_at(b);
      double ab = 0, aa = 0, bb = 0;
      for (std::size_t c = 0; c < D; ++c) {
        ab += double(fa[c]) * double(fb[c]);
        aa += double(fa[c]) * double(fa[c]);
        bb += double(fb[c]) * double(fb[c]);
      }
      const double cosine = (aa == 0 || bb == 0) ? 0.0 : ab / (std::sqrt(aa) * std::sqrt(bb));
      dist[a][b] = 1.0 - cosine;
    }
  }

  const std::size_t n = std::min<std::size_t>(static_cast<std::size_t>(n_neighbors), P - 1);
  SaliencyMap out(features.fwidth(), features.fheight());
  for (std::size_t a = 0; a < P; ++a) {
    std::vector<double> row;
    for (std::size_t b = 0; b < P; ++b) {
      if (b != a) row.push_back(dist[a][b]);
    }
    std::sort(row.begin(), row.end());
    double sum = 0;
    for (std::size_t i = 0; i < n; ++i) sum += row[i];
    out.values()[a] = sum / double(n);
  }
  return out;
}

double saliency_prompt(const RegionCandidate& region, const SaliencyMap& saliency) {
  guard_side(saliency.width(), saliency.height());
  double num = 0, den = 0;
  for (std::uint32_t y = 0; y < saliency.height(); ++y) {
    for (std::uint32_t x = 0; x < saliency.width(); ++x) {
      const double r = region.mask.get(x, y) ? 1.0 : 0.0;
      num += r * saliency.at(x, y);
      den += r;
    }
  }
  if (den == 0) throw std::invalid_argument("empty mask");
  return std::exp(num / den);
}

std::vector<std::size_t> topk(std::span<const RegionCandidate> candidates, int k) {
  guard_count(candidates.size());
  std::vector<std::pair<double, std::size_t>> keyed;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    keyed.emplace_back(candidates[i].calibrated_score.value(), i);
  }
  std::sort(keyed.begin(), keyed.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < keyed.size() && i < static_cast<std::size_t>(k); ++i) {
    out.push_back(keyed[i].second);
  }
  return out;
}

AnomalyMap fuse(std::span<const RegionCandidate> selected, std::uint32_t width,
                std::uint32_t height) {
  guard_side(width, height);
  guard_count(selected.size());
  AnomalyMap out(width, height);
  for (std::uint32_t y = 0; y < height; ++y) {
    for (std::uint32_t x = 0; x < width; ++x) {
      double num = 0, den = 0;
      for (const auto& r : selected) {
        const double m = r.mask.get(x, y) ? 1.0 : 0.0;
        num += m * r.calibrated_score.value();
        den += m;
      }
      out.at(x, y) = den == 0 ? 0.0f : static_cast<float>(num / den);
    }
  }
  return out;
}

std::vector<RunIndex> dedupe(std::span<const std::vector<RegionCandidate>> runs, double dedupe_iou) {
  std::vector<RunIndex> remaining;
  for (std::size_t r = 0; r < runs.size(); ++r) {
    for (std::size_t i = 0; i < runs[r].size(); ++i) remaining.push_back({r, i});
  }
  guard_count(remaining.size());

  const auto iou = [](const BBox& a, const BBox& b) {
    const double ix = std::max(0.0, std::min(a.x1, b.x1) - std::max(a.x0, b.x0));
    const double iy = std::max(0.0, std::min(a.y1, b.y1) - std::max(a.y0, b.y0));
    const double u = (a.x1 - a.x0) * (a.y1 - a.y0) + (b.x1 - b.x0) * (b.y1 - b.y0) - ix * iy;
    return u > 0 ? ix * iy / u : 0.0;
  };

  std::vector<RunIndex> kept;
  while (!remaining.empty()) {
    std::size_t best = 0;
    for (std::size_t j = 1; j < remaining.size(); ++j) {
      const auto& cj = runs[remaining[j].run][remaining[j].index];
      const auto& cb = runs[remaining[best].run][remaining[best].index];
      // Strictly greater: `remaining` is in (run, index) order, so the earliest wins a tie.
      if (cj.score > cb.score) best = j;
    }
    const auto pick = remaining[best];
    kept.push_back(pick);
    const auto& box = runs[pick.run][pick.index].box;
    std::vector<RunIndex> next;
    for (std::size_t j = 0; j < remaining.size(); ++j) {
      if (j == best) continue;
      if (iou(runs[remaining[j].run][remaining[j].index].box, box) > dedupe_iou) continue;
      next.push_back(remaining[j]);
    }
    remaining = std::move(next);
  }
  return kept;
}

F1Result f1_sweep(std::span<const AnomalyMap> predictions, std::span<const BinaryMask> truths) {
  guard_count(predictions.size());
  std::set<float> distinct;
  for (const auto& p : predictions) {
    guard_side(p.width(), p.height());
    distinct.insert(p.values().begin(), p.values().end());
  }
  F1Result best{0.0, distinct.empty() ? 0.0 : double(*distinct.begin())};
  if (distinct.size() < 2) return best;

  // Descending so that the highest threshold wins a tie.
  for (auto it = distinct.rbegin(); std::next(it) != distinct.rend(); ++it) {
    const float t = *it;
    double tp = 0, fp = 0, fn = 0;
    for (std::size_t c = 0; c < predictions.size(); ++c) {
      for (std::uint32_t y = 0; y < predictions[c].height(); ++y) {
        for (std::uint32_t x = 0; x < predictions[c].width(); ++x) {
          const bool pred = predictions[c].at(x, y) >= t;
          const bool truth = truths[c].get(x, y);
          tp += pred && truth;
          fp += pred && !truth;
          fn += !pred && truth;
        }
      }
    }
    const double f1 = tp == 0 ? 0.0 : 2 * tp / (2 * tp + fp + fn);
    if (f1 > best.f1) best = {f1, double(t)};
  }
  return best;
}

namespace {

struct UnionFind {
  std::vector<std::size_t> parent;
  explicit UnionFind(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  std::size_t find(std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
};

// Component id per pixel (SIZE_MAX for background) and the number of components.
std::pair<std::vector<std::size_t>, std::size_t> components(const BinaryMask& mask) {
  const std::size_t w = mask.width(), h = mask.height();
  UnionFind uf(w * h);
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      if (!mask.get(x, y)) continue;
      // Already visited neighbors: W, NW, N, NE.
      const int dx[4] = {-1, -1, 0, 1};
      const int dy[4] = {0, -1, -1, -1};
      for (int k = 0; k < 4; ++k) {
        const auto nx = static_cast<std::ptrdiff_t>(x) + dx[k];
        const auto ny = static_cast<std::ptrdiff_t>(y) + dy[k];
        if (nx < 0 || ny < 0 || nx >= static_cast<std::ptrdiff_t>(w)) continue;
        if (mask.get(static_cast<std::uint32_t>(nx), static_cast<std::uint32_t>(ny))) {
          uf.unite(y * w + x, static_cast<std::size_t>(ny) * w + static_cast<std::size_t>(nx));
        }
      }
    }
  }
  std::vector<std::size_t> id(w * h, SIZE_MAX);
  std::vector<std::size_t> root_id(w * h, SIZE_MAX);
  std::size_t count = 0;
  for (std::size_t i = 0; i < w * h; ++i) {
    if (!mask.bits()[i]) continue;
    const auto r = uf.find(i);
    if (root_id[r] == SIZE_MAX) root_id[r] = count++;
    id[i] = root_id[r];
  }
  return {id, count};
}

}  // namespace

std::size_t component_count(const BinaryMask& mask) {
  guard_side(mask.width(), mask.height());
  return components(mask).second;
}

Confusion region_confusion(const BinaryMask& predicted, const BinaryMask& truth, double match) {
  guard_side(predicted.width(), predicted.height());
  const auto [pid, np] = components(predicted);
  const auto [gid, ng] = components(truth);
  guard_count(np);
  guard_count(ng);

  std::vector<std::vector<double>> inter(np, std::vector<double>(ng, 0.0));
  std::vector<double> ap(np, 0.0), ag(ng, 0.0);
  for (std::size_t i = 0; i < pid.size(); ++i) {
    if (pid[i] != SIZE_MAX) ap[pid[i]] += 1;
    if (gid[i] != SIZE_MAX) ag[gid[i]] += 1;
    if (pid[i] != SIZE_MAX && gid[i] != SIZE_MAX) inter[pid[i]][gid[i]] += 1;
  }
  std::vector<std::vector<char>> ok(np, std::vector<char>(ng, 0));
  for (std::size_t p = 0; p < np; ++p) {
    for (std::size_t g = 0; g < ng; ++g) {
      const double u = ap[p] + ag[g] - inter[p][g];
      ok[p][g] = inter[p][g] > 0 && inter[p][g] / u > match;
    }
  }

  std::vector<char> used(ng, 0);
  std::function<std::size_t(std::size_t)> best = [&](std::size_t p) -> std::size_t {
    if (p == np) return 0;
    std::size_t result = best(p + 1);
    for (std::size_t g = 0; g < ng; ++g) {
      if (!ok[p][g] || used[g]) continue;
      used[g] = 1;
      result = std::max(result, 1 + best(p + 1));
      used[g] = 0;
    }
    return result;
  };
  Confusion cm;
  cm.tp = best(0);
  cm.fp = np - cm.tp;
  cm.fn = ng - cm.tp;
  return cm;
}

}  // namespace saa::oracle
