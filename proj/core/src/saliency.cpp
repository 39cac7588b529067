/*
 * Copyright (C) 2026 The SAA Engine Authors
 * SPDX-License-Identifier: Apache-2.0
 */

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "parallel.hpp"
#include "saa/errors.hpp"
#include "saa/regulator.hpp"

namespace saa {

namespace {

// Fixed accumulation order, so identical inputs give identical bits.
double dot(const double* a, const double* b, std::size_t n) noexcept {
  double s0 = 0, s1 = 0, s2 = 0, s3 = 0;
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    s0 += a[i] * b[i];
    s1 += a[i + 1] * b[i + 1];
    s2 += a[i + 2] * b[i + 2];
    s3 += a[i + 3] * b[i + 3];
  }
  for (; i < n; ++i) s0 += a[i] * b[i];
  return (s0 + s1) + (s2 + s3);
}

}  // namespace

SaliencyMap saliency_grid(const FeatureMap& features, int n_neighbors, unsigned workers) {
  const std::size_t positions = features.positions();
  if (positions < 2) throw std::invalid_argument("saliency needs at least two feature positions");
  if (n_neighbors < 1) throw std::invalid_argument("n_neighbors must be >= 1");
  const std::size_t depth = features.depth();
  const std::size_t neighbors = std::min<std::size_t>(n_neighbors, positions - 1);

  // Unit vectors; on the unit sphere 1 - cos(a, b) = |a - b|^2 / 2 = (|a|^2 + |b|^2) / 2 - a.b,
  // which is exactly 0 for bit-identical inputs.
  std::vector<double> unit(positions * depth);
  std::vector<double> sq(positions);
  std::vector<char> zero(positions);
  for (std::size_t p = 0; p < positions; ++p) {
    const auto v = features.vector_at(p);
    double* u = unit.data() + p * depth;
    double norm2 = 0;
    for (std::size_t c = 0; c < depth; ++c) norm2 += double(v[c]) * double(v[c]);
    zero[p] = norm2 == 0.0;
    const double inv = zero[p] ? 0.0 : 1.0 / std::sqrt(norm2);
    for (std::size_t c = 0; c < depth; ++c) u[c] = double(v[c]) * inv;
    sq[p] = dot(u, u, depth);
  }

  SaliencyMap out(features.fwidth(), features.fheight());
  auto values = out.values();
  detail::parallel_for(positions, workers, [&](std::size_t p) {
    std::vector<double> dist;
    dist.reserve(positions - 1);
    const double* up = unit.data() + p * depth;
    for (std::size_t q = 0; q < positions; ++q) {
      if (q == p) continue;
      double d;
      if (zero[p] || zero[q]) {
        d = 1.0;
      } else {
        d = 0.5 * (sq[p] + sq[q]) - dot(up, unit.data() + q * depth, depth);
        d = std::clamp(d, 0.0, 2.0);
      }
      dist.push_back(d);
    }
    std::nth_element(dist.begin(), dist.begin() + (neighbors - 1), dist.end());
    std::sort(dist.begin(), dist.begin() + neighbors);
    double sum = 0;
    for (std::size_t i = 0; i < neighbors; ++i) sum += dist[i];
    values[p] = std::min(2.0, sum / double(neighbors));
  });
  return out;
}

SaliencyMap upsample_bilinear(const SaliencyMap& grid, std::uint32_t out_width,
                              std::uint32_t out_height) {
  if (grid.width() == 0 || grid.height() == 0) throw std::invalid_argument("empty saliency grid");
  if (grid.width() == out_width && grid.height() == out_height) return grid;

  struct Tap {
    std::uint32_t lo, hi;
    double t;
  };
  const auto taps = [](std::uint32_t in, std::uint32_t out) {
    std::vector<Tap> result(out);
    const double scale = double(in) / double(out);
    for (std::uint32_t i = 0; i < out; ++i) {
      double src = (i + 0.5) * scale - 0.5;
      src = std::clamp(src, 0.0, double(in - 1));
      const auto lo = static_cast<std::uint32_t>(std::floor(src));
      const auto hi = std::min(lo + 1, in - 1);
      result[i] = {lo, hi, src - lo};
    }
    return result;
  };
  const auto xs = taps(grid.width(), out_width);
  const auto ys = taps(grid.height(), out_height);

  SaliencyMap out(out_width, out_height);
  for (std::uint32_t y = 0; y < out_height; ++y) {
    const auto& ty = ys[y];
    for (std::uint32_t x = 0; x < out_width; ++x) {
      const auto& tx = xs[x];
      const double top = grid.at(tx.lo, ty.lo) * (1 - tx.t) + grid.at(tx.hi, ty.lo) * tx.t;
      const double bot = grid.at(tx.lo, ty.hi) * (1 - tx.t) + grid.at(tx.hi, ty.hi) * tx.t;
      out.at(x, y) = std::clamp(top * (1 - ty.t) + bot * ty.t, 0.0, 2.0);
    }
  }
  return out;
}

SaliencyMap compute_saliency(const FeatureMap& features, int n_neighbors, std::uint32_t out_width,
                             std::uint32_t out_height, unsigned workers) {
  return upsample_bilinear(saliency_grid(features, n_neighbors, workers), out_width, out_height);
}

double saliency_prompt(const RegionCandidate& region, const SaliencyMap& saliency) {
  if (region.mask.width() != saliency.width() || region.mask.height() != saliency.height()) {
    throw DimensionError("region mask and saliency map differ in size");
  }
  const auto bits = region.mask.bits();
  const auto s = saliency.values();
  double sum = 0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < bits.size(); ++i) {
    if (bits[i]) {
      sum += s[i];
      ++count;
    }
  }
  if (count == 0) throw Error("saliency prompt is undefined for an empty region mask");
  return std::exp(sum / double(count));
}

std::vector<RegionCandidate> rescore(std::span<const RegionCandidate> candidates,
                                     const SaliencyMap& saliency) {
  std::vector<RegionCandidate> out(candidates.begin(), candidates.end());
  for (auto& c : out) {
    const double p = saliency_prompt(c, saliency);
    c.saliency_prompt = p;
    c.calibrated_score = p * c.score;
  }
  return out;
}

}  // namespace saa
