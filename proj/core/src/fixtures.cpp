/*
 * Copyright (C) 2026 The SAA Engine Authors
 * SPDX-License-Identifier: Apache-2.0
 */

#include "saa/fixtures.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "json.hpp"
#include "saa/errors.hpp"
#include "saa/interchange.hpp"

namespace saa {

namespace {

std::uint64_t splitmix64(std::uint64_t& x) noexcept {
  std::uint64_t z = (x += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept { return (x << k) | (x >> (64 - k)); }

}  // namespace

Xoshiro256::Xoshiro256(std::uint64_t seed) noexcept {
  for (auto& s : s_) s = splitmix64(seed);
}

std::uint64_t Xoshiro256::next() noexcept {
  const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
  const std::uint64_t t = s_[1] << 17;
  s_[2] ^= s_[0];
  s_[3] ^= s_[1];
  s_[1] ^= s_[2];
  s_[0] ^= s_[3];
  s_[2] ^= t;
  s_[3] = rotl(s_[3], 45);
  return result;
}

double Xoshiro256::uniform() noexcept { return double(next() >> 11) * 0x1.0p-53; }

std::int64_t Xoshiro256::uniform_int(std::int64_t lo, std::int64_t hi) noexcept {
  if (hi <= lo) return lo;
  const std::uint64_t range = std::uint64_t(hi - lo) + 1;
  const std::uint64_t limit = range == 0 ? 0 : (~std::uint64_t{0} - range + 1) % range;
  std::uint64_t x;
  do {
    x = next();
  } while (x < limit);
  return lo + static_cast<std::int64_t>(range == 0 ? x : x % range);
}

double Xoshiro256::normal() noexcept {
  double u1;
  do {
    u1 = uniform();
  } while (u1 <= 0.0);
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

const char* to_string(CandidateRole role) noexcept {
  switch (role) {
    case CandidateRole::kBlob: return "blob";
    case CandidateRole::kDecoy: return "decoy";
    case CandidateRole::kLoose: return "loose";
    case CandidateRole::kOutside: return "outside";
    case CandidateRole::kOversized: return "oversized";
  }
  return "unknown";
}

FixtureSpec standard_fixture_spec(std::uint64_t seed) {
  FixtureSpec spec;
  spec.seed = seed;
  return spec;
}

namespace {

struct Disc {
  double cx, cy, r;
};

struct Rect {
  std::uint32_t x0, y0, x1, y1;  // half-open
};

BinaryMask disc_mask(const Disc& d, std::uint32_t size) {
  BinaryMask m(size, size);
  for (std::uint32_t y = 0; y < size; ++y) {
    for (std::uint32_t x = 0; x < size; ++x) {
      const double dx = x + 0.5 - d.cx, dy = y + 0.5 - d.cy;
      if (dx * dx + dy * dy <= d.r * d.r) m.set(x, y);
    }
  }
  return m;
}

BinaryMask rect_mask(const Rect& r, std::uint32_t size) {
  return box_to_mask(BBox{double(r.x0), double(r.y0), double(r.x1), double(r.y1)}, size, size);
}

bool disc_inside(const Disc& d, const Rect& r, double margin) {
  return d.cx - d.r - margin >= r.x0 && d.cx + d.r + margin <= r.x1 &&
         d.cy - d.r - margin >= r.y0 && d.cy + d.r + margin <= r.y1;
}

bool disc_clear_of(const Disc& d, const Rect& r, double margin) {
  return d.cx + d.r + margin <= r.x0 || d.cx - d.r - margin >= r.x1 ||
         d.cy + d.r + margin <= r.y0 || d.cy - d.r - margin >= r.y1;
}

bool discs_apart(const Disc& d, const std::vector<Disc>& others, double gap) {
  return std::all_of(others.begin(), others.end(), [&](const Disc& o) {
    return std::hypot(d.cx - o.cx, d.cy - o.cy) >= d.r + o.r + gap;
  });
}

// Rejection sampling with a fixed attempt budget keeps the draw count deterministic per spec.
template <typename Accept>
std::optional<Disc> place_disc(Xoshiro256& rng, double rmin, double rmax, double lo, double hi,
                               Accept&& accept) {
  const double r = rng.uniform(rmin, rmax);
  for (int attempt = 0; attempt < 2000; ++attempt) {
    Disc d{rng.uniform(lo, hi), rng.uniform(lo, hi), r};
    if (accept(d)) return d;
  }
  return std::nullopt;
}

struct Pending {
  BinaryMask mask;
  CandidateRole role;
  double score;
};

}  // namespace

FixtureCase generate_case(const FixtureSpec& spec) {
  Xoshiro256 rng(spec.seed);
  const std::uint32_t size = spec.image_size;
  const double s = size;

  // Object: a rectangle of about half the image side, jittered.
  const auto half = [&](double jitter) { return s / 4 + rng.uniform(-jitter, jitter); };
  const double ow = s / 2 + rng.uniform(-s / 16, s / 16);
  const double oh = s / 2 + rng.uniform(-s / 16, s / 16);
  const double ox = half(s / 16);
  const double oy = half(s / 16);
  const Rect object{static_cast<std::uint32_t>(std::lround(ox)),
                    static_cast<std::uint32_t>(std::lround(oy)),
                    static_cast<std::uint32_t>(std::lround(ox + ow)),
                    static_cast<std::uint32_t>(std::lround(oy + oh))};
  const BinaryMask object_mask = rect_mask(object, size);

  std::vector<Disc> inner;  // blobs and decoys, mutually apart
  std::vector<Pending> pending;

  const int blobs = static_cast<int>(rng.uniform_int(spec.blob_count_min, spec.blob_count_max));
  std::vector<Disc> blob_discs;
  std::vector<double> blob_strength;
  for (int i = 0; i < blobs; ++i) {
    auto d = place_disc(rng, spec.blob_radius_min, spec.blob_radius_max, 0, s, [&](const Disc& d) {
      return disc_inside(d, object, 2.0) && discs_apart(d, inner, 6.0);
    });
    if (!d) continue;
    inner.push_back(*d);
    blob_discs.push_back(*d);
    pending.push_back({disc_mask(*d, size), CandidateRole::kBlob,
                       rng.uniform(spec.blob_score_min, spec.blob_score_max)});
    blob_strength.push_back(rng.uniform(spec.blob_strength_min, 1.0));
  }

  const int decoys = static_cast<int>(rng.uniform_int(spec.decoy_count_min, spec.decoy_count_max));
  for (int i = 0; i < decoys; ++i) {
    auto d = place_disc(rng, spec.decoy_radius_min, spec.decoy_radius_max, 0, s, [&](const Disc& d) {
      return disc_inside(d, object, 2.0) && discs_apart(d, inner, 6.0);
    });
    if (!d) continue;
    inner.push_back(*d);
    pending.push_back({disc_mask(*d, size), CandidateRole::kDecoy,
                       rng.uniform(spec.decoy_score_min, spec.decoy_score_max)});
  }

  for (const auto& b : blob_discs) {
    if (!(rng.uniform() < spec.loose_probability)) continue;
    const Disc wide{b.cx, b.cy, b.r * rng.uniform(spec.loose_scale_min, spec.loose_scale_max)};
    BinaryMask m = disc_mask(wide, size);
    for (std::uint32_t y = 0; y < size; ++y) {
      for (std::uint32_t x = 0; x < size; ++x) {
        if (!object_mask.get(x, y)) m.set(x, y, false);
      }
    }
    pending.push_back({std::move(m), CandidateRole::kLoose,
                       rng.uniform(spec.loose_score_min, spec.loose_score_max)});
  }

  std::vector<Disc> outside;
  for (int i = 0; i < spec.distractor_count; ++i) {
    const double score = rng.uniform(spec.distractor_score_min, spec.distractor_score_max);
    if (i % 2 == 0) {
      auto d = place_disc(rng, s / 32, s / 12, 0, s, [&](const Disc& d) {
        return d.cx - d.r >= 1 && d.cx + d.r <= s - 1 && d.cy - d.r >= 1 && d.cy + d.r <= s - 1 &&
               disc_clear_of(d, object, 2.0) && discs_apart(d, outside, 2.0);
      });
      if (!d) continue;
      outside.push_back(*d);
      pending.push_back({disc_mask(*d, size), CandidateRole::kOutside, score});
    } else {
      const auto grow = static_cast<std::uint32_t>(rng.uniform_int(2, 6));
      const Rect big{object.x0 > grow ? object.x0 - grow : 0, object.y0 > grow ? object.y0 - grow : 0,
                     std::min(size, object.x1 + grow), std::min(size, object.y1 + grow)};
      pending.push_back({rect_mask(big, size), CandidateRole::kOversized, score});
    }
  }

  // Deterministic shuffle so candidate order carries no role information.
  for (std::size_t i = pending.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(i - 1)));
    std::swap(pending[i - 1], pending[j]);
  }

  FixtureCase out;
  BinaryMask truth(size, size);
  std::vector<double> strength(static_cast<std::size_t>(size) * size, 0.0);
  for (std::size_t b = 0; b < blob_discs.size(); ++b) {
    const auto m = disc_mask(blob_discs[b], size);
    for (std::uint32_t y = 0; y < size; ++y) {
      for (std::uint32_t x = 0; x < size; ++x) {
        if (!m.get(x, y)) continue;
        truth.set(x, y);
        strength[static_cast<std::size_t>(y) * size + x] = blob_strength[b];
      }
    }
  }

  for (auto& p : pending) {
    RegionCandidate c;
    c.box = mask_bounds(p.mask);
    c.mask = std::move(p.mask);
    c.phrase = spec.phrases.empty()
                   ? std::string("anomaly")
                   : spec.phrases[static_cast<std::size_t>(
                         rng.uniform_int(0, static_cast<std::int64_t>(spec.phrases.size()) - 1))];
    c.score = p.score;
    out.bundle.candidates.push_back(std::move(c));
    out.roles.push_back(p.role);
  }

  RegionCandidate obj;
  obj.box = BBox{double(object.x0), double(object.y0), double(object.x1), double(object.y1)};
  obj.mask = object_mask;
  obj.phrase = "object";
  obj.score = 1.0;
  out.bundle.object_region = std::move(obj);

  // Image: dark background, light object, dark anomalies, mid-gray decoys.
  std::vector<std::uint8_t> pixels(static_cast<std::size_t>(size) * size * 3);
  for (std::uint32_t y = 0; y < size; ++y) {
    for (std::uint32_t x = 0; x < size; ++x) {
      int base = object_mask.get(x, y) ? 170 : 50;
      if (truth.get(x, y)) base = 25;
      const int noise = static_cast<int>(rng.uniform_int(-6, 6));
      const auto v = static_cast<std::uint8_t>(std::clamp(base + noise, 0, 255));
      const std::size_t i = (static_cast<std::size_t>(y) * size + x) * 3;
      pixels[i] = v;
      pixels[i + 1] = v;
      pixels[i + 2] = static_cast<std::uint8_t>(std::clamp(base + noise + 8, 0, 255));
    }
  }
  out.bundle.image = ImageRef(size, size, std::move(pixels));

  // Features: one normal cluster around `base`; cells are pushed along `shift_dir` in proportion
  // to how much of their footprint is anomalous.
  const std::uint32_t fh = spec.feature_height, fw = spec.feature_width, depth = spec.feature_depth;
  std::vector<double> base(depth), shift_dir(depth);
  double bn = 0;
  for (auto& b : base) {
    b = rng.normal();
    bn += b * b;
  }
  for (auto& b : base) b /= std::sqrt(bn);
  double dot = 0, un = 0;
  for (auto& u : shift_dir) u = rng.normal();
  for (std::uint32_t c = 0; c < depth; ++c) dot += shift_dir[c] * base[c];
  for (std::uint32_t c = 0; c < depth; ++c) {
    shift_dir[c] -= dot * base[c];
    un += shift_dir[c] * shift_dir[c];
  }
  un = std::sqrt(un);
  for (auto& u : shift_dir) u = un > 0 ? u / un : 0.0;

  std::vector<float> values(static_cast<std::size_t>(fh) * fw * depth);
  for (std::uint32_t r = 0; r < fh; ++r) {
    for (std::uint32_t col = 0; col < fw; ++col) {
      const auto px0 = static_cast<std::uint32_t>(std::uint64_t(col) * size / fw);
      const auto px1 = static_cast<std::uint32_t>(std::uint64_t(col + 1) * size / fw);
      const auto py0 = static_cast<std::uint32_t>(std::uint64_t(r) * size / fh);
      const auto py1 = static_cast<std::uint32_t>(std::uint64_t(r + 1) * size / fh);
      double hit = 0;
      std::size_t total = 0;
      for (auto y = py0; y < py1; ++y) {
        for (auto x = px0; x < px1; ++x) {
          hit += strength[static_cast<std::size_t>(y) * size + x];
          ++total;
        }
      }
      const double coverage = total ? hit / double(total) : 0.0;
      float* v = values.data() + (static_cast<std::size_t>(r) * fw + col) * depth;
      for (std::uint32_t c = 0; c < depth; ++c) {
        v[c] = static_cast<float>(base[c] + spec.feature_noise * rng.normal() +
                                  spec.anomaly_feature_shift * coverage * shift_dir[c]);
      }
    }
  }
  out.bundle.features = FeatureMap(fh, fw, depth, std::move(values));
  out.bundle.ground_truth = std::move(truth);
  return out;
}

namespace {

template <typename T>
void take(const nlohmann::json& doc, const char* key, T& out) {
  if (auto it = doc.find(key); it != doc.end() && !it->is_null()) {
    try {
      out = it->get<T>();
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(std::string("fixture spec key '") + key + "': " + e.what());
    }
  }
}

}  // namespace

SuiteSpec standard_suite_spec() {
  SuiteSpec suite;
  for (std::uint64_t s = 0; s < 50; ++s) suite.seeds.push_back(s);
  return suite;
}

SuiteSpec suite_spec_from_json(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("fixture spec is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ConfigError("fixture spec root must be an object");

  SuiteSpec suite;
  auto& f = suite.base;
  take(doc, "image_size", f.image_size);
  take(doc, "blob_count_min", f.blob_count_min);
  take(doc, "blob_count_max", f.blob_count_max);
  take(doc, "blob_radius_min", f.blob_radius_min);
  take(doc, "blob_radius_max", f.blob_radius_max);
  take(doc, "decoy_count_min", f.decoy_count_min);
  take(doc, "decoy_count_max", f.decoy_count_max);
  take(doc, "decoy_radius_min", f.decoy_radius_min);
  take(doc, "decoy_radius_max", f.decoy_radius_max);
  take(doc, "loose_probability", f.loose_probability);
  take(doc, "loose_scale_min", f.loose_scale_min);
  take(doc, "loose_scale_max", f.loose_scale_max);
  take(doc, "loose_score_min", f.loose_score_min);
  take(doc, "loose_score_max", f.loose_score_max);
  take(doc, "distractor_count", f.distractor_count);
  take(doc, "blob_score_min", f.blob_score_min);
  take(doc, "blob_score_max", f.blob_score_max);
  take(doc, "decoy_score_min", f.decoy_score_min);
  take(doc, "decoy_score_max", f.decoy_score_max);
  take(doc, "distractor_score_min", f.distractor_score_min);
  take(doc, "distractor_score_max", f.distractor_score_max);
  take(doc, "feature_height", f.feature_height);
  take(doc, "feature_width", f.feature_width);
  take(doc, "feature_depth", f.feature_depth);
  take(doc, "anomaly_feature_shift", f.anomaly_feature_shift);
  take(doc, "blob_strength_min", f.blob_strength_min);
  take(doc, "feature_noise", f.feature_noise);
  take(doc, "phrases", f.phrases);
  if (auto g = doc.find("feature_grid"); g != doc.end() && g->is_array() && g->size() == 3) {
    f.feature_height = (*g)[0].get<std::uint32_t>();
    f.feature_width = (*g)[1].get<std::uint32_t>();
    f.feature_depth = (*g)[2].get<std::uint32_t>();
  }

  take(doc, "seeds", suite.seeds);
  if (suite.seeds.empty()) {
    std::uint64_t begin = 0, count = 50;
    take(doc, "seed_begin", begin);
    take(doc, "count", count);
    for (std::uint64_t s = 0; s < count; ++s) suite.seeds.push_back(begin + s);
  }
  if (f.image_size < 16) throw ConfigError("image_size must be >= 16");
  if (f.feature_height * f.feature_width < 2 || f.feature_depth == 0) {
    throw ConfigError("feature grid needs at least two positions and one channel");
  }
  if (f.feature_height > f.image_size || f.feature_width > f.image_size) {
    throw ConfigError("feature grid cannot be finer than the image");
  }
  return suite;
}

std::string fixture_stem(std::uint64_t seed) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "case_%04llu", static_cast<unsigned long long>(seed));
  return buf;
}

std::vector<std::filesystem::path> write_suite(const SuiteSpec& suite,
                                               const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  std::vector<std::filesystem::path> manifests;
  for (auto seed : suite.seeds) {
    auto spec = suite.base;
    spec.seed = seed;
    const auto fixture = generate_case(spec);
    ManifestExtras extras;
    extras.category = "synthetic";
    for (auto r : fixture.roles) extras.region_roles.emplace_back(to_string(r));
    manifests.push_back(write_case(fixture.bundle, out_dir, fixture_stem(seed), extras));
  }
  return manifests;
}

}  // namespace saa
