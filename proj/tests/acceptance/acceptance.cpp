/*
 * Copyright (C) 2026 The SAA Engine Authors
 * SPDX-License-Identifier: Apache-2.0
 */

// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <sstream>
#include <string>
#include <unistd.h>

#include "commands.hpp"
#include "json.hpp"
#include "saa/config.hpp"
#include "saa/fixtures.hpp"
#include "saa/interchange.hpp"
#include "saa/metrics.hpp"
#include "saa/oracles.hpp"
#include "saa/regulator.hpp"

namespace fs = std::filesystem;
using namespace saa;

namespace {

constexpr double kOracleRelTol = 1e-5;
constexpr double kAnalyticTol = 1e-6;
constexpr int kOracleInstances = 200;
constexpr double kOracleBudgetSeconds = 60.0;
constexpr double kAblationFloor = 0.90;

struct Outcome {
  bool pass = true;
  std::string detail;
};

int failures = 0;

void report(const std::string& name, const Outcome& o) {
  std::printf("%s %s: %s\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str());
  std::fflush(stdout);
  if (!o.pass) ++failures;
}

void run_criterion(const std::string& name, const std::function<Outcome()>& fn) {
  try {
    report(name, fn());
  } catch (const std::exception& e) {
    report(name, {false, std::string("exception: ") + e.what()});
  }
}

double rel_err(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-12});
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

BinaryMask random_mask(Xoshiro256& rng, std::uint32_t w, std::uint32_t h, double p) {
  BinaryMask m(w, h);
  for (std::uint32_t y = 0; y < h; ++y) {
    for (std::uint32_t x = 0; x < w; ++x) {
      if (rng.uniform() < p) m.set(x, y);
    }
  }
  return m;
}

RegionCandidate region(BinaryMask mask, double score) {
  RegionCandidate c;
  c.box = mask_bounds(mask);
  c.mask = std::move(mask);
  c.score = score;
  c.phrase = "anomaly";
  return c;
}

AnomalyMap indicator(const BinaryMask& m) {
  AnomalyMap a(m.width(), m.height());
  for (std::size_t i = 0; i < m.size(); ++i) a.values()[i] = m.bits()[i] ? 1.0f : 0.0f;
  return a;
}

// --- criteria -------------------------------------------------------------------------------

Outcome oracle_equivalence() {
  using Clock = std::chrono::steady_clock;
  const auto t0 = Clock::now();
  std::size_t bad_saliency = 0, bad_prompt = 0, bad_topk = 0, bad_fuse = 0, bad_merge = 0,
              bad_f1 = 0;
  double worst = 0;

  for (int inst = 0; inst < kOracleInstances; ++inst) {
    Xoshiro256 rng(0x5aa0000ULL + static_cast<std::uint64_t>(inst));
    const auto fh = static_cast<std::uint32_t>(rng.uniform_int(1, 32));
    const auto fw = static_cast<std::uint32_t>(rng.uniform_int(fh == 1 ? 2 : 1, 32));
    const auto depth = static_cast<std::uint32_t>(rng.uniform_int(1, 16));
    const int n = static_cast<int>(rng.uniform_int(1, 500));

    // Saliency: clustered features so neighbor ranks matter.
    std::vector<float> fv(static_cast<std::size_t>(fh) * fw * depth);
    for (auto& v : fv) v = static_cast<float>(rng.normal());
    for (std::size_t p = 0; p < std::size_t(fh) * fw; ++p) {
      if (rng.uniform() < 0.5) {
        for (std::uint32_t c = 0; c < depth; ++c) fv[p * depth + c] = fv[c] + 0.05f * float(rng.normal());
      }
    }
    const FeatureMap features(fh, fw, depth, fv);
    const auto fast_grid = compute_saliency(features, n, fw, fh, 0);
    const auto slow_grid = oracle::saliency(features, n);
    for (std::size_t i = 0; i < fast_grid.size(); ++i) {
      const double e = rel_err(fast_grid.values()[i], slow_grid.values()[i]);
      // Near-duplicate vectors give distances around 1e-7 where only absolute accuracy is
      // meaningful; both sides then sit far below 1e-5.
      const double abs_e = std::abs(fast_grid.values()[i] - slow_grid.values()[i]);
      if (e > kOracleRelTol && abs_e > 1e-9) ++bad_saliency;
      worst = std::max(worst, abs_e > 1e-9 ? e : 0.0);
    }

    // Saliency prompt on an image-sized map.
    const auto w = static_cast<std::uint32_t>(rng.uniform_int(2, 32));
    const auto h = static_cast<std::uint32_t>(rng.uniform_int(2, 32));
    const auto sal = upsample_bilinear(slow_grid, w, h);
    auto pm = random_mask(rng, w, h, rng.uniform(0.01, 1.0));
    pm.set(static_cast<std::uint32_t>(rng.uniform_int(0, w - 1)),
           static_cast<std::uint32_t>(rng.uniform_int(0, h - 1)));
    const auto probe = region(pm, rng.uniform());
    if (rel_err(saliency_prompt(probe, sal), oracle::saliency_prompt(probe, sal)) > kOracleRelTol) {
      ++bad_prompt;
    }

    // Top-K and fusion over up to 64 candidates with coarse (tied) scores.
    const auto count = static_cast<std::size_t>(rng.uniform_int(0, 64));
    std::vector<RegionCandidate> cands;
    for (std::size_t i = 0; i < count; ++i) {
      auto c = region(random_mask(rng, w, h, rng.uniform(0.02, 0.3)), rng.uniform());
      c.calibrated_score = std::round(rng.uniform(0, std::exp(2.0)) * 8) / 8;
      cands.push_back(std::move(c));
    }
    const int k = static_cast<int>(rng.uniform_int(1, 10));
    if (topk_indices(cands, k) != oracle::topk(cands, k)) ++bad_topk;
    const auto fast_map = fuse_topk(cands, w, h);
    const auto slow_map = oracle::fuse(cands, w, h);
    for (std::size_t i = 0; i < fast_map.size(); ++i) {
      if (rel_err(fast_map.values()[i], slow_map.values()[i]) > kOracleRelTol) {
        ++bad_fuse;
        break;
      }
    }

    // Merge over up to 64 boxes split into runs.
    std::vector<std::vector<RegionCandidate>> runs(static_cast<std::size_t>(rng.uniform_int(1, 4)));
    const auto boxes = rng.uniform_int(0, 64);
    for (int i = 0; i < boxes; ++i) {
      const double x = rng.uniform(0, 24), y = rng.uniform(0, 24);
      const double bw = rng.uniform(1, 8), bh = rng.uniform(1, 8);
      RegionCandidate c;
      c.box = {x, y, x + bw, y + bh};
      c.mask = box_to_mask(c.box, 32, 32);
      c.score = std::round(rng.uniform() * 10) / 10;
      runs[static_cast<std::size_t>(rng.uniform_int(0, std::int64_t(runs.size()) - 1))].push_back(c);
    }
    const double dedupe = rng.uniform(0.05, 0.95);
    if (merge_prompt_run_indices(runs, dedupe) != oracle::dedupe(runs, dedupe)) ++bad_merge;

    // Pixel F1 over 1-3 cases.
    std::vector<AnomalyMap> preds;
    std::vector<BinaryMask> truths;
    const auto cases = rng.uniform_int(1, 3);
    const int levels = inst % 2 ? 0 : static_cast<int>(rng.uniform_int(2, 30));
    for (int c = 0; c < cases; ++c) {
      auto truth = random_mask(rng, w, h, rng.uniform(0.05, 0.5));
      AnomalyMap p(w, h);
      for (std::size_t i = 0; i < p.size(); ++i) {
        double v = rng.uniform() + (truth.bits()[i] ? 0.4 : 0.0);
        if (levels) v = std::floor(v * levels) / levels;
        p.values()[i] = static_cast<float>(v);
      }
      preds.push_back(std::move(p));
      truths.push_back(std::move(truth));
    }
    MetricConfig mc;
    mc.pixel_sweep = PixelSweep::kExact;
    const auto fast_f1 = max_f1_pixel(preds, truths, mc);
    const auto slow_f1 = oracle::f1_sweep(preds, truths);
    if (rel_err(fast_f1.f1, slow_f1.f1) > kOracleRelTol || fast_f1.threshold != slow_f1.threshold) {
      ++bad_f1;
    }
  }

  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::ostringstream d;
  d << kOracleInstances << " instances; mismatches saliency=" << bad_saliency
    << " saliency_prompt=" << bad_prompt << " select_topk=" << bad_topk << " fuse_topk=" << bad_fuse
    << " merge_prompt_runs=" << bad_merge << " max_f1_pixel=" << bad_f1
    << "; worst saliency rel err " << worst << "; " << secs << " s (budget " << kOracleBudgetSeconds
    << " s)";
  const bool ok = bad_saliency + bad_prompt + bad_topk + bad_fuse + bad_merge + bad_f1 == 0 &&
                  secs < kOracleBudgetSeconds;
  return {ok, d.str()};
}

Outcome analytic_saliency() {
  std::ostringstream d;
  bool ok = true;

  const FeatureMap constant(5, 7, 4, std::vector<float>(5 * 7 * 4, 0.3f));
  const auto s0 = compute_saliency(constant, 400, 28, 20);
  const double max0 = *std::max_element(s0.values().begin(), s0.values().end());
  BinaryMask all(28, 20);
  for (std::uint32_t y = 0; y < 20; ++y) {
    for (std::uint32_t x = 0; x < 28; ++x) all.set(x, y);
  }
  const double p0 = saliency_prompt(region(all, 0.5), s0);
  ok &= max0 == 0.0 && p0 == 1.0;
  d << "constant: max saliency " << max0 << ", prompt " << p0 << "; ";

  const FeatureMap ortho(1, 2, 2, {1.0f, 0.0f, 0.0f, 1.0f});
  const auto s1 = compute_saliency(ortho, 1, 2, 1);
  const double a = s1.at(0, 0), b = s1.at(1, 0);
  ok &= std::abs(a - 1.0) <= kAnalyticTol && std::abs(b - 1.0) <= kAnalyticTol;
  d << "orthogonal 1x2 N=1: " << a << ", " << b << " (tol " << kAnalyticTol << ")";
  return {ok, d.str()};
}

Outcome metric_sanity() {
  Xoshiro256 rng(2024);
  std::vector<AnomalyMap> perfect, zeros, noisy;
  std::vector<BinaryMask> truths;
  for (int c = 0; c < 4; ++c) {
    BinaryMask t(48, 40);
    const double cx = rng.uniform(10, 38), cy = rng.uniform(10, 30), r = rng.uniform(3, 8);
    for (std::uint32_t y = 0; y < 40; ++y) {
      for (std::uint32_t x = 0; x < 48; ++x) {
        if (std::hypot(x + 0.5 - cx, y + 0.5 - cy) <= r) t.set(x, y);
      }
    }
    perfect.push_back(indicator(t));
    zeros.emplace_back(48, 40);
    AnomalyMap n(48, 40);
    for (std::size_t i = 0; i < n.size(); ++i) {
      n.values()[i] = static_cast<float>(rng.uniform() + (t.bits()[i] ? 0.6 : 0.0));
    }
    noisy.push_back(std::move(n));
    truths.push_back(std::move(t));
  }
  const double pp = max_f1_pixel(perfect, truths).f1, pr = max_f1_region(perfect, truths).f1;
  const double zp = max_f1_pixel(zeros, truths).f1, zr = max_f1_region(zeros, truths).f1;
  bool ok = pp == 1.0 && pr == 1.0 && zp == 0.0 && zr == 0.0;

  const double base = max_f1_pixel(noisy, truths).f1;
  int bit_equal = 0;
  for (int k = 0; k < 20; ++k) {
    const float a = static_cast<float>(std::pow(2.0, rng.uniform_int(-3, 3)));
    const float b = static_cast<float>(rng.uniform_int(-8, 8)) * 0.25f;
    auto q = noisy;
    for (auto& m : q) {
      for (auto& v : m.values()) v = a * v + b;
    }
    bit_equal += max_f1_pixel(q, truths).f1 == base;
  }
  ok &= bit_equal == 20;
  std::ostringstream d;
  d << "perfect Fp=" << pp << " Fr=" << pr << "; zero Fp=" << zp << " Fr=" << zr
    << "; affine maps bit-equal " << bit_equal << "/20 (base Fp " << base << ")";
  return {ok, d.str()};
}

Outcome region_rule() {
  // 100-pixel truth; prediction = its first n pixels in raster order, so IoU = n / 100.
  BinaryMask truth(16, 16);
  for (std::uint32_t y = 2; y < 12; ++y) {
    for (std::uint32_t x = 3; x < 13; ++x) truth.set(x, y);
  }
  const auto prefix = [&](std::size_t n) {
    BinaryMask m(16, 16);
    for (std::uint32_t y = 0; y < 16 && n; ++y) {
      for (std::uint32_t x = 0; x < 16 && n; ++x) {
        if (truth.get(x, y)) {
          m.set(x, y);
          --n;
        }
      }
    }
    return m;
  };
  const auto p59 = prefix(59), p61 = prefix(61);
  const double iou59 = mask_overlap(p59, truth, OverlapMode::kIntersectionOverUnion);
  const double iou61 = mask_overlap(p61, truth, OverlapMode::kIntersectionOverUnion);
  const auto c59 = match_regions(p59, truth);
  const auto c61 = match_regions(p61, truth);
  std::vector<AnomalyMap> m59{indicator(p59)}, m61{indicator(p61)};
  std::vector<BinaryMask> t{truth};
  const double f59 = max_f1_region(m59, t).f1, f61 = max_f1_region(m61, t).f1;
  const bool ok = c59.tp == 0 && c61.tp == 1 && f59 == 0.0 && f61 == 1.0;
  std::ostringstream d;
  d << "IoU " << iou59 << " -> tp=" << c59.tp << " Fr=" << f59 << "; IoU " << iou61
    << " -> tp=" << c61.tp << " Fr=" << f61;
  return {ok, d.str()};
}

Outcome property_filter_exactness() {
  std::size_t distractors = 0, survivors = 0, blobs = 0, false_removals = 0;
  PipelineConfig cfg;
  for (std::uint64_t seed : standard_suite_spec().seeds) {
    const auto fc = generate_case(standard_fixture_spec(seed));
    const auto kept = property_filter_indices(fc.bundle.candidates, fc.bundle.object_region, cfg);
    std::vector<char> pass(fc.bundle.candidates.size(), 0);
    for (auto i : kept) pass[i] = 1;
    for (std::size_t i = 0; i < pass.size(); ++i) {
      if (is_distractor(fc.roles[i])) {
        ++distractors;
        survivors += pass[i];
      } else if (fc.roles[i] == CandidateRole::kBlob) {
        ++blobs;
        false_removals += !pass[i];
      }
    }
  }
  std::ostringstream d;
  d << "50 cases: " << distractors << " distractors, " << survivors << " survived; " << blobs
    << " blobs, " << false_removals << " removed";
  return {survivors == 0 && false_removals == 0 && distractors > 0 && blobs > 0, d.str()};
}

Outcome ablation(const fs::path& work) {
  const auto manifests = write_suite(standard_suite_spec(), work / "suite");
  struct Variant {
    const char* name;
    StageToggles toggles;
  };
  const Variant variants[] = {{"SAA+", {true, true, true}},
                              {"-property", {false, true, true}},
                              {"-saliency", {true, false, true}},
                              {"-confidence", {true, true, false}},
                              {"SAA", {false, false, false}}};
  std::vector<double> fp;
  std::ostringstream d;
  for (const auto& v : variants) {
    cli::RunOptions opts;
    opts.manifests = manifests;
    opts.out_dir = work / v.name;
    opts.config.toggles = v.toggles;
    opts.workers = 0;
    const auto summary = cli::cmd_run(opts);
    if (summary.failed) return {false, std::string(v.name) + ": cases failed"};
    cli::EvalOptions eval;
    eval.pred_dir = opts.out_dir;
    eval.manifests = manifests;
    std::ostringstream sink;
    const auto report = cli::cmd_eval(eval, sink);
    fp.push_back(report.pixel->f1);
    d << v.name << " Fp=" << report.pixel->f1 << " Fr=" << report.region->f1 << "; ";
  }
  bool ok = fp[0] >= kAblationFloor;
  for (std::size_t i = 1; i < fp.size(); ++i) ok &= fp[0] > fp[i];
  d << "floor " << kAblationFloor;
  return {ok, d.str()};
}

Outcome determinism(const fs::path& work) {
  SuiteSpec suite = standard_suite_spec();
  suite.seeds.resize(12);
  const auto manifests = write_suite(suite, work / "suite");
  std::vector<fs::path> outs;
  for (unsigned workers : {1u, 1u, 8u, 8u}) {
    const auto out = work / ("run" + std::to_string(outs.size()) + "_w" + std::to_string(workers));
    cli::cmd_run({manifests, out, PipelineConfig{}, workers});
    outs.push_back(out);
  }
  std::size_t files = 0, diffs = 0;
  for (const auto& m : manifests) {
    const auto stem = m.stem().string();
    for (const auto& suffix : {".map.saat", ".trace.json"}) {
      const auto ref = read_file(outs[0] / (stem + suffix));
      for (std::size_t r = 1; r < outs.size(); ++r) {
        ++files;
        diffs += read_file(outs[r] / (stem + suffix)) != ref || ref.empty();
      }
    }
  }
  std::ostringstream d;
  d << "runs at workers 1,1,8,8 over " << manifests.size() << " cases: " << files
    << " comparisons, " << diffs << " differ";
  return {diffs == 0 && files > 0, d.str()};
}

Outcome hyperparameter_plumbing(const fs::path& work) {
  fs::create_directories(work);
  save_config(PipelineConfig{}, work / "config.json");
  const auto file_doc = nlohmann::json::parse(read_file(work / "config.json"));
  cli::ConfigOverrides o;
  o.config_file = work / "config.json";
  const auto cfg = cli::resolve_config(o);

  SuiteSpec suite;
  suite.seeds = {0};
  const auto manifests = write_suite(suite, work / "suite");
  cli::cmd_run({manifests, work / "out", cfg, 1});
  const auto trace = nlohmann::json::parse(read_file(work / "out" / "case_0000.trace.json"));
  const auto& tc = trace.at("config");
  const bool ok = file_doc.at("n_neighbors") == 400 && file_doc.at("top_k") == 5 &&
                  file_doc.at("input_resolution") == nlohmann::json::array({400, 400}) &&
                  tc.at("n_neighbors") == 400 && tc.at("top_k") == 5 &&
                  tc.at("input_resolution") == nlohmann::json::array({400, 400});
  std::ostringstream d;
  d << "config file N=" << file_doc.at("n_neighbors") << " K=" << file_doc.at("top_k")
    << " res=" << file_doc.at("input_resolution").dump() << "; trace N=" << tc.at("n_neighbors")
    << " K=" << tc.at("top_k") << " res=" << tc.at("input_resolution").dump();
  return {ok, d.str()};
}

}  // namespace

int main() {
  const auto root = fs::temp_directory_path() / ("saa_acceptance_" + std::to_string(::getpid()));
  fs::remove_all(root);
  fs::create_directories(root);

  run_criterion("oracle-equivalence", oracle_equivalence);
  run_criterion("analytic-saliency", analytic_saliency);
  run_criterion("metric-sanity", metric_sanity);
  run_criterion("region-match-boundary", region_rule);
  run_criterion("property-filter-exactness", property_filter_exactness);
  run_criterion("ablation-direction", [&] { return ablation(root / "ablation"); });
  run_criterion("determinism", [&] { return determinism(root / "determinism"); });
  run_criterion("hyperparameter-plumbing", [&] { return hyperparameter_plumbing(root / "hparams"); });

  std::error_code ec;
  fs::remove_all(root, ec);
  std::printf("%s: %d failing criteria\n", failures ? "FAILED" : "OK", failures);
  return failures ? 1 : 0;
}
