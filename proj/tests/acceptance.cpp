// Copyright 2026 The reuseg Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "reuseg/bench.hpp"
#include "reuseg/pipeline.hpp"
#include "reuseg/weights.hpp"

namespace {

using namespace reuseg;
using Clock = std::chrono::steady_clock;

constexpr std::uint64_t kSeed = 42;
constexpr std::int64_t kInputSize = 352;

int failures = 0;

struct Outcome {
  bool pass = false;
  std::string detail;
};

// Every heatmap produced by the suite must score 100 against itself.
std::int64_t self_checked = 0;
std::int64_t self_failed = 0;

void self_check(const FusedHeatmap& h) {
  const std::int64_t p = h.per_prompt.dim(0);
  const std::int64_t s = h.fused.dim(0);
  auto check = [&](const Tensor& m) {
    ++self_checked;
    if (accuracy(m, m) != 100.0 || miou(m, m) != 100.0) ++self_failed;
  };
  check(h.fused);
  for (std::int64_t i = 0; i < p; ++i) {
    Tensor m({s, s});
    std::copy_n(h.per_prompt.ptr() + i * s * s, s * s, m.mutable_ptr());
    check(m);
  }
}

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

void report(int id, const char* name, const std::function<Outcome()>& body) {
  const auto t0 = Clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  if (!o.pass) ++failures;
  std::printf("[%s] %d %s: %s (%.1f s)\n", o.pass ? "PASS" : "FAIL", id, name, o.detail.c_str(),
              seconds_since(t0));
  std::fflush(stdout);
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

OptimizationFlags all_reuse(DType precision) {
  OptimizationFlags f;
  f.precision = precision;
  f.reuse_prompt = f.reuse_pos_embed = f.share_activations = f.truncate_encoder = true;
  return f;
}

}  // namespace

int main() {
  const auto models = make_model_set(random_init(ModelConfig::tiny(), kSeed));
  const PromptSet four = PromptSet::parse("grass,lawn,flat,park");

  report(1, "F32 reuse exactness", [&] {
    const auto t0 = Clock::now();
    const auto frames = synth_images(20, kInputSize, kSeed);
    Engine naive(models);
    Engine opt(models);
    float worst = 0.0f;
    bool bitwise = true;
    for (const auto& img : frames) {
      const FusedHeatmap a = naive.segment_naive(img, four);
      const FusedHeatmap b = opt.segment_optimized(img, four, all_reuse(DType::F32));
      bitwise = bitwise && a.per_prompt.bitwise_equal(b.per_prompt) && a.fused.bitwise_equal(b.fused);
      worst = std::max({worst, max_abs_diff(a.per_prompt, b.per_prompt),
                        max_abs_diff(a.fused, b.fused)});
      self_check(a);
      self_check(b);
    }
    const double t = seconds_since(t0);
    return Outcome{bitwise && worst == 0.0f && t < 60.0,
                   fmt("20 frames, max|d| = %g, bitwise %s, %.2f s < 60 s", worst,
                       bitwise ? "yes" : "no", t)};
  });

  report(2, "truncation accounting", [&] {
    const ModelConfig& cfg = models->config();
    const Model& m = models->get(DType::F32);
    const Tensor pos = interpolate_pos_embed(m.vision.pos_embed, cfg.grid());
    const auto frames = synth_images(3, kInputSize, kSeed + 1);
    bool equal = true;
    std::int64_t full_blocks = 0;
    std::int64_t trunc_blocks = 0;
    for (const auto& img : frames) {
      const Tensor x = preprocess(img, cfg.image_size);
      const ActivationSet full = encode_image(x, m.vision, cfg, false, pos, &full_blocks);
      const ActivationSet trunc = encode_image(x, m.vision, cfg, true, pos, &trunc_blocks);
      equal = equal && full.bitwise_equal(trunc);
    }
    Engine e(models);
    for (const auto& img : frames) e.segment_optimized(img, four, all_reuse(DType::F32));
    const auto blocks_engine = e.stats().encoder_blocks_executed;
    const bool ok = equal && trunc_blocks == 30 && full_blocks == 36 && blocks_engine == 30;
    return Outcome{ok, fmt("blocks/frame truncated %lld of %lld (engine %llu over 3 frames), "
                           "activations bitwise %s",
                           static_cast<long long>(trunc_blocks / 3),
                           static_cast<long long>(full_blocks / 3),
                           static_cast<unsigned long long>(blocks_engine),
                           equal ? "equal" : "differ")};
  });

  report(3, "work accounting", [&] {
    const auto frames = synth_images(2, kInputSize, kSeed + 2);
    Engine opt(models);
    opt.segment_optimized(frames[0], four, all_reuse(DType::F32));
    const CacheStats before = opt.stats();
    opt.segment_optimized(frames[1], four, all_reuse(DType::F32));
    const CacheStats w = opt.stats() - before;
    Engine naive(models);
    const CacheStats nb = naive.stats();
    naive.segment_naive(frames[1], four);
    const CacheStats n = naive.stats() - nb;
    const bool ok = w.image_encoder_invocations == 1 && w.decoder_invocations == 4 &&
                    w.text_encoder_invocations == 0 && n.image_encoder_invocations == 4 &&
                    n.text_encoder_invocations == 4;
    return Outcome{ok, fmt("warm image/decoder/text = %llu/%llu/%llu, naive image/text = %llu/%llu",
                           static_cast<unsigned long long>(w.image_encoder_invocations),
                           static_cast<unsigned long long>(w.decoder_invocations),
                           static_cast<unsigned long long>(w.text_encoder_invocations),
                           static_cast<unsigned long long>(n.image_encoder_invocations),
                           static_cast<unsigned long long>(n.text_encoder_invocations))};
  });

  report(4, "FP16 degradation bound", [&] {
    const auto t0 = Clock::now();
    const auto frames = synth_images(50, kInputSize, kSeed + 3);
    Engine naive(models);
    Engine opt(models);
    const auto flags = OptimizationFlags::preset("blabberseg");
    double acc = 0.0;
    double iou = 0.0;
    for (const auto& img : frames) {
      const FusedHeatmap ref = naive.segment_naive(img, four, DType::F32);
      const FusedHeatmap got = opt.segment_optimized(img, four, flags);
      acc += accuracy(got.fused, ref.fused);
      iou += miou(got.fused, ref.fused);
      self_check(ref);
      self_check(got);
    }
    acc /= 50.0;
    iou /= 50.0;
    const double t = seconds_since(t0);
    return Outcome{acc >= 95.0 && iou >= 85.0 && t < 120.0,
                   fmt("agreement %.3f%% >= 95, mIoU %.3f%% >= 85, %.2f s < 120 s", acc, iou, t)};
  });

  report(5, "throughput scaling", [&] {
    const auto t0 = Clock::now();
    const std::vector<std::string> pool = {"grass", "lawn",   "flat", "park",
                                           "field", "meadow", "turf", "clearing"};
    const auto corpus = synth_images(10, kInputSize, kSeed + 4);
    std::vector<double> ratios;
    for (std::size_t p : {1u, 2u, 4u, 8u}) {
      BenchOptions o;
      o.presets = {"original", "blabberseg"};
      o.frames = 31;
      o.prompts.assign(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(p));
      o.seed = kSeed;
      const BenchReport r = run_benchmark(corpus, models, o);
      ratios.push_back(r.preset("blabberseg").speedup_pct / 100.0);
    }
    bool monotone = true;
    for (std::size_t i = 1; i < ratios.size(); ++i) monotone = monotone && ratios[i] >= ratios[i - 1];
    const double t = seconds_since(t0);
    return Outcome{ratios.back() >= 2.0 && monotone && t < 300.0,
                   fmt("speedup P=1,2,4,8: %.2fx %.2fx %.2fx %.2fx, non-decreasing %s, %.1f s < 300 s",
                       ratios[0], ratios[1], ratios[2], ratios[3], monotone ? "yes" : "no", t)};
  });

  report(7, "positional-embedding reuse", [&] {
    const auto frames = synth_images(10, kInputSize, kSeed + 5);
    Engine e(models);
    const auto flags = OptimizationFlags::preset("blabberseg");
    std::int64_t later_interp = 0;
    for (int i = 0; i < 100; ++i) {
      const FusedHeatmap h = e.segment_optimized(frames[static_cast<std::size_t>(i) % 10], four, flags);
      if (i > 0) later_interp += h.timing.transform_interpolations;
      self_check(h);
    }
    const auto recomp = e.stats().pos_embed_recomputations;
    return Outcome{recomp == 1 && later_interp == 0,
                   fmt("recomputations %llu over 100 frames, interpolations after frame 1: %lld",
                       static_cast<unsigned long long>(recomp), static_cast<long long>(later_interp))};
  });

  report(8, "noise protocol", [&] {
    BenchOptions o;
    o.presets = preset_names();
    o.frames = 4;
    o.noise = NoiseSpec::parse("saltpepper:0.05", kSeed);
    const BenchReport r = run_benchmark(synth_images(4, kInputSize, kSeed + 6), models, o);
    bool finite = true;
    for (const auto& p : r.presets) {
      for (double v : {p.mean_duration_s, p.std_duration_s, p.hz, p.speedup_pct, p.mean_accuracy_pct,
                       p.std_accuracy_pct, p.miou_pct, p.std_miou_pct, p.mean_recall_pct,
                       p.mean_transform_s, p.max_abs_diff}) {
        finite = finite && std::isfinite(v);
      }
    }
    bool covered = r.presets.size() == preset_names().size();
    for (const auto& n : preset_names()) {
      bool found = false;
      for (const auto& p : r.presets) found = found || p.name == n;
      covered = covered && found;
    }
    const std::string json = r.to_json();
    const bool clean = json.find("nan") == std::string::npos && json.find("inf") == std::string::npos;
    return Outcome{finite && covered && clean,
                   fmt("%zu presets, finite %s, json clean %s", r.presets.size(),
                       finite ? "yes" : "no", clean ? "yes" : "no")};
  });

  report(6, "metric fidelity", [&] {
    const double s = speedup(1.81, 16.78);
    const bool close = std::abs(s - 927.41) <= 0.01 * 927.41;
    return Outcome{close && self_failed == 0 && self_checked > 0,
                   fmt("self-scores 100 on %lld/%lld maps, speedup(1.81, 16.78) = %.2f%% vs 927.41%%",
                       static_cast<long long>(self_checked - self_failed),
                       static_cast<long long>(self_checked), s)};
  });

  report(9, "container round trip", [&] {
    const WeightStore f32 = random_init(ModelConfig::tiny(), kSeed);
    auto mixed = f32;
    const WeightStore f16 = cast_store(f32, DType::F16);
    bool flip = false;
    for (auto& [name, t] : mixed.tensors) {
      if (flip) t = f16.tensors.at(name);
      flip = !flip;
    }
    const auto dir = std::filesystem::temp_directory_path() / "reuseg_acceptance";
    std::filesystem::create_directories(dir);
    bool ok = true;
    for (const WeightStore* s : {&f32, &f16, static_cast<const WeightStore*>(&mixed)}) {
      const auto path = dir / "store.bsegw";
      save(*s, path);
      ok = ok && load(path).bitwise_equal(*s);
    }
    std::filesystem::remove_all(dir);
    const auto sum = store_checksum(f32);
    return Outcome{ok && sum == kTinySeed42Checksum,
                   fmt("F32/F16/mixed bitwise %s, checksum 0x%016llx", ok ? "yes" : "no",
                       static_cast<unsigned long long>(sum))};
  });

  std::printf("%s: %d failing criteria\n", failures == 0 ? "ALL PASS" : "FAILURES", failures);
  return failures == 0 ? 0 : 1;
}
