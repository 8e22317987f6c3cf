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

#include "reuseg/bench.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <map>

#include <json.hpp>

#include "reuseg/random.hpp"

namespace reuseg {

// ---------------------------------------------------------------------------
// Metrics

namespace {

struct Confusion {
  std::int64_t tp = 0, tn = 0, fp = 0, fn = 0;
  std::int64_t total() const { return tp + tn + fp + fn; }
};

Confusion confusion(const Tensor& a, const Tensor& truth, double threshold) {
  if (a.shape() != truth.shape()) {
    throw DimensionError("metric shape mismatch " + shape_str(a.shape()) + " vs " +
                         shape_str(truth.shape()));
  }
  if (!(threshold > 0.0 && threshold < 1.0)) throw InputError("threshold must lie in (0, 1)");
  Confusion c;
  for (std::int64_t i = 0; i < a.numel(); ++i) {
    const bool pa = a[i] > threshold;
    const bool pt = truth[i] > threshold;
    if (pa && pt) ++c.tp;
    else if (!pa && !pt) ++c.tn;
    else if (pa) ++c.fp;
    else ++c.fn;
  }
  return c;
}

double iou(std::int64_t inter, std::int64_t uni) {
  return uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

}  // namespace

double accuracy(const Tensor& a, const Tensor& truth, double threshold) {
  const Confusion c = confusion(a, truth, threshold);
  if (c.total() == 0) return 100.0;
  return 100.0 * static_cast<double>(c.tp + c.tn) / static_cast<double>(c.total());
}

double miou(const Tensor& a, const Tensor& truth, double threshold) {
  const Confusion c = confusion(a, truth, threshold);
  const double pos = iou(c.tp, c.tp + c.fp + c.fn);
  const double neg = iou(c.tn, c.tn + c.fp + c.fn);
  return 100.0 * (pos + neg) / 2.0;
}

double recall(const Tensor& a, const Tensor& truth, double threshold) {
  const Confusion c = confusion(a, truth, threshold);
  if (c.tp + c.fn == 0) return 100.0;
  return 100.0 * static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
}

double speedup(double base_hz, double opt_hz) {
  if (!(base_hz > 0.0)) throw InputError("speedup: baseline frequency must be positive");
  return 100.0 * opt_hz / base_hz;
}

// ---------------------------------------------------------------------------
// Noise

NoiseSpec NoiseSpec::parse(std::string_view text, std::uint64_t seed) {
  NoiseSpec spec;
  spec.seed = seed;
  if (text == "none" || text.empty()) return spec;
  const auto colon = text.find(':');
  const auto kind = text.substr(0, colon);
  if (colon == std::string_view::npos) {
    throw ConfigError("noise '" + std::string(text) + "' needs a parameter after ':'");
  }
  const std::string value(text.substr(colon + 1));
  char* end = nullptr;
  spec.amount = std::strtod(value.c_str(), &end);
  if (value.empty() || end != value.c_str() + value.size()) {
    throw ConfigError("noise parameter '" + value + "' is not a number");
  }
  if (kind == "gaussian") {
    spec.kind = Kind::Gaussian;
  } else if (kind == "saltpepper") {
    spec.kind = Kind::SaltPepper;
  } else {
    throw ConfigError("unknown noise kind '" + std::string(kind) + "'");
  }
  spec.validate();
  return spec;
}

std::string NoiseSpec::str() const {
  char buf[64];
  switch (kind) {
    case Kind::None: return "none";
    case Kind::Gaussian: std::snprintf(buf, sizeof(buf), "gaussian:%g", amount); return buf;
    case Kind::SaltPepper: std::snprintf(buf, sizeof(buf), "saltpepper:%g", amount); return buf;
  }
  return "none";
}

void NoiseSpec::validate() const {
  if (kind == Kind::Gaussian && !(amount >= 0.0)) throw ConfigError("gaussian sigma must be >= 0");
  if (kind == Kind::SaltPepper && !(amount >= 0.0 && amount <= 1.0)) {
    throw ConfigError("salt-and-pepper fraction must lie in [0, 1]");
  }
}

RgbImage add_noise(const RgbImage& image, const NoiseSpec& spec) {
  spec.validate();
  RgbImage out = image;
  if (spec.kind == NoiseSpec::Kind::None) return out;
  PortableRng rng(spec.seed);
  if (spec.kind == NoiseSpec::Kind::Gaussian) {
    for (auto& v : out.pixels) {
      const double noisy = static_cast<double>(v) + spec.amount * rng.normal();
      v = static_cast<std::uint8_t>(std::clamp(std::nearbyint(noisy), 0.0, 255.0));
    }
    return out;
  }
  const std::size_t n = out.pixels.size() / 3;
  for (std::size_t i = 0; i < n; ++i) {
    if (rng.uniform() < spec.amount) {
      const std::uint8_t v = rng.uniform() < 0.5 ? 0 : 255;
      out.pixels[i * 3] = out.pixels[i * 3 + 1] = out.pixels[i * 3 + 2] = v;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Synthetic corpus

namespace {

class ValueNoise {
 public:
  ValueNoise(PortableRng& rng, int cells) : cells_(cells), lattice_((cells + 1) * (cells + 1)) {
    for (auto& v : lattice_) v = rng.uniform();
  }

  /// u, v in [0, 1].
  double sample(double u, double v) const {
    const double x = u * cells_;
    const double y = v * cells_;
    const int x0 = std::min(static_cast<int>(x), cells_ - 1);
    const int y0 = std::min(static_cast<int>(y), cells_ - 1);
    const double fx = smooth(x - x0);
    const double fy = smooth(y - y0);
    const double a = at(x0, y0), b = at(x0 + 1, y0);
    const double c = at(x0, y0 + 1), d = at(x0 + 1, y0 + 1);
    const double top = a + (b - a) * fx;
    const double bottom = c + (d - c) * fx;
    return top + (bottom - top) * fy;
  }

 private:
  static double smooth(double t) { return t * t * (3.0 - 2.0 * t); }
  double at(int x, int y) const { return lattice_[static_cast<std::size_t>(y * (cells_ + 1) + x)]; }

  int cells_;
  std::vector<double> lattice_;
};

struct Rgb {
  double r, g, b;
};

Rgb mix(const Rgb& a, const Rgb& b, double t) {
  return {a.r + (b.r - a.r) * t, a.g + (b.g - a.g) * t, a.b + (b.b - a.b) * t};
}

}  // namespace

RgbImage synth_image(std::int64_t size, std::uint64_t seed) {
  if (size < 1) throw InputError("synthetic image size must be >= 1");
  PortableRng rng(seed);
  std::vector<ValueNoise> terrain;
  for (int o = 0; o < 4; ++o) terrain.emplace_back(rng, 3 << o);
  const ValueNoise moisture(rng, 5);

  const Rgb grass{70, 140, 55}, forest{30, 85, 40}, soil{150, 120, 80}, sand{200, 185, 140};
  RgbImage img{size, size, std::vector<std::uint8_t>(static_cast<std::size_t>(size * size * 3))};
  std::vector<Rgb> canvas(static_cast<std::size_t>(size * size));
  for (std::int64_t y = 0; y < size; ++y) {
    for (std::int64_t x = 0; x < size; ++x) {
      const double u = (static_cast<double>(x) + 0.5) / static_cast<double>(size);
      const double v = (static_cast<double>(y) + 0.5) / static_cast<double>(size);
      double h = 0.0, amp = 0.5;
      for (const auto& octave : terrain) {
        h += amp * octave.sample(u, v);
        amp *= 0.5;
      }
      h /= 0.9375;
      const double m = moisture.sample(u, v);
      const Rgb low = mix(sand, soil, std::clamp(m * 1.5, 0.0, 1.0));
      const Rgb high = mix(grass, forest, std::clamp((h - 0.5) * 2.0, 0.0, 1.0));
      canvas[static_cast<std::size_t>(y * size + x)] = mix(low, high, std::clamp(h * 1.6 - 0.3, 0.0, 1.0));
    }
  }

  const auto coord = [&] { return static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(size))); };
  const auto extent = [&](std::int64_t lo_div, std::int64_t hi_div) {
    const std::int64_t lo = std::max<std::int64_t>(1, size / lo_div);
    const std::int64_t hi = std::max<std::int64_t>(lo + 1, size / hi_div);
    return lo + static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(hi - lo)));
  };
  const auto paint = [&](std::int64_t x, std::int64_t y, const Rgb& c) {
    if (x >= 0 && y >= 0 && x < size && y < size) canvas[static_cast<std::size_t>(y * size + x)] = c;
  };

  // Roads.
  const auto roads = 1 + rng.below(2);
  for (std::uint64_t r = 0; r < roads; ++r) {
    const bool horizontal = rng.uniform() < 0.5;
    const std::int64_t at = coord();
    const std::int64_t width = std::max<std::int64_t>(1, size / 40);
    const Rgb asphalt{90, 90, 95};
    for (std::int64_t i = 0; i < size; ++i) {
      for (std::int64_t w = 0; w < width; ++w) {
        horizontal ? paint(i, at + w, asphalt) : paint(at + w, i, asphalt);
      }
    }
  }
  // Buildings.
  const auto buildings = 2 + rng.below(5);
  for (std::uint64_t b = 0; b < buildings; ++b) {
    const std::int64_t x0 = coord(), y0 = coord();
    const std::int64_t w = extent(24, 6), h = extent(24, 6);
    const double shade = 120.0 + 100.0 * rng.uniform();
    const Rgb roof{shade, shade * 0.9, shade * 0.85};
    for (std::int64_t y = y0; y < y0 + h; ++y) {
      for (std::int64_t x = x0; x < x0 + w; ++x) paint(x, y, roof);
    }
  }
  // Ponds.
  const auto ponds = rng.below(3);
  for (std::uint64_t p = 0; p < ponds; ++p) {
    const std::int64_t cx = coord(), cy = coord();
    const std::int64_t r = extent(20, 8);
    const Rgb water{40, 70, 130};
    for (std::int64_t y = cy - r; y <= cy + r; ++y) {
      for (std::int64_t x = cx - r; x <= cx + r; ++x) {
        if ((x - cx) * (x - cx) + (y - cy) * (y - cy) <= r * r) paint(x, y, water);
      }
    }
  }

  for (std::size_t i = 0; i < canvas.size(); ++i) {
    const Rgb& c = canvas[i];
    img.pixels[i * 3] = static_cast<std::uint8_t>(std::clamp(std::nearbyint(c.r), 0.0, 255.0));
    img.pixels[i * 3 + 1] = static_cast<std::uint8_t>(std::clamp(std::nearbyint(c.g), 0.0, 255.0));
    img.pixels[i * 3 + 2] = static_cast<std::uint8_t>(std::clamp(std::nearbyint(c.b), 0.0, 255.0));
  }
  return img;
}

std::vector<RgbImage> synth_images(std::int64_t count, std::int64_t size, std::uint64_t seed) {
  if (count < 1) throw InputError("synthetic corpus needs at least one image");
  std::vector<RgbImage> out;
  out.reserve(static_cast<std::size_t>(count));
  for (std::int64_t i = 0; i < count; ++i) {
    out.push_back(synth_image(size, seed * 1000003ULL + static_cast<std::uint64_t>(i)));
  }
  return out;
}

std::vector<std::filesystem::path> synth_corpus(const std::filesystem::path& dir,
                                                std::int64_t count, std::int64_t size,
                                                std::uint64_t seed) {
  const auto images = synth_images(count, size, seed);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw OutputError("cannot create corpus directory '" + dir.string() + "': " + ec.message());
  std::vector<std::filesystem::path> paths;
  for (std::size_t i = 0; i < images.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof(name), "frame_%04zu.ppm", i);
    paths.push_back(dir / name);
    write_ppm(paths.back(), images[i]);
  }
  return paths;
}

std::vector<RgbImage> load_corpus(const std::filesystem::path& path) {
  std::error_code ec;
  if (!std::filesystem::exists(path, ec)) {
    throw InputError("corpus path '" + path.string() + "' does not exist");
  }
  if (!std::filesystem::is_directory(path, ec)) return {read_ppm(path)};
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(path)) {
    if (entry.is_regular_file() && entry.path().extension() == ".ppm") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw InputError("corpus directory '" + path.string() + "' has no .ppm files");
  std::vector<RgbImage> out;
  for (const auto& f : files) out.push_back(read_ppm(f));
  return out;
}

// ---------------------------------------------------------------------------
// Benchmark

namespace {

struct Summary {
  double mean = 0.0;
  double stddev = 0.0;
};

Summary summarize(const std::vector<double>& xs) {
  Summary s;
  if (xs.empty()) return s;
  for (double x : xs) s.mean += x;
  s.mean /= static_cast<double>(xs.size());
  if (xs.size() > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - s.mean) * (x - s.mean);
    s.stddev = std::sqrt(ss / static_cast<double>(xs.size() - 1));
  }
  return s;
}

struct PresetRun {
  std::vector<Tensor> fused;
  std::vector<StageTimings> timings;
  CacheStats warm_delta;
  CacheStats total;
};

PresetRun run_preset(const std::vector<RgbImage>& frames, const PromptSet& prompts,
                     std::shared_ptr<const ModelSet> models, const PipelineOptions& popts,
                     const OptimizationFlags& flags, bool naive) {
  Engine engine(std::move(models), popts);
  PresetRun run;
  CacheStats after_warmup;
  for (std::size_t i = 0; i < frames.size(); ++i) {
    FusedHeatmap h = engine.segment(frames[i], prompts, flags, naive);
    run.fused.push_back(std::move(h.fused));
    run.timings.push_back(h.timing);
    if (i == 0) after_warmup = engine.stats();
  }
  run.total = engine.stats();
  run.warm_delta = run.total - after_warmup;
  return run;
}

double round6(double v) {
  if (!std::isfinite(v)) return v;
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return std::strtod(buf, nullptr);
}

}  // namespace

const PresetReport& BenchReport::preset(std::string_view name) const {
  for (const auto& p : presets) {
    if (p.name == name) return p;
  }
  throw InputError("report has no preset '" + std::string(name) + "'");
}

std::string BenchReport::to_json() const {
  using nlohmann::ordered_json;
  ordered_json presets_json = ordered_json::object();
  for (const auto& p : presets) {
    presets_json[p.name] = {
        {"precision", dtype_name(p.flags.precision)},
        {"reuse_prompt", p.flags.reuse_prompt},
        {"reuse_pos_embed", p.flags.reuse_pos_embed},
        {"share_activations", p.flags.share_activations},
        {"truncate_encoder", p.flags.truncate_encoder},
        {"mean_duration_s", round6(p.mean_duration_s)},
        {"std_duration_s", round6(p.std_duration_s)},
        {"hz", round6(p.hz)},
        {"speedup_pct", round6(p.speedup_pct)},
        {"mean_accuracy_pct", round6(p.mean_accuracy_pct)},
        {"std_accuracy_pct", round6(p.std_accuracy_pct)},
        {"miou_pct", round6(p.miou_pct)},
        {"std_miou_pct", round6(p.std_miou_pct)},
        {"mean_recall_pct", round6(p.mean_recall_pct)},
        {"mean_transform_s", round6(p.mean_transform_s)},
        {"mean_encode_s", round6(p.mean_encode_s)},
        {"mean_decode_s", round6(p.mean_decode_s)},
        {"mean_fuse_s", round6(p.mean_fuse_s)},
        {"max_abs_diff", round6(p.max_abs_diff)},
        {"image_encoder_passes_per_frame", round6(p.image_encoder_passes_per_frame)},
        {"encoder_blocks_per_frame", round6(p.encoder_blocks_per_frame)},
        {"text_encoder_passes_per_frame", round6(p.text_encoder_passes_per_frame)},
        {"decoder_passes_per_frame", round6(p.decoder_passes_per_frame)},
        {"pos_embed_recomputations", p.pos_embed_recomputations},
    };
  }
  ordered_json j = {
      {"seed", seed},
      {"frames", frames},
      {"P", P},
      {"image_size", image_size},
      {"input_size", input_size},
      {"preset_list", preset_list},
      {"machine_note", machine_note},
      {"noise", noise},
      {"fusion", fusion},
      {"threshold", round6(threshold)},
      {"presets", presets_json},
  };
  return j.dump(2) + "\n";
}

BenchReport run_benchmark(const std::vector<RgbImage>& corpus,
                          std::shared_ptr<const ModelSet> models, const BenchOptions& options) {
  if (corpus.empty()) throw InputError("benchmark corpus is empty");
  if (options.frames < 1) throw InputError("benchmark needs at least one frame");
  if (std::find(options.presets.begin(), options.presets.end(), "original") ==
      options.presets.end()) {
    throw InputError("benchmark presets must include 'original' (the baseline)");
  }
  for (const auto& name : options.presets) OptimizationFlags::preset(name);
  if (!(options.threshold > 0.0 && options.threshold < 1.0)) {
    throw InputError("threshold must lie in (0, 1)");
  }
  const PromptSet prompts(options.prompts);

  std::vector<RgbImage> frames;
  for (std::int64_t i = 0; i < options.frames; ++i) {
    NoiseSpec noise = options.noise;
    noise.seed = options.noise.seed + static_cast<std::uint64_t>(i);
    frames.push_back(add_noise(corpus[static_cast<std::size_t>(i) % corpus.size()], noise));
  }

  PipelineOptions popts;
  popts.fusion = options.fusion;

  BenchReport report;
  report.seed = options.seed;
  report.frames = options.frames;
  report.P = static_cast<std::int64_t>(prompts.size());
  report.image_size = models->config().image_size;
  report.input_size = corpus.front().width;
  report.preset_list = options.presets;
  report.machine_note = options.machine_note;
  report.noise = options.noise.str();
  report.fusion = options.fusion == FusionMode::Mean ? "mean"
                  : options.fusion == FusionMode::Min ? "min"
                                                      : "max";
  report.threshold = options.threshold;

  std::map<std::string, PresetRun> runs;
  const auto original = OptimizationFlags::preset("original");
  runs.emplace("original", run_preset(frames, prompts, models, popts, original, true));
  for (const auto& name : options.presets) {
    if (runs.count(name)) continue;
    runs.emplace(name,
                 run_preset(frames, prompts, models, popts, OptimizationFlags::preset(name), false));
  }

  const PresetRun& truth = runs.at("original");
  const double timed = static_cast<double>(std::max<std::int64_t>(1, options.frames - 1));
  double base_hz = 0.0;
  for (const auto& name : options.presets) {
    if (std::any_of(report.presets.begin(), report.presets.end(),
                    [&](const PresetReport& p) { return p.name == name; })) {
      continue;
    }
    const PresetRun& run = runs.at(name);
    PresetReport p;
    p.name = name;
    p.flags = OptimizationFlags::preset(name);

    std::vector<double> dur, transform, encode, decode, fuse_t, acc, iou, rec;
    const std::size_t first_timed = run.timings.size() > 1 ? 1 : 0;
    for (std::size_t i = 0; i < run.fused.size(); ++i) {
      acc.push_back(accuracy(run.fused[i], truth.fused[i], options.threshold));
      iou.push_back(miou(run.fused[i], truth.fused[i], options.threshold));
      rec.push_back(recall(run.fused[i], truth.fused[i], options.threshold));
      p.max_abs_diff = std::max(p.max_abs_diff,
                                static_cast<double>(max_abs_diff(run.fused[i], truth.fused[i])));
      if (i < first_timed) continue;
      const StageTimings& t = run.timings[i];
      dur.push_back(t.total_s);
      transform.push_back(t.transform_s);
      encode.push_back(t.encode_s);
      decode.push_back(t.decode_s);
      fuse_t.push_back(t.fuse_s);
    }
    const Summary d = summarize(dur);
    p.mean_duration_s = d.mean;
    p.std_duration_s = d.stddev;
    p.hz = d.mean > 0.0 ? 1.0 / d.mean : 0.0;
    const Summary a = summarize(acc);
    p.mean_accuracy_pct = a.mean;
    p.std_accuracy_pct = a.stddev;
    const Summary m = summarize(iou);
    p.miou_pct = m.mean;
    p.std_miou_pct = m.stddev;
    p.mean_recall_pct = summarize(rec).mean;
    p.mean_transform_s = summarize(transform).mean;
    p.mean_encode_s = summarize(encode).mean;
    p.mean_decode_s = summarize(decode).mean;
    p.mean_fuse_s = summarize(fuse_t).mean;

    const CacheStats& w = options.frames > 1 ? run.warm_delta : run.total;
    p.image_encoder_passes_per_frame = static_cast<double>(w.image_encoder_invocations) / timed;
    p.encoder_blocks_per_frame = static_cast<double>(w.encoder_blocks_executed) / timed;
    p.text_encoder_passes_per_frame = static_cast<double>(w.text_encoder_invocations) / timed;
    p.decoder_passes_per_frame = static_cast<double>(w.decoder_invocations) / timed;
    p.pos_embed_recomputations = run.total.pos_embed_recomputations;
    report.presets.push_back(p);
  }
  for (const auto& p : report.presets) {
    if (p.name == "original") base_hz = p.hz;
  }
  for (auto& p : report.presets) p.speedup_pct = base_hz > 0.0 ? speedup(base_hz, p.hz) : 0.0;
  return report;
}

}  // namespace reuseg
