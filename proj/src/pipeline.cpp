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

#include "reuseg/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iterator>
#include <set>

namespace reuseg {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

}  // namespace

// ---------------------------------------------------------------------------
// PPM / PGM

std::vector<std::uint8_t> encode_ppm(const RgbImage& image) {
  const std::string header =
      "P6\n" + std::to_string(image.width) + " " + std::to_string(image.height) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.insert(out.end(), image.pixels.begin(), image.pixels.end());
  return out;
}

RgbImage decode_ppm(const std::vector<std::uint8_t>& bytes, const std::string& source) {
  std::size_t pos = 0;
  auto fail = [&](const std::string& why) -> InputError {
    return InputError("invalid PPM '" + source + "': " + why);
  };
  auto skip_space = [&] {
    while (pos < bytes.size()) {
      if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(bytes[pos])) {
        ++pos;
      } else {
        break;
      }
    }
  };
  auto number = [&](const char* what) {
    skip_space();
    std::int64_t v = 0;
    std::size_t digits = 0;
    while (pos < bytes.size() && std::isdigit(bytes[pos])) {
      v = v * 10 + (bytes[pos] - '0');
      if (v > (1 << 20)) throw fail(std::string(what) + " too large");
      ++pos;
      ++digits;
    }
    if (digits == 0) throw fail(std::string("missing ") + what);
    return v;
  };
  if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '6') throw fail("magic is not P6");
  pos = 2;
  RgbImage img;
  img.width = number("width");
  img.height = number("height");
  const auto maxval = number("maxval");
  if (maxval != 255) throw fail("maxval must be 255");
  if (pos >= bytes.size() || !std::isspace(bytes[pos])) throw fail("missing header terminator");
  ++pos;
  if (img.width < 1 || img.height < 1) throw fail("empty image");
  const auto n = static_cast<std::size_t>(img.width * img.height * 3);
  if (bytes.size() - pos < n) throw fail("pixel data truncated");
  img.pixels.assign(bytes.begin() + static_cast<std::ptrdiff_t>(pos),
                    bytes.begin() + static_cast<std::ptrdiff_t>(pos + n));
  return img;
}

RgbImage read_ppm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open image '" + path.string() + "'");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return decode_ppm(bytes, path.string());
}

void write_ppm(const std::filesystem::path& path, const RgbImage& image) {
  const auto bytes = encode_ppm(image);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw OutputError("cannot open '" + path.string() + "' for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw OutputError("failed writing '" + path.string() + "'");
}

void write_pgm(const std::filesystem::path& path, const Tensor& map) {
  if (map.rank() != 2) throw DimensionError("write_pgm expects [H x W]");
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw OutputError("cannot open '" + path.string() + "' for writing");
  out << "P5\n" << map.dim(1) << ' ' << map.dim(0) << "\n255\n";
  for (float v : map.data()) {
    out.put(static_cast<char>(std::lround(std::clamp(v, 0.0f, 1.0f) * 255.0f)));
  }
  if (!out) throw OutputError("failed writing '" + path.string() + "'");
}

// ---------------------------------------------------------------------------
// Flags and prompts

OptimizationFlags OptimizationFlags::preset(std::string_view name) {
  const DType f32 = DType::F32;
  const DType f16 = DType::F16;
  if (name == "original") return {f32, false, false, false, false};
  if (name == "fp") return {f16, false, false, false, false};
  if (name == "rpe") return {f32, true, false, false, false};
  if (name == "fp-rpe") return {f16, true, false, false, false};
  if (name == "fp-rppe") return {f16, true, true, false, false};
  if (name == "blabberseg") return {f16, true, true, true, true};
  throw ConfigError("unknown preset '" + std::string(name) + "'");
}

const std::vector<std::string>& preset_names() {
  static const std::vector<std::string> names = {"original", "fp",      "rpe",
                                                 "fp-rpe",   "fp-rppe", "blabberseg"};
  return names;
}

PromptSet::PromptSet(std::vector<std::string> prompts) : prompts_(std::move(prompts)) {
  if (prompts_.empty()) throw InputError("prompt set must not be empty");
  std::set<std::string> seen;
  for (const auto& p : prompts_) {
    if (!seen.insert(p).second) throw InputError("duplicate prompt '" + p + "'");
  }
}

PromptSet PromptSet::parse(std::string_view list) {
  std::vector<std::string> out;
  while (true) {
    const auto comma = list.find(',');
    const auto item = trim(list.substr(0, comma));
    if (!item.empty()) out.emplace_back(item);
    if (comma == std::string_view::npos) break;
    list.remove_prefix(comma + 1);
  }
  return PromptSet(std::move(out));
}

FusionMode parse_fusion(std::string_view name) {
  if (name == "mean") return FusionMode::Mean;
  if (name == "min") return FusionMode::Min;
  if (name == "max") return FusionMode::Max;
  throw ConfigError("unknown fusion mode '" + std::string(name) + "'");
}

float PipelineOptions::resolved_sigma(std::int64_t image_size) const {
  return blur_sigma > 0.0f ? blur_sigma : 7.0f * static_cast<float>(image_size) / 352.0f;
}

// ---------------------------------------------------------------------------
// Image processing

Tensor preprocess(const RgbImage& image, std::int64_t size, const PipelineOptions& options) {
  if (image.width < 1 || image.height < 1 ||
      image.pixels.size() != static_cast<std::size_t>(image.width * image.height * 3)) {
    throw InputError("preprocess: empty or malformed image");
  }
  const std::int64_t h = image.height;
  const std::int64_t w = image.width;
  std::vector<float> planes(static_cast<std::size_t>(3 * h * w));
  for (std::int64_t i = 0; i < h * w; ++i) {
    for (int c = 0; c < 3; ++c) {
      planes[c * h * w + i] = static_cast<float>(image.pixels[i * 3 + c]) / 255.0f;
    }
  }
  Tensor resized = bilinear_resize(Tensor({3, h, w}, std::move(planes)), size, size);
  float* p = resized.mutable_ptr();
  for (int c = 0; c < 3; ++c) {
    const float mean = options.mean[c];
    const float sd = options.std[c];
    for (std::int64_t i = 0; i < size * size; ++i) p[c * size * size + i] = (p[c * size * size + i] - mean) / sd;
  }
  return resized;
}

Tensor prompt_probability(const Tensor& logits) {
  return sigmoid(logits);
}

Tensor fuse(const Tensor& maps, FusionMode mode) {
  if (maps.rank() != 3 || maps.dim(0) < 1) throw DimensionError("fuse expects [P x S x S], P >= 1");
  const std::int64_t p = maps.dim(0);
  const std::int64_t n = maps.dim(1) * maps.dim(2);
  std::vector<float> out(maps.ptr(), maps.ptr() + n);
  for (std::int64_t k = 1; k < p; ++k) {
    const float* m = maps.ptr() + k * n;
    for (std::int64_t i = 0; i < n; ++i) {
      switch (mode) {
        case FusionMode::Mean: out[i] += m[i]; break;
        case FusionMode::Min: out[i] = std::min(out[i], m[i]); break;
        case FusionMode::Max: out[i] = std::max(out[i], m[i]); break;
      }
    }
  }
  if (mode == FusionMode::Mean && p > 1) {
    for (auto& v : out) v = std::clamp(v / static_cast<float>(p), 0.0f, 1.0f);
  }
  return Tensor({maps.dim(1), maps.dim(2)}, std::move(out), maps.dtype());
}

Tensor postprocess(const Tensor& fused, int kernel_size, float sigma) {
  return gaussian_blur(fused, kernel_size, sigma);
}

// ---------------------------------------------------------------------------
// Engine

Engine::Engine(std::shared_ptr<const ModelSet> models, PipelineOptions options)
    : models_(std::move(models)), options_(options), cache_(models_) {
  gaussian_kernel(options_.blur_kernel, options_.resolved_sigma(models_->config().image_size));
}

Tensor Engine::probability_stage(const Tensor& logits) const {
  return prompt_probability(cast(logits, DType::F32));
}

FusedHeatmap Engine::finish(std::vector<Tensor> maps, StageTimings timing) const {
  const auto start = Clock::now();
  const std::int64_t s = maps.front().dim(0);
  std::vector<float> stacked;
  stacked.reserve(maps.size() * static_cast<std::size_t>(s * s));
  for (const auto& m : maps) stacked.insert(stacked.end(), m.data().begin(), m.data().end());
  FusedHeatmap out;
  out.per_prompt = Tensor({static_cast<std::int64_t>(maps.size()), s, s}, std::move(stacked),
                          maps.front().dtype());
  out.fused = postprocess(fuse(out.per_prompt, options_.fusion), options_.blur_kernel,
                          options_.resolved_sigma(config().image_size));
  timing.fuse_s += seconds_since(start);
  out.timing = timing;
  return out;
}

FusedHeatmap Engine::segment(const RgbImage& image, const PromptSet& prompts,
                             const OptimizationFlags& flags, bool naive) {
  return naive ? segment_naive(image, prompts, flags.precision)
               : segment_optimized(image, prompts, flags);
}

FusedHeatmap Engine::segment_naive(const RgbImage& image, const PromptSet& prompts,
                                   DType precision) {
  const auto frame_start = Clock::now();
  const Model& model = models_->get(precision);
  const ModelConfig& cfg = model.config;
  const std::uint64_t frame = next_frame_++;
  StageTimings tm;
  std::vector<Tensor> maps;

  auto t = Clock::now();
  const Tensor pixels = cast(preprocess(image, cfg.image_size, options_), precision);
  tm.transform_s += seconds_since(t);

  for (const auto& prompt : prompts.prompts()) {
    t = Clock::now();
    const Tensor pos = cache_.compute_pos_embed(precision);
    ++tm.transform_interpolations;
    tm.transform_s += seconds_since(t);

    t = Clock::now();
    std::int64_t blocks = 0;
    const ActivationSet acts = encode_image(pixels, model.vision, cfg, false, pos, &blocks, frame);
    cache_.note_image_encoder(blocks);
    const Tensor c = encode_text(model.tokenize(prompt), model.text, cfg);
    cache_.note_text_encoder();
    tm.encode_s += seconds_since(t);

    t = Clock::now();
    const FilmParams fp = film_params(c, model.decoder);
    const Tensor logits = decode(acts, fp.gamma, fp.beta, model.decoder);
    cache_.note_decoder();
    maps.push_back(probability_stage(logits));
    tm.decode_s += seconds_since(t);
  }
  FusedHeatmap out = finish(std::move(maps), tm);
  out.timing.total_s = seconds_since(frame_start);
  return out;
}

FusedHeatmap Engine::segment_optimized(const RgbImage& image, const PromptSet& prompts,
                                       const OptimizationFlags& flags) {
  const auto frame_start = Clock::now();
  const DType precision = flags.precision;
  const Model& model = models_->get(precision);
  const ModelConfig& cfg = model.config;
  const std::uint64_t frame = next_frame_++;
  StageTimings tm;

  auto t = Clock::now();
  const Tensor pixels = cast(preprocess(image, cfg.image_size, options_), precision);
  Tensor pos;
  if (flags.reuse_pos_embed) {
    const auto before = cache_.stats().pos_embed_recomputations;
    pos = cache_.get_pos_embed(precision);
    tm.transform_interpolations +=
        static_cast<std::int64_t>(cache_.stats().pos_embed_recomputations - before);
  }
  tm.transform_s += seconds_since(t);

  auto encode = [&] {
    if (!flags.reuse_pos_embed) {
      const auto tp = Clock::now();
      pos = cache_.compute_pos_embed(precision);
      ++tm.transform_interpolations;
      tm.transform_s += seconds_since(tp);
    }
    const auto te = Clock::now();
    std::int64_t blocks = 0;
    ActivationSet acts =
        encode_image(pixels, model.vision, cfg, flags.truncate_encoder, pos, &blocks, frame);
    cache_.note_image_encoder(blocks);
    tm.encode_s += seconds_since(te);
    return acts;
  };

  ActivationSet shared;
  if (flags.share_activations) shared = encode();

  std::vector<Tensor> maps;
  for (const auto& prompt : prompts.prompts()) {
    ActivationSet own;
    if (!flags.share_activations) own = encode();
    const ActivationSet& acts = flags.share_activations ? shared : own;

    t = Clock::now();
    Tensor gamma;
    Tensor beta;
    if (flags.reuse_prompt) {
      const auto cond = cache_.get_or_compute_conditional(prompt, precision);
      gamma = cast(cond->gamma, precision);
      beta = cast(cond->beta, precision);
    } else {
      const CachedConditional cond = compute_conditional(prompt, model, &cache_.constants());
      cache_.note_text_encoder();
      gamma = cast(cond.gamma, precision);
      beta = cast(cond.beta, precision);
    }
    tm.encode_s += seconds_since(t);

    t = Clock::now();
    const Tensor logits = decode(acts, gamma, beta, model.decoder);
    cache_.note_decoder();
    maps.push_back(probability_stage(logits));
    tm.decode_s += seconds_since(t);
  }
  FusedHeatmap out = finish(std::move(maps), tm);
  out.timing.total_s = seconds_since(frame_start);
  return out;
}

}  // namespace reuseg
