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

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "reuseg/model.hpp"
#include "reuseg/reuse_cache.hpp"

namespace reuseg {

/// 8-bit interleaved RGB image, row-major.
struct RgbImage {
  std::int64_t width = 0;
  std::int64_t height = 0;
  std::vector<std::uint8_t> pixels;  // width * height * 3

  bool operator==(const RgbImage&) const = default;
};

/// Binary PPM: "P6", ASCII width/height/maxval (255 only), raw RGB.
RgbImage read_ppm(const std::filesystem::path& path);
void write_ppm(const std::filesystem::path& path, const RgbImage& image);
std::vector<std::uint8_t> encode_ppm(const RgbImage& image);
RgbImage decode_ppm(const std::vector<std::uint8_t>& bytes, const std::string& source = "<memory>");
/// Grayscale PGM (P5) of a [H x W] map in [0, 1].
void write_pgm(const std::filesystem::path& path, const Tensor& map);

struct OptimizationFlags {
  DType precision = DType::F32;
  bool reuse_prompt = false;
  bool reuse_pos_embed = false;
  bool share_activations = false;
  bool truncate_encoder = false;

  /// original, fp, rpe, fp-rpe, fp-rppe, blabberseg. Throws ConfigError.
  static OptimizationFlags preset(std::string_view name);
  bool operator==(const OptimizationFlags&) const = default;
};

const std::vector<std::string>& preset_names();

/// Ordered, non-empty list of distinct prompts.
class PromptSet {
 public:
  explicit PromptSet(std::vector<std::string> prompts);
  /// Comma-separated list; surrounding whitespace is trimmed.
  static PromptSet parse(std::string_view list);

  const std::vector<std::string>& prompts() const { return prompts_; }
  std::size_t size() const { return prompts_.size(); }

 private:
  std::vector<std::string> prompts_;
};

enum class FusionMode { Mean, Min, Max };
FusionMode parse_fusion(std::string_view name);

struct PipelineOptions {
  std::array<float, 3> mean = {0.48145466f, 0.4578275f, 0.40821073f};
  std::array<float, 3> std = {0.26862954f, 0.26130258f, 0.27577711f};
  FusionMode fusion = FusionMode::Mean;
  int blur_kernel = 15;
  /// Non-positive selects 7 * image_size / 352.
  float blur_sigma = 0.0f;

  float resolved_sigma(std::int64_t image_size) const;
};

struct StageTimings {
  double transform_s = 0.0;
  double encode_s = 0.0;
  double decode_s = 0.0;
  double fuse_s = 0.0;
  double total_s = 0.0;
  /// Positional-embedding interpolations performed inside the transform stage.
  std::int64_t transform_interpolations = 0;
};

struct FusedHeatmap {
  Tensor per_prompt;  // [P x S x S] probabilities
  Tensor fused;       // [S x S] fused and blurred
  StageTimings timing;
};

/// Bytes to [0, 1], bilinear resize to S x S, per-channel standardization.
/// Returns F32 [3 x S x S].
Tensor preprocess(const RgbImage& image, std::int64_t size, const PipelineOptions& options = {});

/// Two-way softmax of each logit against an implicit zero logit.
Tensor prompt_probability(const Tensor& logits);
/// Per-pixel reduction of [P x S x S] to [S x S].
Tensor fuse(const Tensor& maps, FusionMode mode = FusionMode::Mean);
Tensor postprocess(const Tensor& fused, int kernel_size, float sigma);

/// Per-frame orchestration of encoders, caches and decoder. One frame in
/// flight per engine; engines may share one ModelSet.
class Engine {
 public:
  explicit Engine(std::shared_ptr<const ModelSet> models, PipelineOptions options = {});

  /// Oracle path: every prompt recomputes the full image encoding, a fresh
  /// positional-embedding interpolation and its text encoding. Never reads or
  /// writes the reuse cache.
  FusedHeatmap segment_naive(const RgbImage& image, const PromptSet& prompts,
                             DType precision = DType::F32);

  FusedHeatmap segment_optimized(const RgbImage& image, const PromptSet& prompts,
                                 const OptimizationFlags& flags);

  FusedHeatmap segment(const RgbImage& image, const PromptSet& prompts,
                       const OptimizationFlags& flags, bool naive);

  const ModelConfig& config() const { return models_->config(); }
  const PipelineOptions& options() const { return options_; }
  ReuseCache& cache() { return cache_; }
  CacheStats stats() const { return cache_.stats(); }
  void reset() { cache_.reset(); }

 private:
  Tensor probability_stage(const Tensor& logits) const;
  FusedHeatmap finish(std::vector<Tensor> maps, StageTimings timing) const;

  std::shared_ptr<const ModelSet> models_;
  PipelineOptions options_;
  ReuseCache cache_;
  std::uint64_t next_frame_ = 0;
};

}  // namespace reuseg
