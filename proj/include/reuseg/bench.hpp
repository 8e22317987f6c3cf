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

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "reuseg/pipeline.hpp"

namespace reuseg {

// Metrics over [S x S] maps. Both maps are binarized with value > threshold.

/// Percentage of pixels whose binarized labels agree.
double accuracy(const Tensor& a, const Tensor& truth, double threshold = 0.5);
/// Mean of positive-class and negative-class IoU, in percent. A class absent
/// from both maps scores 1, absent from exactly one scores 0.
double miou(const Tensor& a, const Tensor& truth, double threshold = 0.5);
/// Percentage of truth-positive pixels also positive in `a`; 100 when the
/// truth has no positives.
double recall(const Tensor& a, const Tensor& truth, double threshold = 0.5);
/// 100 * opt_hz / base_hz.
double speedup(double base_hz, double opt_hz);

struct NoiseSpec {
  enum class Kind { None, Gaussian, SaltPepper };
  Kind kind = Kind::None;
  /// Gaussian sigma in 8-bit intensity units, or salt-and-pepper fraction.
  double amount = 0.0;
  std::uint64_t seed = 0;

  /// "none", "gaussian:<sigma>", "saltpepper:<p>".
  static NoiseSpec parse(std::string_view text, std::uint64_t seed = 0);
  std::string str() const;
  void validate() const;
};

RgbImage add_noise(const RgbImage& image, const NoiseSpec& spec);

/// Procedural aerial-like frames: multi-octave value noise with rectangles,
/// discs and road strips. Deterministic for a seed.
RgbImage synth_image(std::int64_t size, std::uint64_t seed);
std::vector<RgbImage> synth_images(std::int64_t count, std::int64_t size, std::uint64_t seed);
/// Writes frame_0000.ppm ... into `dir`, returning the paths.
std::vector<std::filesystem::path> synth_corpus(const std::filesystem::path& dir,
                                                std::int64_t count, std::int64_t size,
                                                std::uint64_t seed);
/// A directory of *.ppm (sorted) or a single .ppm file.
std::vector<RgbImage> load_corpus(const std::filesystem::path& path);

struct PresetReport {
  std::string name;
  OptimizationFlags flags;
  double mean_duration_s = 0.0;
  double std_duration_s = 0.0;
  double hz = 0.0;
  double speedup_pct = 0.0;
  double mean_accuracy_pct = 0.0;
  double std_accuracy_pct = 0.0;
  double miou_pct = 0.0;
  double std_miou_pct = 0.0;
  double mean_recall_pct = 0.0;
  double mean_transform_s = 0.0;
  double mean_encode_s = 0.0;
  double mean_decode_s = 0.0;
  double mean_fuse_s = 0.0;
  double max_abs_diff = 0.0;
  /// Per-frame work counts after warm-up.
  double image_encoder_passes_per_frame = 0.0;
  double encoder_blocks_per_frame = 0.0;
  double text_encoder_passes_per_frame = 0.0;
  double decoder_passes_per_frame = 0.0;
  std::uint64_t pos_embed_recomputations = 0;
};

struct BenchReport {
  std::uint64_t seed = 0;
  std::int64_t frames = 0;
  std::int64_t P = 0;
  std::int64_t image_size = 0;
  std::int64_t input_size = 0;
  std::vector<std::string> preset_list;
  std::string machine_note;
  std::string noise;
  std::string fusion;
  double threshold = 0.5;
  std::vector<PresetReport> presets;

  const PresetReport& preset(std::string_view name) const;
  /// UTF-8 JSON; floats rounded to 6 significant digits.
  std::string to_json() const;
};

struct BenchOptions {
  std::vector<std::string> presets = {"original", "blabberseg"};
  /// Frames processed per preset; the first is warm-up and excluded from timing.
  std::int64_t frames = 11;
  std::vector<std::string> prompts = {"grass", "lawn", "flat", "park"};
  NoiseSpec noise;
  std::uint64_t seed = 42;
  FusionMode fusion = FusionMode::Mean;
  double threshold = 0.5;
  std::string machine_note;
};

/// Runs every preset over `frames` frames drawn cyclically from the corpus
/// and scores each fused map against the "original" preset on the same frame.
BenchReport run_benchmark(const std::vector<RgbImage>& corpus,
                          std::shared_ptr<const ModelSet> models, const BenchOptions& options);

}  // namespace reuseg
