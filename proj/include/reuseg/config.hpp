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
#include <string>
#include <vector>

namespace reuseg {

/// Architecture hyperparameters shared by the encoders, decoder and the
/// weight container.
struct ModelConfig {
  std::int64_t image_size = 96;
  std::int64_t patch = 16;
  /// Side of the positional-embedding grid stored with the weights; it is
  /// interpolated to image_size / patch before use.
  std::int64_t native_grid = 7;
  std::int64_t vision_layers = 12;
  std::int64_t vision_dim = 48;
  std::int64_t vision_heads = 4;
  /// 0-based block indices whose post-block hidden states feed the decoder.
  std::vector<std::int64_t> extract_layers = {3, 7, 9};
  std::int64_t text_layers = 4;
  std::int64_t text_dim = 32;
  std::int64_t text_heads = 4;
  std::int64_t context_length = 16;
  std::int64_t vocab_size = 256;
  std::int64_t embed_dim = 32;
  std::int64_t reduce_dim = 16;
  std::int64_t decoder_blocks = 3;
  std::int64_t decoder_heads = 2;

  std::int64_t grid() const { return image_size / patch; }
  std::int64_t grid_tokens() const { return 1 + grid() * grid(); }
  std::int64_t native_tokens() const { return 1 + native_grid * native_grid; }
  /// Number of encoder blocks needed to reach the deepest extraction point.
  std::int64_t truncated_layers() const;

  /// Throws ConfigError naming the first violated constraint.
  void validate() const;

  std::string to_json() const;
  static ModelConfig from_json(const std::string& text);

  /// Desk-scale preset: image 96, twelve 48-wide vision blocks, tiny text tower.
  static ModelConfig tiny();
  /// CLIP ViT-B/16 shaped preset at the 352-pixel segmentation resolution.
  static ModelConfig base();

  bool operator==(const ModelConfig&) const = default;
};

/// Kernel (== stride) of each of the two transposed convolutions in the
/// decoder head; their product equals the patch size.
inline constexpr std::int64_t kHeadStride = 4;
inline constexpr float kLayerNormEps = 1e-5f;

}  // namespace reuseg
