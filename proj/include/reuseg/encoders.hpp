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
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "reuseg/config.hpp"
#include "reuseg/constant_pool.hpp"
#include "reuseg/transformer.hpp"

namespace reuseg {

inline constexpr std::int64_t kStartToken = 0;
inline constexpr std::int64_t kEndToken = 1;
inline constexpr std::size_t kMaxPromptChars = 256;

struct TokenSequence {
  std::vector<std::int64_t> ids;
  std::int64_t eot_index = 0;

  bool operator==(const TokenSequence&) const = default;
};

/// Built-in hash tokenizer: lowercase, split on ASCII non-alphanumerics, map
/// each word to 2 + fnv1a64(word) % (vocab_size - 2), frame with start/end
/// ids and truncate to the context length keeping the end id. Not
/// compatible with pretrained vocabularies.
TokenSequence tokenize(std::string_view prompt, const ModelConfig& config);

/// Pre-tokenized prompts for pretrained vocabularies, as written by the
/// checkpoint exporter:
///   {"context_length": N, "vocab_size": V,
///    "prompts": {"<prompt>": {"ids": [...], "eot_index": k}, ...}}
struct PromptTokenTable {
  std::int64_t context_length = 0;
  std::int64_t vocab_size = 0;
  std::map<std::string, TokenSequence> prompts;

  static PromptTokenTable parse(std::string_view json);
  static PromptTokenTable load(const std::filesystem::path& path);
  std::string to_json() const;
  void save(const std::filesystem::path& path) const;

  /// ConfigError when the table was built for another context or vocabulary.
  void check(const ModelConfig& config) const;
  /// Exact prompt first, then its lowercased form; nullptr when absent.
  const TokenSequence* find(std::string_view prompt) const;
};

struct VisionWeights {
  Tensor patch_weight, patch_bias;
  Tensor class_embed;
  /// Native positional embedding [(1 + native_grid^2) x vision_dim].
  Tensor pos_embed;
  Tensor ln_pre_gamma, ln_pre_beta;
  std::vector<BlockWeights> blocks;

  static VisionWeights from_store(const WeightStore& store);
};

struct TextWeights {
  Tensor token_embed;
  Tensor pos_embed;
  std::vector<BlockWeights> blocks;
  Tensor ln_final_gamma, ln_final_beta;
  Tensor projection;

  static TextWeights from_store(const WeightStore& store);
};

/// Conditional embedding [embed_dim] for one prompt: causal pre-norm text
/// transformer, final norm, hidden state at the end token, projection.
/// The causal mask comes from `pool` when given.
Tensor encode_text(const TokenSequence& tokens, const TextWeights& weights,
                   const ModelConfig& config, ConstantPool* pool = nullptr);

/// Resizes the grid part of a [(1 + g^2) x D] positional embedding to
/// target_grid x target_grid as a D-channel image; the CLS row is copied.
Tensor interpolate_pos_embed(const Tensor& native, std::int64_t target_grid);

/// Token-sequence activations of one frame at the configured extraction depths.
struct ActivationSet {
  std::uint64_t frame_id = 0;
  std::vector<std::int64_t> layers;
  /// One [(1 + grid^2) x vision_dim] tensor per extract layer, ascending depth,
  /// CLS token first.
  std::vector<Tensor> activations;
  std::int64_t grid = 0;

  bool bitwise_equal(const ActivationSet& other) const;
};

/// Vision transformer forward pass recording the post-block hidden state of
/// every extract layer. With `truncate` only blocks 0..max(extract_layers)
/// run. `blocks_executed`, when given, is incremented once per block run.
ActivationSet encode_image(const Tensor& image, const VisionWeights& weights,
                           const ModelConfig& config, bool truncate, const Tensor& pos_embed,
                           std::int64_t* blocks_executed = nullptr, std::uint64_t frame_id = 0);

}  // namespace reuseg
