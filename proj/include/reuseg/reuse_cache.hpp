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

#include <atomic>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <string>
#include <utility>

#include "reuseg/constant_pool.hpp"
#include "reuseg/model.hpp"

namespace reuseg {

/// Everything derived from one prompt that the decoder needs.
/// `c`, `gamma` and `beta` are held in F32; for an F16 entry the values lie
/// on the half grid and are cast back when used.
struct CachedConditional {
  std::string prompt;
  DType precision = DType::F32;
  TokenSequence tokens;
  Tensor c;
  Tensor gamma;
  Tensor beta;
};

struct CacheStats {
  std::uint64_t text_encoder_invocations = 0;
  std::uint64_t image_encoder_invocations = 0;
  std::uint64_t encoder_blocks_executed = 0;
  std::uint64_t decoder_invocations = 0;
  std::uint64_t pos_embed_recomputations = 0;
  std::uint64_t hits = 0;
  std::uint64_t misses = 0;

  std::uint64_t lookups() const { return hits + misses; }
  CacheStats operator-(const CacheStats& earlier) const;
};

/// Uncached computation of a prompt's conditional and FiLM vectors.
CachedConditional compute_conditional(const std::string& prompt, const Model& model,
                                      ConstantPool* pool = nullptr);

/// Keyed memo of per-prompt conditionals and the interpolated positional
/// embedding, plus the work counters the pipeline reports into.
///
/// Conditionals are keyed by the exact prompt string within a precision.
/// The interpolated embedding is computed once in F32 and cast on use.
class ReuseCache {
 public:
  explicit ReuseCache(std::shared_ptr<const ModelSet> models);

  std::shared_ptr<const CachedConditional> get_or_compute_conditional(
      const std::string& prompt, DType precision = DType::F32);
  Tensor get_pos_embed(DType precision = DType::F32);

  /// Fresh interpolation of the native positional embedding, counted as a
  /// recomputation; used by paths that do not reuse it.
  Tensor compute_pos_embed(DType precision = DType::F32);

  void reset();
  CacheStats stats() const;
  std::size_t conditional_count() const;
  ConstantPool& constants() { return pool_; }

  void note_text_encoder() { ++text_encoder_invocations_; }
  void note_image_encoder(std::int64_t blocks);
  void note_decoder() { ++decoder_invocations_; }

 private:
  std::shared_ptr<const ModelSet> models_;
  ConstantPool pool_;

  mutable std::shared_mutex mutex_;
  std::map<std::pair<DType, std::string>, std::shared_ptr<const CachedConditional>> conditionals_;
  std::optional<Tensor> pos_embed_;
  std::map<DType, Tensor> pos_embed_cast_;

  std::atomic<std::uint64_t> text_encoder_invocations_{0};
  std::atomic<std::uint64_t> image_encoder_invocations_{0};
  std::atomic<std::uint64_t> encoder_blocks_executed_{0};
  std::atomic<std::uint64_t> decoder_invocations_{0};
  std::atomic<std::uint64_t> pos_embed_recomputations_{0};
  std::atomic<std::uint64_t> hits_{0};
  std::atomic<std::uint64_t> misses_{0};
};

}  // namespace reuseg
