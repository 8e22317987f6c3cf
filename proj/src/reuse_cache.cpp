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

#include "reuseg/reuse_cache.hpp"

#include <mutex>

namespace reuseg {

CacheStats CacheStats::operator-(const CacheStats& e) const {
  CacheStats d;
  d.text_encoder_invocations = text_encoder_invocations - e.text_encoder_invocations;
  d.image_encoder_invocations = image_encoder_invocations - e.image_encoder_invocations;
  d.encoder_blocks_executed = encoder_blocks_executed - e.encoder_blocks_executed;
  d.decoder_invocations = decoder_invocations - e.decoder_invocations;
  d.pos_embed_recomputations = pos_embed_recomputations - e.pos_embed_recomputations;
  d.hits = hits - e.hits;
  d.misses = misses - e.misses;
  return d;
}

CachedConditional compute_conditional(const std::string& prompt, const Model& model,
                                      ConstantPool* pool) {
  CachedConditional out;
  out.prompt = prompt;
  out.precision = model.dtype;
  out.tokens = model.tokenize(prompt);
  const Tensor c = encode_text(out.tokens, model.text, model.config, pool);
  const FilmParams fp = film_params(c, model.decoder);
  out.c = cast(c, DType::F32);
  out.gamma = cast(fp.gamma, DType::F32);
  out.beta = cast(fp.beta, DType::F32);
  return out;
}

ReuseCache::ReuseCache(std::shared_ptr<const ModelSet> models) : models_(std::move(models)) {}

std::shared_ptr<const CachedConditional> ReuseCache::get_or_compute_conditional(
    const std::string& prompt, DType precision) {
  const auto key = std::make_pair(precision, prompt);
  {
    std::shared_lock lock(mutex_);
    if (auto it = conditionals_.find(key); it != conditionals_.end()) {
      ++hits_;
      return it->second;
    }
  }
  ++misses_;
  auto computed = std::make_shared<const CachedConditional>(
      compute_conditional(prompt, models_->get(precision), &pool_));
  ++text_encoder_invocations_;
  std::unique_lock lock(mutex_);
  // A racing miss may have inserted first; the first value wins.
  return conditionals_.try_emplace(key, std::move(computed)).first->second;
}

Tensor ReuseCache::compute_pos_embed(DType precision) {
  const ModelSet& m = *models_;
  Tensor interpolated =
      interpolate_pos_embed(m.get(DType::F32).vision.pos_embed, m.config().grid());
  ++pos_embed_recomputations_;
  return cast(interpolated, precision);
}

Tensor ReuseCache::get_pos_embed(DType precision) {
  {
    std::shared_lock lock(mutex_);
    if (auto it = pos_embed_cast_.find(precision); it != pos_embed_cast_.end()) return it->second;
  }
  std::unique_lock lock(mutex_);
  if (auto it = pos_embed_cast_.find(precision); it != pos_embed_cast_.end()) return it->second;
  if (!pos_embed_) {
    const ModelSet& m = *models_;
    pos_embed_ = interpolate_pos_embed(m.get(DType::F32).vision.pos_embed, m.config().grid());
    ++pos_embed_recomputations_;
  }
  return pos_embed_cast_.emplace(precision, cast(*pos_embed_, precision)).first->second;
}

void ReuseCache::reset() {
  std::unique_lock lock(mutex_);
  conditionals_.clear();
  pos_embed_.reset();
  pos_embed_cast_.clear();
  pool_.clear();
  text_encoder_invocations_ = 0;
  image_encoder_invocations_ = 0;
  encoder_blocks_executed_ = 0;
  decoder_invocations_ = 0;
  pos_embed_recomputations_ = 0;
  hits_ = 0;
  misses_ = 0;
}

CacheStats ReuseCache::stats() const {
  CacheStats s;
  s.text_encoder_invocations = text_encoder_invocations_;
  s.image_encoder_invocations = image_encoder_invocations_;
  s.encoder_blocks_executed = encoder_blocks_executed_;
  s.decoder_invocations = decoder_invocations_;
  s.pos_embed_recomputations = pos_embed_recomputations_;
  s.hits = hits_;
  s.misses = misses_;
  return s;
}

std::size_t ReuseCache::conditional_count() const {
  std::shared_lock lock(mutex_);
  return conditionals_.size();
}

void ReuseCache::note_image_encoder(std::int64_t blocks) {
  ++image_encoder_invocations_;
  encoder_blocks_executed_ += static_cast<std::uint64_t>(blocks);
}

}  // namespace reuseg
