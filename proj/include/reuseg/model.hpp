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

#include <memory>
#include <mutex>

#include "reuseg/decoder.hpp"
#include "reuseg/encoders.hpp"
#include "reuseg/weights.hpp"

namespace reuseg {

/// Typed encoder and decoder weights in one precision.
struct Model {
  ModelConfig config;
  DType dtype = DType::F32;
  VisionWeights vision;
  TextWeights text;
  DecoderWeights decoder;
  std::shared_ptr<const PromptTokenTable> tokens;

  static Model from_store(const WeightStore& store, DType dtype,
                          std::shared_ptr<const PromptTokenTable> tokens = nullptr);

  /// Token table entry for the prompt when present, else the hash tokenizer.
  TokenSequence tokenize(std::string_view prompt) const;
};

/// Immutable weights shared by engines. The F32 model is built eagerly, the
/// F16 cast on first use.
class ModelSet {
 public:
  explicit ModelSet(WeightStore store, std::shared_ptr<const PromptTokenTable> tokens = nullptr);

  const ModelConfig& config() const { return store_.config; }
  const WeightStore& store() const { return store_; }
  const Model& get(DType dtype) const;

 private:
  WeightStore store_;
  std::shared_ptr<const PromptTokenTable> tokens_;
  Model f32_;
  mutable std::once_flag f16_once_;
  mutable std::unique_ptr<Model> f16_;
};

std::shared_ptr<const ModelSet> make_model_set(
    WeightStore store, std::shared_ptr<const PromptTokenTable> tokens = nullptr);

}  // namespace reuseg
