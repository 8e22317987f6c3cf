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

#include "reuseg/model.hpp"

namespace reuseg {

Model Model::from_store(const WeightStore& store, DType dtype,
                        std::shared_ptr<const PromptTokenTable> tokens) {
  store.config.validate();
  if (tokens) tokens->check(store.config);
  const WeightStore cast = cast_store(store, dtype);
  Model m;
  m.config = store.config;
  m.dtype = dtype;
  m.vision = VisionWeights::from_store(cast);
  m.text = TextWeights::from_store(cast);
  m.decoder = DecoderWeights::from_store(cast);
  m.tokens = std::move(tokens);
  return m;
}

TokenSequence Model::tokenize(std::string_view prompt) const {
  if (tokens) {
    if (const TokenSequence* seq = tokens->find(prompt)) return *seq;
  }
  return reuseg::tokenize(prompt, config);
}

ModelSet::ModelSet(WeightStore store, std::shared_ptr<const PromptTokenTable> tokens)
    : store_(std::move(store)),
      tokens_(std::move(tokens)),
      f32_(Model::from_store(store_, DType::F32, tokens_)) {}

const Model& ModelSet::get(DType dtype) const {
  if (dtype == DType::F32) return f32_;
  std::call_once(f16_once_, [this] {
    f16_ = std::make_unique<Model>(Model::from_store(store_, DType::F16, tokens_));
  });
  return *f16_;
}

std::shared_ptr<const ModelSet> make_model_set(WeightStore store,
                                               std::shared_ptr<const PromptTokenTable> tokens) {
  return std::make_shared<const ModelSet>(std::move(store), std::move(tokens));
}

}  // namespace reuseg
