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

#include "reuseg/config.hpp"

#include <algorithm>

#include <json.hpp>

#include "reuseg/tensor.hpp"

namespace reuseg {

namespace {

void check(bool ok, const std::string& what) {
  if (!ok) throw ConfigError("invalid model config: " + what);
}

}  // namespace

std::int64_t ModelConfig::truncated_layers() const {
  if (extract_layers.empty()) return 0;
  return *std::max_element(extract_layers.begin(), extract_layers.end()) + 1;
}

void ModelConfig::validate() const {
  check(patch > 0 && image_size > 0, "image_size and patch must be positive");
  check(image_size % patch == 0, "image_size must be divisible by patch");
  check(patch == kHeadStride * kHeadStride, "patch must equal the decoder head upsampling (16)");
  check(native_grid >= 1, "native_grid must be >= 1");
  check(vision_layers >= 1 && text_layers >= 1, "layer counts must be >= 1");
  check(vision_heads >= 1 && vision_dim % vision_heads == 0,
        "vision_dim must be divisible by vision_heads");
  check(text_heads >= 1 && text_dim % text_heads == 0, "text_dim must be divisible by text_heads");
  check(decoder_heads >= 1 && reduce_dim % decoder_heads == 0,
        "reduce_dim must be divisible by decoder_heads");
  check(reduce_dim >= 2 && reduce_dim % 2 == 0, "reduce_dim must be even");
  check(!extract_layers.empty(), "extract_layers must not be empty");
  check(std::is_sorted(extract_layers.begin(), extract_layers.end()) &&
            std::adjacent_find(extract_layers.begin(), extract_layers.end()) ==
                extract_layers.end(),
        "extract_layers must be strictly ascending");
  check(extract_layers.front() >= 0, "extract_layers must be non-negative");
  check(extract_layers.back() < vision_layers, "max(extract_layers) must be < vision_layers");
  check(static_cast<std::int64_t>(extract_layers.size()) == decoder_blocks,
        "|extract_layers| must equal decoder_blocks");
  check(context_length >= 2, "context_length must be >= 2");
  check(vocab_size > 2, "vocab_size must be > 2");
  check(embed_dim >= 1 && vision_dim >= 1 && text_dim >= 1, "widths must be positive");
}

std::string ModelConfig::to_json() const {
  nlohmann::json j = {
      {"image_size", image_size},       {"patch", patch},
      {"native_grid", native_grid},     {"vision_layers", vision_layers},
      {"vision_dim", vision_dim},       {"vision_heads", vision_heads},
      {"extract_layers", extract_layers}, {"text_layers", text_layers},
      {"text_dim", text_dim},           {"text_heads", text_heads},
      {"context_length", context_length}, {"vocab_size", vocab_size},
      {"embed_dim", embed_dim},         {"reduce_dim", reduce_dim},
      {"decoder_blocks", decoder_blocks}, {"decoder_heads", decoder_heads},
  };
  return j.dump();
}

ModelConfig ModelConfig::from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("model config is not valid JSON: ") + e.what());
  }
  ModelConfig c;
  auto get = [&](const char* key, auto& field) {
    if (!j.contains(key)) throw ConfigError(std::string("model config missing key '") + key + "'");
    try {
      j.at(key).get_to(field);
    } catch (const nlohmann::json::exception&) {
      throw ConfigError(std::string("model config key '") + key + "' has the wrong type");
    }
  };
  get("image_size", c.image_size);
  get("patch", c.patch);
  get("native_grid", c.native_grid);
  get("vision_layers", c.vision_layers);
  get("vision_dim", c.vision_dim);
  get("vision_heads", c.vision_heads);
  get("extract_layers", c.extract_layers);
  get("text_layers", c.text_layers);
  get("text_dim", c.text_dim);
  get("text_heads", c.text_heads);
  get("context_length", c.context_length);
  get("vocab_size", c.vocab_size);
  get("embed_dim", c.embed_dim);
  get("reduce_dim", c.reduce_dim);
  get("decoder_blocks", c.decoder_blocks);
  get("decoder_heads", c.decoder_heads);
  return c;
}

ModelConfig ModelConfig::tiny() {
  return ModelConfig{};
}

ModelConfig ModelConfig::base() {
  ModelConfig c;
  c.image_size = 352;
  c.patch = 16;
  c.native_grid = 14;
  c.vision_layers = 12;
  c.vision_dim = 768;
  c.vision_heads = 12;
  c.extract_layers = {3, 7, 9};
  c.text_layers = 12;
  c.text_dim = 512;
  c.text_heads = 8;
  c.context_length = 77;
  c.vocab_size = 49408;
  c.embed_dim = 512;
  c.reduce_dim = 64;
  c.decoder_blocks = 3;
  c.decoder_heads = 4;
  return c;
}

}  // namespace reuseg
