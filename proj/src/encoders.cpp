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

#include "reuseg/encoders.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "reuseg/random.hpp"

namespace reuseg {

namespace {

bool is_word_byte(unsigned char c) {
  return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c >= 0x80;
}

}  // namespace

TokenSequence tokenize(std::string_view prompt, const ModelConfig& config) {
  if (prompt.size() > kMaxPromptChars) {
    throw InputError("prompt longer than " + std::to_string(kMaxPromptChars) + " characters");
  }
  const auto buckets = static_cast<std::uint64_t>(config.vocab_size - 2);
  std::vector<std::int64_t> words;
  std::string word;
  auto flush = [&] {
    if (word.empty()) return;
    words.push_back(2 + static_cast<std::int64_t>(fnv1a64(word.data(), word.size()) % buckets));
    word.clear();
  };
  for (char ch : prompt) {
    auto c = static_cast<unsigned char>(ch);
    if (c >= 'A' && c <= 'Z') c = static_cast<unsigned char>(c - 'A' + 'a');
    if (is_word_byte(c)) {
      word.push_back(static_cast<char>(c));
    } else {
      flush();
    }
  }
  flush();

  const auto room = static_cast<std::size_t>(config.context_length - 2);
  if (words.size() > room) words.resize(room);
  TokenSequence seq;
  seq.ids.reserve(words.size() + 2);
  seq.ids.push_back(kStartToken);
  seq.ids.insert(seq.ids.end(), words.begin(), words.end());
  seq.ids.push_back(kEndToken);
  seq.eot_index = static_cast<std::int64_t>(seq.ids.size()) - 1;
  return seq;
}

PromptTokenTable PromptTokenTable::parse(std::string_view text) {
  PromptTokenTable table;
  try {
    const auto j = nlohmann::json::parse(text);
    table.context_length = j.at("context_length").get<std::int64_t>();
    table.vocab_size = j.at("vocab_size").get<std::int64_t>();
    for (const auto& [prompt, entry] : j.at("prompts").items()) {
      TokenSequence seq;
      seq.ids = entry.at("ids").get<std::vector<std::int64_t>>();
      seq.eot_index = entry.at("eot_index").get<std::int64_t>();
      if (seq.eot_index < 0 || seq.eot_index >= static_cast<std::int64_t>(seq.ids.size())) {
        throw InputError("prompt token table: eot_index out of range for '" + prompt + "'");
      }
      table.prompts.emplace(prompt, std::move(seq));
    }
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("prompt token table: ") + e.what());
  }
  return table;
}

PromptTokenTable PromptTokenTable::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot read prompt token table " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

std::string PromptTokenTable::to_json() const {
  nlohmann::json j;
  j["context_length"] = context_length;
  j["vocab_size"] = vocab_size;
  j["prompts"] = nlohmann::json::object();
  for (const auto& [prompt, seq] : prompts) {
    j["prompts"][prompt] = {{"ids", seq.ids}, {"eot_index", seq.eot_index}};
  }
  return j.dump();
}

void PromptTokenTable::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  out << to_json();
  if (!out) throw OutputError("cannot write prompt token table " + path.string());
}

void PromptTokenTable::check(const ModelConfig& config) const {
  if (context_length != config.context_length || vocab_size != config.vocab_size) {
    throw ConfigError("prompt token table built for context " + std::to_string(context_length) +
                      " / vocab " + std::to_string(vocab_size) + ", model has " +
                      std::to_string(config.context_length) + " / " +
                      std::to_string(config.vocab_size));
  }
  for (const auto& [prompt, seq] : prompts) {
    if (static_cast<std::int64_t>(seq.ids.size()) > context_length) {
      throw ConfigError("prompt token table: '" + prompt + "' exceeds the context length");
    }
  }
}

const TokenSequence* PromptTokenTable::find(std::string_view prompt) const {
  if (auto it = prompts.find(std::string(prompt)); it != prompts.end()) return &it->second;
  std::string lower(prompt);
  std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) {
    return static_cast<char>(c >= 'A' && c <= 'Z' ? c - 'A' + 'a' : c);
  });
  if (auto it = prompts.find(lower); it != prompts.end()) return &it->second;
  return nullptr;
}

VisionWeights VisionWeights::from_store(const WeightStore& s) {
  VisionWeights w;
  w.patch_weight = s.at("vision.patch_embed.weight");
  w.patch_bias = s.at("vision.patch_embed.bias");
  w.class_embed = s.at("vision.class_embed");
  w.pos_embed = s.at("vision.pos_embed");
  w.ln_pre_gamma = s.at("vision.ln_pre.gamma");
  w.ln_pre_beta = s.at("vision.ln_pre.beta");
  for (std::int64_t i = 0; i < s.config.vision_layers; ++i) {
    w.blocks.push_back(BlockWeights::from_store(s, "vision.blocks." + std::to_string(i) + "."));
  }
  return w;
}

TextWeights TextWeights::from_store(const WeightStore& s) {
  TextWeights w;
  w.token_embed = s.at("text.token_embed");
  w.pos_embed = s.at("text.pos_embed");
  for (std::int64_t i = 0; i < s.config.text_layers; ++i) {
    w.blocks.push_back(BlockWeights::from_store(s, "text.blocks." + std::to_string(i) + "."));
  }
  w.ln_final_gamma = s.at("text.ln_final.gamma");
  w.ln_final_beta = s.at("text.ln_final.beta");
  w.projection = s.at("text.projection");
  return w;
}

Tensor encode_text(const TokenSequence& tokens, const TextWeights& w, const ModelConfig& config,
                   ConstantPool* pool) {
  const auto t = static_cast<std::int64_t>(tokens.ids.size());
  if (t < 2 || t > config.context_length) {
    throw InputError("token sequence length " + std::to_string(t) + " outside [2, " +
                     std::to_string(config.context_length) + "]");
  }
  if (tokens.eot_index < 0 || tokens.eot_index >= t) {
    throw InputError("eot_index out of range");
  }
  const std::int64_t d = config.text_dim;
  std::vector<float> embed(static_cast<std::size_t>(t * d));
  for (std::int64_t i = 0; i < t; ++i) {
    const std::int64_t id = tokens.ids[static_cast<std::size_t>(i)];
    if (id < 0 || id >= config.vocab_size) {
      throw InputError("token id " + std::to_string(id) + " outside vocabulary of " +
                       std::to_string(config.vocab_size));
    }
    std::copy_n(w.token_embed.ptr() + id * d, d, embed.data() + i * d);
  }
  Tensor x({t, d}, std::move(embed), w.token_embed.dtype());
  std::vector<float> pos(w.pos_embed.ptr(), w.pos_embed.ptr() + t * d);
  x = add(x, Tensor({t, d}, std::move(pos), w.pos_embed.dtype()));

  std::shared_ptr<const Tensor> pooled;
  if (pool) pooled = pool->causal_mask(t);
  for (const auto& block : w.blocks) {
    x = transformer_block(x, block, static_cast<int>(config.text_heads), MlpActivation::QuickGelu,
                          true, pooled.get());
  }
  x = layer_norm(x, w.ln_final_gamma, w.ln_final_beta, kLayerNormEps);
  std::vector<float> eot(x.ptr() + tokens.eot_index * d, x.ptr() + (tokens.eot_index + 1) * d);
  return linear(Tensor({d}, std::move(eot), x.dtype()), w.projection);
}

Tensor interpolate_pos_embed(const Tensor& native, std::int64_t target_grid) {
  if (target_grid < 1) throw ConfigError("target grid must be >= 1");
  if (native.rank() != 2 || native.dim(0) < 2) {
    throw DimensionError("positional embedding must be [(1 + g^2) x D], got " +
                         shape_str(native.shape()));
  }
  const std::int64_t d = native.dim(1);
  const std::int64_t cells = native.dim(0) - 1;
  const auto g = static_cast<std::int64_t>(std::llround(std::sqrt(static_cast<double>(cells))));
  if (g * g != cells) {
    throw DimensionError("positional embedding grid rows " + std::to_string(cells) +
                         " are not a perfect square");
  }
  if (g == target_grid) return native;

  // [g^2 x D] token rows -> [D x g x g] channel planes.
  std::vector<float> planes(static_cast<std::size_t>(d * cells));
  for (std::int64_t r = 0; r < cells; ++r) {
    for (std::int64_t c = 0; c < d; ++c) planes[c * cells + r] = native.ptr()[(r + 1) * d + c];
  }
  const Tensor resized =
      bilinear_resize(Tensor({d, g, g}, std::move(planes), native.dtype()), target_grid, target_grid);

  const std::int64_t out_cells = target_grid * target_grid;
  std::vector<float> out(static_cast<std::size_t>((1 + out_cells) * d));
  std::copy_n(native.ptr(), d, out.data());
  for (std::int64_t r = 0; r < out_cells; ++r) {
    for (std::int64_t c = 0; c < d; ++c) out[(r + 1) * d + c] = resized.ptr()[c * out_cells + r];
  }
  return Tensor({1 + out_cells, d}, std::move(out), native.dtype());
}

bool ActivationSet::bitwise_equal(const ActivationSet& other) const {
  if (layers != other.layers || grid != other.grid ||
      activations.size() != other.activations.size()) {
    return false;
  }
  for (std::size_t i = 0; i < activations.size(); ++i) {
    if (!activations[i].bitwise_equal(other.activations[i])) return false;
  }
  return true;
}

ActivationSet encode_image(const Tensor& image, const VisionWeights& w, const ModelConfig& config,
                           bool truncate, const Tensor& pos_embed, std::int64_t* blocks_executed,
                           std::uint64_t frame_id) {
  const std::int64_t s = config.image_size;
  if (image.rank() != 3 || image.dim(0) != 3 || image.dim(1) != s || image.dim(2) != s) {
    throw DimensionError("encode_image expects [3 x " + std::to_string(s) + " x " +
                         std::to_string(s) + "], got " + shape_str(image.shape()));
  }
  const std::int64_t d = config.vision_dim;
  if (pos_embed.rank() != 2 || pos_embed.dim(0) != config.grid_tokens() || pos_embed.dim(1) != d) {
    throw DimensionError("positional embedding " + shape_str(pos_embed.shape()) +
                         " does not match " + std::to_string(config.grid_tokens()) + " tokens");
  }
  if (static_cast<std::int64_t>(w.blocks.size()) < config.vision_layers) {
    throw ConfigError("vision weights hold fewer blocks than vision_layers");
  }

  const Tensor patches = patch_embed(image, w.patch_weight, w.patch_bias, config.patch);
  const std::int64_t cells = patches.dim(0);
  std::vector<float> tokens(static_cast<std::size_t>((1 + cells) * d));
  std::copy_n(w.class_embed.ptr(), d, tokens.data());
  std::copy_n(patches.ptr(), cells * d, tokens.data() + d);
  Tensor x({1 + cells, d}, std::move(tokens), patches.dtype());
  x = add(x, pos_embed);
  x = layer_norm(x, w.ln_pre_gamma, w.ln_pre_beta, kLayerNormEps);

  ActivationSet acts;
  acts.frame_id = frame_id;
  acts.grid = config.grid();
  acts.layers = config.extract_layers;
  const std::int64_t depth = truncate ? config.truncated_layers() : config.vision_layers;
  for (std::int64_t i = 0; i < depth; ++i) {
    x = transformer_block(x, w.blocks[static_cast<std::size_t>(i)],
                          static_cast<int>(config.vision_heads), MlpActivation::QuickGelu);
    if (blocks_executed) ++*blocks_executed;
    if (std::binary_search(config.extract_layers.begin(), config.extract_layers.end(), i)) {
      acts.activations.push_back(x);
    }
  }
  return acts;
}

}  // namespace reuseg
