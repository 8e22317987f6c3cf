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

#include "reuseg/weights.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <set>

#include "reuseg/ops.hpp"
#include "reuseg/random.hpp"

namespace reuseg {

const Tensor& WeightStore::at(const std::string& name) const {
  auto it = tensors.find(name);
  if (it == tensors.end()) throw MissingParameterError("missing parameter '" + name + "'", name);
  return it->second;
}

std::int64_t WeightStore::parameter_count() const {
  std::int64_t n = 0;
  for (const auto& [name, t] : tensors) n += t.numel();
  return n;
}

bool WeightStore::bitwise_equal(const WeightStore& other) const {
  if (!(config == other.config) || tensors.size() != other.tensors.size()) return false;
  for (const auto& [name, t] : tensors) {
    auto it = other.tensors.find(name);
    if (it == other.tensors.end() || !t.bitwise_equal(it->second)) return false;
  }
  return true;
}

namespace {

void add_block(std::vector<ParameterSpec>& out, const std::string& prefix, std::int64_t d) {
  const std::int64_t hidden = 4 * d;
  out.push_back({prefix + "ln_1.gamma", {d}});
  out.push_back({prefix + "ln_1.beta", {d}});
  for (const char* p : {"q", "k", "v", "o"}) {
    out.push_back({prefix + "attn." + p + ".weight", {d, d}});
    out.push_back({prefix + "attn." + p + ".bias", {d}});
  }
  out.push_back({prefix + "ln_2.gamma", {d}});
  out.push_back({prefix + "ln_2.beta", {d}});
  out.push_back({prefix + "mlp.fc1.weight", {hidden, d}});
  out.push_back({prefix + "mlp.fc1.bias", {hidden}});
  out.push_back({prefix + "mlp.fc2.weight", {d, hidden}});
  out.push_back({prefix + "mlp.fc2.bias", {d}});
}

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

}  // namespace

std::vector<ParameterSpec> required_parameters(const ModelConfig& c) {
  c.validate();
  std::vector<ParameterSpec> out;
  const std::int64_t dv = c.vision_dim;
  out.push_back({"vision.patch_embed.weight", {dv, 3 * c.patch * c.patch}});
  out.push_back({"vision.patch_embed.bias", {dv}});
  out.push_back({"vision.class_embed", {dv}});
  out.push_back({"vision.pos_embed", {c.native_tokens(), dv}});
  out.push_back({"vision.ln_pre.gamma", {dv}});
  out.push_back({"vision.ln_pre.beta", {dv}});
  for (std::int64_t i = 0; i < c.vision_layers; ++i) {
    add_block(out, "vision.blocks." + std::to_string(i) + ".", dv);
  }

  const std::int64_t dt = c.text_dim;
  out.push_back({"text.token_embed", {c.vocab_size, dt}});
  out.push_back({"text.pos_embed", {c.context_length, dt}});
  for (std::int64_t i = 0; i < c.text_layers; ++i) {
    add_block(out, "text.blocks." + std::to_string(i) + ".", dt);
  }
  out.push_back({"text.ln_final.gamma", {dt}});
  out.push_back({"text.ln_final.beta", {dt}});
  out.push_back({"text.projection", {c.embed_dim, dt}});

  const std::int64_t r = c.reduce_dim;
  for (std::int64_t i = 0; i < c.decoder_blocks; ++i) {
    const std::string p = "decoder.reduce." + std::to_string(i) + ".";
    out.push_back({p + "weight", {r, dv}});
    out.push_back({p + "bias", {r}});
    add_block(out, "decoder.blocks." + std::to_string(i) + ".", r);
  }
  out.push_back({"decoder.film_mul.weight", {r, c.embed_dim}});
  out.push_back({"decoder.film_mul.bias", {r}});
  out.push_back({"decoder.film_add.weight", {r, c.embed_dim}});
  out.push_back({"decoder.film_add.bias", {r}});
  out.push_back({"decoder.head.0.weight", {r, r / 2, kHeadStride, kHeadStride}});
  out.push_back({"decoder.head.0.bias", {r / 2}});
  out.push_back({"decoder.head.1.weight", {r / 2, 1, kHeadStride, kHeadStride}});
  out.push_back({"decoder.head.1.bias", {1}});

  std::sort(out.begin(), out.end(),
            [](const ParameterSpec& a, const ParameterSpec& b) { return a.name < b.name; });
  return out;
}

WeightStore random_init(const ModelConfig& config, std::uint64_t seed) {
  WeightStore store;
  store.config = config;
  PortableRng rng(seed);
  for (const auto& spec : required_parameters(config)) {
    const auto n = static_cast<std::size_t>(shape_numel(spec.shape));
    std::vector<float> data(n, 0.0f);
    if (ends_with(spec.name, ".gamma")) {
      std::fill(data.begin(), data.end(), 1.0f);
    } else if (!ends_with(spec.name, ".bias") && !ends_with(spec.name, ".beta")) {
      for (auto& v : data) v = static_cast<float>(0.02 * rng.normal());
    }
    store.tensors.emplace(spec.name, Tensor(spec.shape, std::move(data)));
  }
  return store;
}

WeightStore cast_store(const WeightStore& store, DType dtype) {
  WeightStore out;
  out.config = store.config;
  for (const auto& [name, t] : store.tensors) out.tensors.emplace(name, cast(t, dtype));
  return out;
}

namespace {

class Writer {
 public:
  void bytes(const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    out_.insert(out_.end(), b, b + n);
  }
  template <typename T>
  void le(T v) {
    static_assert(std::is_unsigned_v<T>);
    for (std::size_t i = 0; i < sizeof(T); ++i) {
      out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
  }
  void str(const std::string& s) {
    le(static_cast<std::uint32_t>(s.size()));
    bytes(s.data(), s.size());
  }
  std::vector<std::uint8_t> take() { return std::move(out_); }

 private:
  std::vector<std::uint8_t> out_;
};

class Reader {
 public:
  explicit Reader(const std::vector<std::uint8_t>& in) : in_(in) {}

  /// `context` names what is being read for truncation errors.
  void bytes(void* p, std::size_t n, const std::string& context, const std::string& tensor = {}) {
    if (in_.size() - pos_ < n) {
      throw TruncationError("weight container truncated while reading " + context, tensor);
    }
    std::memcpy(p, in_.data() + pos_, n);
    pos_ += n;
  }
  template <typename T>
  T le(const std::string& context, const std::string& tensor = {}) {
    std::uint8_t buf[sizeof(T)];
    bytes(buf, sizeof(T), context, tensor);
    T v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(buf[i]) << (8 * i);
    return v;
  }
  std::string str(const std::string& context) {
    const auto n = le<std::uint32_t>(context);
    std::string s(n, '\0');
    bytes(s.data(), n, context);
    return s;
  }
  bool done() const { return pos_ == in_.size(); }

 private:
  const std::vector<std::uint8_t>& in_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> serialize(const WeightStore& store) {
  Writer w;
  w.bytes(kContainerMagic, sizeof(kContainerMagic));
  w.le(kContainerVersion);
  w.str(store.config.to_json());
  w.le(static_cast<std::uint32_t>(store.tensors.size()));
  for (const auto& [name, t] : store.tensors) {  // std::map iterates in sorted order
    w.str(name);
    w.le(static_cast<std::uint8_t>(t.dtype()));
    w.le(static_cast<std::uint8_t>(t.rank()));
    for (auto d : t.shape()) w.le(static_cast<std::uint64_t>(d));
    if (t.dtype() == DType::F16) {
      for (float v : t.data()) w.le(half_bits(v));
    } else {
      for (float v : t.data()) w.le(std::bit_cast<std::uint32_t>(v));
    }
  }
  return w.take();
}

WeightStore deserialize(const std::vector<std::uint8_t>& bytes) {
  Reader r(bytes);
  char magic[8];
  if (bytes.size() < sizeof(magic) ||
      std::memcmp(bytes.data(), kContainerMagic, sizeof(magic)) != 0) {
    throw MagicError("not a weight container: bad magic");
  }
  r.bytes(magic, sizeof(magic), "magic");
  const auto version = r.le<std::uint32_t>("version");
  if (version != kContainerVersion) {
    throw VersionError("unsupported weight container version " + std::to_string(version));
  }
  WeightStore store;
  store.config = ModelConfig::from_json(r.str("config"));
  store.config.validate();

  const auto count = r.le<std::uint32_t>("tensor count");
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::string header = "header of tensor #" + std::to_string(i);
    const std::string name = r.str(header);
    const auto dtype_tag = r.le<std::uint8_t>(header, name);
    if (dtype_tag > 1) {
      throw LoadError("tensor '" + name + "' has unknown dtype tag " + std::to_string(dtype_tag),
                      name);
    }
    const auto dtype = static_cast<DType>(dtype_tag);
    const auto rank = r.le<std::uint8_t>(header, name);
    Shape shape(rank);
    for (auto& d : shape) {
      const auto v = r.le<std::uint64_t>(header, name);
      if (v > (1ULL << 40)) throw LoadError("tensor '" + name + "' has an absurd extent", name);
      d = static_cast<std::int64_t>(v);
    }
    const auto n = static_cast<std::size_t>(shape_numel(shape));
    std::vector<float> data(n);
    const std::string ctx = "data of tensor '" + name + "'";
    if (dtype == DType::F16) {
      std::vector<std::uint16_t> raw(n);
      for (auto& v : raw) v = r.le<std::uint16_t>(ctx, name);
      std::transform(raw.begin(), raw.end(), data.begin(), half_from_bits);
    } else {
      for (auto& v : data) v = std::bit_cast<float>(r.le<std::uint32_t>(ctx, name));
    }
    if (store.tensors.count(name)) {
      throw DuplicateParameterError("parameter '" + name + "' appears more than once", name);
    }
    store.tensors.emplace(name, Tensor(std::move(shape), std::move(data), dtype));
  }
  if (!r.done()) throw LoadError("trailing bytes after the last tensor");

  std::set<std::string> expected;
  for (const auto& spec : required_parameters(store.config)) {
    expected.insert(spec.name);
    auto it = store.tensors.find(spec.name);
    if (it == store.tensors.end()) {
      throw MissingParameterError("missing parameter '" + spec.name + "'", spec.name);
    }
    if (it->second.shape() != spec.shape) {
      throw ShapeMismatchError("parameter '" + spec.name + "' has shape " +
                                   shape_str(it->second.shape()) + ", config expects " +
                                   shape_str(spec.shape),
                               spec.name);
    }
  }
  for (const auto& [name, t] : store.tensors) {
    if (!expected.count(name)) {
      throw UnexpectedParameterError("parameter '" + name + "' is not part of the config", name);
    }
  }
  return store;
}

void save(const WeightStore& store, const std::filesystem::path& path) {
  const auto bytes = serialize(store);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw OutputError("cannot open '" + path.string() + "' for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw OutputError("failed writing '" + path.string() + "'");
}

WeightStore load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open weight container '" + path.string() + "'");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return deserialize(bytes);
}

std::uint64_t store_checksum(const WeightStore& store) {
  const auto bytes = serialize(store);
  return fnv1a64(bytes.data(), bytes.size());
}

}  // namespace reuseg
