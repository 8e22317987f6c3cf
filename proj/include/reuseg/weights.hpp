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
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "reuseg/config.hpp"
#include "reuseg/tensor.hpp"

namespace reuseg {

/// Base of every container load failure. `tensor()` names the offending
/// parameter when one is involved.
class LoadError : public std::runtime_error {
 public:
  LoadError(const std::string& what, std::string tensor = {})
      : std::runtime_error(what), tensor_(std::move(tensor)) {}
  const std::string& tensor() const { return tensor_; }

 private:
  std::string tensor_;
};

class MagicError : public LoadError {
 public:
  using LoadError::LoadError;
};
class VersionError : public LoadError {
 public:
  using LoadError::LoadError;
};
class TruncationError : public LoadError {
 public:
  using LoadError::LoadError;
};
class MissingParameterError : public LoadError {
 public:
  using LoadError::LoadError;
};
class ShapeMismatchError : public LoadError {
 public:
  using LoadError::LoadError;
};
class DuplicateParameterError : public LoadError {
 public:
  using LoadError::LoadError;
};
class UnexpectedParameterError : public LoadError {
 public:
  using LoadError::LoadError;
};

/// Config plus named parameter tensors.
struct WeightStore {
  ModelConfig config;
  std::map<std::string, Tensor> tensors;

  const Tensor& at(const std::string& name) const;
  std::int64_t parameter_count() const;
  bool bitwise_equal(const WeightStore& other) const;
};

struct ParameterSpec {
  std::string name;
  Shape shape;
};

/// Every parameter a config requires, sorted by name.
std::vector<ParameterSpec> required_parameters(const ModelConfig& config);

/// weights ~ N(0, 0.02), layer-norm gains 1, biases and shifts 0, drawn in
/// sorted-name order from one PortableRng.
WeightStore random_init(const ModelConfig& config, std::uint64_t seed);

/// Copy of `store` with every tensor cast to `dtype`.
WeightStore cast_store(const WeightStore& store, DType dtype);

inline constexpr char kContainerMagic[8] = {'B', 'S', 'E', 'G', 'W', '1', '\0', '\0'};
inline constexpr std::uint32_t kContainerVersion = 1;

/// Container layout, little-endian, no padding:
///   magic[8] | version u32 | config_len u32 | config JSON |
///   tensor_count u32 | per tensor (sorted by name):
///     name_len u32 | name | dtype u8 | rank u8 | dims u64 x rank | data
std::vector<std::uint8_t> serialize(const WeightStore& store);
WeightStore deserialize(const std::vector<std::uint8_t>& bytes);

void save(const WeightStore& store, const std::filesystem::path& path);
WeightStore load(const std::filesystem::path& path);

/// FNV-1a 64 of the serialized container.
std::uint64_t store_checksum(const WeightStore& store);

/// Published checksum of random_init(ModelConfig::tiny(), 42).
inline constexpr std::uint64_t kTinySeed42Checksum = 0x0942c17f4ef11becull;

}  // namespace reuseg
