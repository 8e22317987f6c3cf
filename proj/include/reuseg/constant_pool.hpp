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
#include <map>
#include <memory>
#include <shared_mutex>
#include <tuple>

#include "reuseg/tensor.hpp"

namespace reuseg {

enum class ConstantKind : std::uint8_t { Zeros, CausalMask };

/// Shape-keyed store of constant tensors that stay the same for a fixed input
/// size and batch size one. Each (kind, shape, dtype) is materialized once.
class ConstantPool {
 public:
  std::shared_ptr<const Tensor> zeros(const Shape& shape, DType dtype = DType::F32);
  std::shared_ptr<const Tensor> causal_mask(std::int64_t tokens);

  std::shared_ptr<const Tensor> get(ConstantKind kind, const Shape& shape,
                                    DType dtype = DType::F32);

  std::uint64_t allocations() const;
  std::size_t size() const;
  void clear();

 private:
  using Key = std::tuple<ConstantKind, Shape, DType>;

  mutable std::shared_mutex mutex_;
  std::map<Key, std::shared_ptr<const Tensor>> entries_;
  std::uint64_t allocations_ = 0;
};

}  // namespace reuseg
