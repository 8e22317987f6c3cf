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

#include "reuseg/constant_pool.hpp"

#include <mutex>

#include "reuseg/ops.hpp"

namespace reuseg {

std::shared_ptr<const Tensor> ConstantPool::zeros(const Shape& shape, DType dtype) {
  return get(ConstantKind::Zeros, shape, dtype);
}

std::shared_ptr<const Tensor> ConstantPool::causal_mask(std::int64_t tokens) {
  return get(ConstantKind::CausalMask, {tokens, tokens}, DType::F32);
}

std::shared_ptr<const Tensor> ConstantPool::get(ConstantKind kind, const Shape& shape,
                                                DType dtype) {
  Key key{kind, shape, dtype};
  {
    std::shared_lock lock(mutex_);
    if (auto it = entries_.find(key); it != entries_.end()) return it->second;
  }
  if (kind == ConstantKind::CausalMask && (shape.size() != 2 || shape[0] != shape[1])) {
    throw DimensionError("causal mask must be square, got " + shape_str(shape));
  }
  std::unique_lock lock(mutex_);
  if (auto it = entries_.find(key); it != entries_.end()) return it->second;
  auto tensor = kind == ConstantKind::CausalMask
                    ? std::make_shared<const Tensor>(reuseg::causal_mask(shape[0]))
                    : std::make_shared<const Tensor>(Tensor::zeros(shape, dtype));
  ++allocations_;
  entries_.emplace(std::move(key), tensor);
  return tensor;
}

std::uint64_t ConstantPool::allocations() const {
  std::shared_lock lock(mutex_);
  return allocations_;
}

std::size_t ConstantPool::size() const {
  std::shared_lock lock(mutex_);
  return entries_.size();
}

void ConstantPool::clear() {
  std::unique_lock lock(mutex_);
  entries_.clear();
}

}  // namespace reuseg
