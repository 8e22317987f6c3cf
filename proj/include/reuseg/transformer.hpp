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

#include <string>

#include "reuseg/ops.hpp"
#include "reuseg/weights.hpp"

namespace reuseg {

enum class MlpActivation { QuickGelu, Relu };

struct BlockWeights {
  Tensor ln1_gamma, ln1_beta;
  AttentionWeights attn;
  Tensor ln2_gamma, ln2_beta;
  Tensor fc1_weight, fc1_bias;
  Tensor fc2_weight, fc2_bias;

  /// Reads "<prefix>ln_1.gamma", "<prefix>attn.q.weight", ... from a store.
  static BlockWeights from_store(const WeightStore& store, const std::string& prefix);
};

/// Pre-norm residual block:
///   x += attn(ln_1(x)); x += fc2(act(fc1(ln_2(x))))
Tensor transformer_block(const Tensor& x, const BlockWeights& w, int heads, MlpActivation act,
                         bool causal = false, const Tensor* mask = nullptr);

}  // namespace reuseg
