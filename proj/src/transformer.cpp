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

#include "reuseg/transformer.hpp"

#include "reuseg/config.hpp"

namespace reuseg {

BlockWeights BlockWeights::from_store(const WeightStore& s, const std::string& p) {
  BlockWeights w;
  w.ln1_gamma = s.at(p + "ln_1.gamma");
  w.ln1_beta = s.at(p + "ln_1.beta");
  w.attn.q_weight = s.at(p + "attn.q.weight");
  w.attn.q_bias = s.at(p + "attn.q.bias");
  w.attn.k_weight = s.at(p + "attn.k.weight");
  w.attn.k_bias = s.at(p + "attn.k.bias");
  w.attn.v_weight = s.at(p + "attn.v.weight");
  w.attn.v_bias = s.at(p + "attn.v.bias");
  w.attn.o_weight = s.at(p + "attn.o.weight");
  w.attn.o_bias = s.at(p + "attn.o.bias");
  w.ln2_gamma = s.at(p + "ln_2.gamma");
  w.ln2_beta = s.at(p + "ln_2.beta");
  w.fc1_weight = s.at(p + "mlp.fc1.weight");
  w.fc1_bias = s.at(p + "mlp.fc1.bias");
  w.fc2_weight = s.at(p + "mlp.fc2.weight");
  w.fc2_bias = s.at(p + "mlp.fc2.bias");
  return w;
}

Tensor transformer_block(const Tensor& x, const BlockWeights& w, int heads, MlpActivation act,
                         bool causal, const Tensor* mask) {
  const Tensor attended = multi_head_attention(layer_norm(x, w.ln1_gamma, w.ln1_beta, kLayerNormEps),
                                               w.attn, heads, causal, mask);
  const Tensor h = add(x, attended);
  Tensor hidden = linear(layer_norm(h, w.ln2_gamma, w.ln2_beta, kLayerNormEps), w.fc1_weight,
                         w.fc1_bias);
  hidden = act == MlpActivation::QuickGelu ? quick_gelu(hidden) : relu(hidden);
  return add(h, linear(hidden, w.fc2_weight, w.fc2_bias));
}

}  // namespace reuseg
