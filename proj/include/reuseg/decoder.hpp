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

#include <vector>

#include "reuseg/encoders.hpp"
#include "reuseg/transformer.hpp"

namespace reuseg {

struct DecoderWeights {
  /// Stage i reduces the i-th deepest extracted activation.
  std::vector<Tensor> reduce_weight, reduce_bias;
  Tensor film_mul_weight, film_mul_bias;
  Tensor film_add_weight, film_add_bias;
  std::vector<BlockWeights> blocks;
  Tensor head0_weight, head0_bias;
  Tensor head1_weight, head1_bias;
  int heads = 1;

  static DecoderWeights from_store(const WeightStore& store);
};

/// FiLM modulation vectors derived from one conditional embedding.
struct FilmParams {
  Tensor gamma;  // [reduce_dim]
  Tensor beta;   // [reduce_dim]
};

/// gamma = W_mul c + b_mul, beta = W_add c + b_add.
FilmParams film_params(const Tensor& conditional, const DecoderWeights& weights);

/// Per-token gamma * x + beta over x [T x reduce_dim].
Tensor film(const Tensor& x, const Tensor& gamma, const Tensor& beta);

/// Logit map [S x S] for one prompt. Activations are consumed deepest first;
/// FiLM modulates the first stage only.
Tensor decode(const ActivationSet& acts, const Tensor& gamma, const Tensor& beta,
              const DecoderWeights& weights);

}  // namespace reuseg
