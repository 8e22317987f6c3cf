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

#include "reuseg/decoder.hpp"

namespace reuseg {

DecoderWeights DecoderWeights::from_store(const WeightStore& s) {
  DecoderWeights w;
  for (std::int64_t i = 0; i < s.config.decoder_blocks; ++i) {
    const std::string idx = std::to_string(i);
    w.reduce_weight.push_back(s.at("decoder.reduce." + idx + ".weight"));
    w.reduce_bias.push_back(s.at("decoder.reduce." + idx + ".bias"));
    w.blocks.push_back(BlockWeights::from_store(s, "decoder.blocks." + idx + "."));
  }
  w.film_mul_weight = s.at("decoder.film_mul.weight");
  w.film_mul_bias = s.at("decoder.film_mul.bias");
  w.film_add_weight = s.at("decoder.film_add.weight");
  w.film_add_bias = s.at("decoder.film_add.bias");
  w.head0_weight = s.at("decoder.head.0.weight");
  w.head0_bias = s.at("decoder.head.0.bias");
  w.head1_weight = s.at("decoder.head.1.weight");
  w.head1_bias = s.at("decoder.head.1.bias");
  w.heads = static_cast<int>(s.config.decoder_heads);
  return w;
}

FilmParams film_params(const Tensor& conditional, const DecoderWeights& w) {
  return {linear(conditional, w.film_mul_weight, w.film_mul_bias),
          linear(conditional, w.film_add_weight, w.film_add_bias)};
}

Tensor film(const Tensor& x, const Tensor& gamma, const Tensor& beta) {
  if (x.rank() != 2 || gamma.rank() != 1 || beta.rank() != 1 || gamma.dim(0) != x.dim(1) ||
      beta.dim(0) != x.dim(1)) {
    throw DimensionError("film: gamma " + shape_str(gamma.shape()) + " / beta " +
                         shape_str(beta.shape()) + " do not match tokens " + shape_str(x.shape()));
  }
  if (gamma.dtype() != x.dtype() || beta.dtype() != x.dtype()) {
    throw DimensionError("film: dtype mismatch");
  }
  const std::int64_t d = x.dim(1);
  std::vector<float> out(static_cast<std::size_t>(x.numel()));
  for (std::int64_t r = 0; r < x.dim(0); ++r) {
    for (std::int64_t c = 0; c < d; ++c) {
      out[r * d + c] = gamma[c] * x.ptr()[r * d + c] + beta[c];
    }
  }
  return Tensor(x.shape(), std::move(out), x.dtype());
}

Tensor decode(const ActivationSet& acts, const Tensor& gamma, const Tensor& beta,
              const DecoderWeights& w) {
  const std::size_t stages = w.blocks.size();
  if (acts.activations.size() != stages || w.reduce_weight.size() != stages) {
    throw ConfigError("decode: " + std::to_string(acts.activations.size()) +
                      " activations for " + std::to_string(stages) + " decoder stages");
  }
  Tensor x;
  for (std::size_t i = 0; i < stages; ++i) {
    const Tensor& a = acts.activations[stages - 1 - i];
    const Tensor reduced = linear(a, w.reduce_weight[i], w.reduce_bias[i]);
    x = i == 0 ? film(reduced, gamma, beta) : add(x, reduced);
    x = transformer_block(x, w.blocks[i], w.heads, MlpActivation::Relu);
  }

  // Drop CLS, tokens [g^2 x R] -> planes [R x g x g].
  const std::int64_t g = acts.grid;
  const std::int64_t r = x.dim(1);
  if (x.dim(0) != 1 + g * g) throw DimensionError("decode: token count does not match grid");
  std::vector<float> planes(static_cast<std::size_t>(r * g * g));
  for (std::int64_t t = 0; t < g * g; ++t) {
    for (std::int64_t c = 0; c < r; ++c) planes[c * g * g + t] = x.ptr()[(t + 1) * r + c];
  }
  Tensor y({r, g, g}, std::move(planes), x.dtype());
  y = relu(transposed_conv2d(y, w.head0_weight, w.head0_bias));
  y = transposed_conv2d(y, w.head1_weight, w.head1_bias);
  return y.reshaped({y.dim(1), y.dim(2)});
}

}  // namespace reuseg
