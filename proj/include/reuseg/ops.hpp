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

#include "reuseg/tensor.hpp"

namespace reuseg {

// Dense kernels. Every kernel is a pure function; the output dtype follows the
// inputs, reductions accumulate in float, outputs are rounded to the dtype.

/// [M x K] * [K x N] -> [M x N].
Tensor matmul(const Tensor& a, const Tensor& b);

/// x * W^T + bias, where W is stored [out x in] and x is [T x in] or [in].
Tensor linear(const Tensor& x, const Tensor& weight, const Tensor& bias);
Tensor linear(const Tensor& x, const Tensor& weight);

Tensor add(const Tensor& a, const Tensor& b);
/// Adds a [D] row vector to every row of a [... x D] tensor.
Tensor add_rowwise(const Tensor& x, const Tensor& row);
Tensor cast(const Tensor& x, DType to);

Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, float eps = 1e-5f);
/// x * sigmoid(1.702 x)
Tensor quick_gelu(const Tensor& x);
Tensor relu(const Tensor& x);
Tensor sigmoid(const Tensor& x);
Tensor softmax_lastdim(const Tensor& x);

struct AttentionWeights {
  Tensor q_weight, q_bias;
  Tensor k_weight, k_bias;
  Tensor v_weight, v_bias;
  Tensor o_weight, o_bias;
};

/// Scaled dot-product self-attention over x [T x D]. With `causal` set, the
/// lower-triangular additive mask is taken from `mask` when given ([T x T],
/// 0 on/below the diagonal and -inf above) and built locally otherwise.
Tensor multi_head_attention(const Tensor& x, const AttentionWeights& weights, int heads,
                            bool causal, const Tensor* mask = nullptr);

/// Non-overlapping patch projection of image [3 x H x W] with kernel
/// [D x 3*patch*patch] (conv layout) and bias [D]; tokens in row-major grid order.
Tensor patch_embed(const Tensor& image, const Tensor& kernel, const Tensor& bias,
                   std::int64_t patch);

/// Transposed convolution with kernel == stride. x [C x H x W], kernel
/// [C x C' x k x k], bias [C'] -> [C' x H*k x W*k].
Tensor transposed_conv2d(const Tensor& x, const Tensor& kernel, const Tensor& bias);

/// Bilinear resize of [C x H x W] (or [H x W]) with half-pixel centers
/// (align_corners = false).
Tensor bilinear_resize(const Tensor& x, std::int64_t out_h, std::int64_t out_w);

/// Normalized 1-D Gaussian taps of odd length.
std::vector<float> gaussian_kernel(int kernel_size, float sigma);

/// Separable Gaussian blur of [H x W] with edge replication.
Tensor gaussian_blur(const Tensor& x, int kernel_size, float sigma);

/// Lower-triangular additive mask [T x T].
Tensor causal_mask(std::int64_t tokens);

}  // namespace reuseg
