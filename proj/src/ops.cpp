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

#include "reuseg/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Dense>

namespace reuseg {

namespace {

void require_same_dtype(const Tensor& a, const Tensor& b, const char* op) {
  if (a.dtype() != b.dtype()) {
    throw DimensionError(std::string(op) + ": dtype mismatch (" + dtype_name(a.dtype()) +
                         " vs " + dtype_name(b.dtype()) + ")");
  }
}

void require_rank(const Tensor& t, std::size_t rank, const char* op) {
  if (t.rank() != rank) {
    throw DimensionError(std::string(op) + ": expected rank " + std::to_string(rank) +
                         ", got " + shape_str(t.shape()));
  }
}

template <typename F>
Tensor map_elementwise(const Tensor& x, F&& f) {
  std::vector<float> out(static_cast<std::size_t>(x.numel()));
  const auto in = x.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(in[i]);
  return Tensor(x.shape(), std::move(out), x.dtype());
}

Tensor from_matrix(const RowMatrix& m, Shape shape, DType dtype) {
  std::vector<float> data(m.data(), m.data() + m.size());
  return Tensor(std::move(shape), std::move(data), dtype);
}

void softmax_rows_inplace(RowMatrix& m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    auto row = m.row(r);
    const float mx = row.maxCoeff();
    float sum = 0.0f;
    for (Eigen::Index c = 0; c < row.size(); ++c) {
      row(c) = std::exp(row(c) - mx);
      sum += row(c);
    }
    row /= sum;
  }
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_rank(a, 2, "matmul");
  require_rank(b, 2, "matmul");
  require_same_dtype(a, b, "matmul");
  if (a.dim(1) != b.dim(0)) {
    throw DimensionError("matmul: inner dimensions differ " + shape_str(a.shape()) + " * " +
                         shape_str(b.shape()));
  }
  RowMatrix out = as_matrix(a) * as_matrix(b);
  return from_matrix(out, {a.dim(0), b.dim(1)}, a.dtype());
}

Tensor linear(const Tensor& x, const Tensor& weight) {
  require_rank(weight, 2, "linear");
  require_same_dtype(x, weight, "linear");
  const std::int64_t in = weight.dim(1);
  const std::int64_t out = weight.dim(0);
  if (x.rank() != 1 && x.rank() != 2) {
    throw DimensionError("linear: input must be rank 1 or 2, got " + shape_str(x.shape()));
  }
  if (x.shape().back() != in) {
    throw DimensionError("linear: input " + shape_str(x.shape()) + " does not match weight " +
                         shape_str(weight.shape()));
  }
  const std::int64_t rows = x.rank() == 2 ? x.dim(0) : 1;
  RowMatrix y = ConstMatrixMap(x.ptr(), rows, in) * as_matrix(weight).transpose();
  Shape shape = x.rank() == 2 ? Shape{rows, out} : Shape{out};
  return from_matrix(y, std::move(shape), x.dtype());
}

Tensor linear(const Tensor& x, const Tensor& weight, const Tensor& bias) {
  require_rank(weight, 2, "linear");
  require_same_dtype(x, weight, "linear");
  require_same_dtype(x, bias, "linear");
  if (bias.rank() != 1 || bias.dim(0) != weight.dim(0)) {
    throw DimensionError("linear: bias " + shape_str(bias.shape()) + " does not match weight " +
                         shape_str(weight.shape()));
  }
  const std::int64_t in = weight.dim(1);
  const std::int64_t out = weight.dim(0);
  if ((x.rank() != 1 && x.rank() != 2) || x.shape().back() != in) {
    throw DimensionError("linear: input " + shape_str(x.shape()) + " does not match weight " +
                         shape_str(weight.shape()));
  }
  const std::int64_t rows = x.rank() == 2 ? x.dim(0) : 1;
  RowMatrix y = ConstMatrixMap(x.ptr(), rows, in) * as_matrix(weight).transpose();
  y.rowwise() += ConstMatrixMap(bias.ptr(), 1, out).row(0);
  Shape shape = x.rank() == 2 ? Shape{rows, out} : Shape{out};
  return from_matrix(y, std::move(shape), x.dtype());
}

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_dtype(a, b, "add");
  if (a.shape() != b.shape()) {
    throw DimensionError("add: shape mismatch " + shape_str(a.shape()) + " vs " +
                         shape_str(b.shape()));
  }
  std::vector<float> out(static_cast<std::size_t>(a.numel()));
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] + b.data()[i];
  return Tensor(a.shape(), std::move(out), a.dtype());
}

Tensor add_rowwise(const Tensor& x, const Tensor& row) {
  require_same_dtype(x, row, "add_rowwise");
  if (row.rank() != 1 || x.rank() == 0 || x.shape().back() != row.dim(0)) {
    throw DimensionError("add_rowwise: " + shape_str(row.shape()) + " does not broadcast over " +
                         shape_str(x.shape()));
  }
  const auto d = static_cast<std::size_t>(row.dim(0));
  std::vector<float> out(x.data().begin(), x.data().end());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += row.data()[i % d];
  return Tensor(x.shape(), std::move(out), x.dtype());
}

Tensor cast(const Tensor& x, DType to) {
  std::vector<float> data(x.data().begin(), x.data().end());
  return Tensor(x.shape(), std::move(data), to);
}

Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, float eps) {
  if (x.rank() == 0) throw DimensionError("layer_norm: scalar input");
  if (!(eps > 0.0f)) throw ConfigError("layer_norm: eps must be positive");
  const std::int64_t d = x.shape().back();
  if (gamma.rank() != 1 || beta.rank() != 1 || gamma.dim(0) != d || beta.dim(0) != d) {
    throw DimensionError("layer_norm: affine parameters " + shape_str(gamma.shape()) + "/" +
                         shape_str(beta.shape()) + " do not match last dim of " +
                         shape_str(x.shape()));
  }
  require_same_dtype(x, gamma, "layer_norm");
  require_same_dtype(x, beta, "layer_norm");
  const std::int64_t rows = x.numel() / std::max<std::int64_t>(d, 1);
  std::vector<float> out(static_cast<std::size_t>(x.numel()));
  const float* g = gamma.ptr();
  const float* b = beta.ptr();
  for (std::int64_t r = 0; r < rows; ++r) {
    const float* in = x.ptr() + r * d;
    float* o = out.data() + r * d;
    float mean = 0.0f;
    for (std::int64_t i = 0; i < d; ++i) mean += in[i];
    mean /= static_cast<float>(d);
    float var = 0.0f;
    for (std::int64_t i = 0; i < d; ++i) {
      const float c = in[i] - mean;
      var += c * c;
    }
    var /= static_cast<float>(d);
    const float inv = 1.0f / std::sqrt(var + eps);
    for (std::int64_t i = 0; i < d; ++i) o[i] = (in[i] - mean) * inv * g[i] + b[i];
  }
  return Tensor(x.shape(), std::move(out), x.dtype());
}

Tensor quick_gelu(const Tensor& x) {
  return map_elementwise(x, [](float v) { return v / (1.0f + std::exp(-1.702f * v)); });
}

Tensor relu(const Tensor& x) {
  return map_elementwise(x, [](float v) { return v > 0.0f ? v : 0.0f; });
}

Tensor sigmoid(const Tensor& x) {
  return map_elementwise(x, [](float v) { return 1.0f / (1.0f + std::exp(-v)); });
}

Tensor softmax_lastdim(const Tensor& x) {
  if (x.rank() == 0 || x.shape().back() < 1) {
    throw DimensionError("softmax_lastdim: last dim must be >= 1");
  }
  const std::int64_t d = x.shape().back();
  RowMatrix m = ConstMatrixMap(x.ptr(), x.numel() / d, d);
  softmax_rows_inplace(m);
  return from_matrix(m, x.shape(), x.dtype());
}

Tensor causal_mask(std::int64_t tokens) {
  std::vector<float> data(static_cast<std::size_t>(tokens * tokens), 0.0f);
  for (std::int64_t r = 0; r < tokens; ++r) {
    for (std::int64_t c = r + 1; c < tokens; ++c) {
      data[static_cast<std::size_t>(r * tokens + c)] = -std::numeric_limits<float>::infinity();
    }
  }
  return Tensor({tokens, tokens}, std::move(data));
}

Tensor multi_head_attention(const Tensor& x, const AttentionWeights& w, int heads, bool causal,
                            const Tensor* mask) {
  require_rank(x, 2, "multi_head_attention");
  const std::int64_t t = x.dim(0);
  const std::int64_t d = x.dim(1);
  if (heads < 1 || d % heads != 0) {
    throw ConfigError("multi_head_attention: width " + std::to_string(d) +
                      " not divisible by " + std::to_string(heads) + " heads");
  }
  const std::int64_t head_dim = d / heads;

  const Tensor q = linear(x, w.q_weight, w.q_bias);
  const Tensor k = linear(x, w.k_weight, w.k_bias);
  const Tensor v = linear(x, w.v_weight, w.v_bias);

  Tensor local_mask;
  if (causal && mask == nullptr) {
    local_mask = causal_mask(t);
    mask = &local_mask;
  }
  if (causal && (mask->rank() != 2 || mask->dim(0) != t || mask->dim(1) != t)) {
    throw DimensionError("multi_head_attention: mask " + shape_str(mask->shape()) +
                         " does not match " + std::to_string(t) + " tokens");
  }

  const auto qm = as_matrix(q);
  const auto km = as_matrix(k);
  const auto vm = as_matrix(v);
  const float scale = 1.0f / std::sqrt(static_cast<float>(head_dim));
  RowMatrix context(t, d);
  for (int h = 0; h < heads; ++h) {
    const auto col = static_cast<Eigen::Index>(h * head_dim);
    RowMatrix scores = (qm.middleCols(col, head_dim) * km.middleCols(col, head_dim).transpose()) * scale;
    if (causal) scores += as_matrix(*mask);
    softmax_rows_inplace(scores);
    context.middleCols(col, head_dim) = scores * vm.middleCols(col, head_dim);
  }
  const Tensor ctx = from_matrix(context, {t, d}, x.dtype());
  return linear(ctx, w.o_weight, w.o_bias);
}

Tensor patch_embed(const Tensor& image, const Tensor& kernel, const Tensor& bias,
                   std::int64_t patch) {
  require_rank(image, 3, "patch_embed");
  require_rank(kernel, 2, "patch_embed");
  const std::int64_t c = image.dim(0);
  const std::int64_t h = image.dim(1);
  const std::int64_t w = image.dim(2);
  if (patch < 1 || h % patch != 0 || w % patch != 0) {
    throw DimensionError("patch_embed: image " + shape_str(image.shape()) +
                         " not divisible by patch " + std::to_string(patch));
  }
  if (kernel.dim(1) != c * patch * patch) {
    throw DimensionError("patch_embed: kernel " + shape_str(kernel.shape()) +
                         " does not match patch volume " + std::to_string(c * patch * patch));
  }
  const std::int64_t gh = h / patch;
  const std::int64_t gw = w / patch;
  const std::int64_t vol = c * patch * patch;
  std::vector<float> cols(static_cast<std::size_t>(gh * gw * vol));
  const float* src = image.ptr();
  for (std::int64_t py = 0; py < gh; ++py) {
    for (std::int64_t px = 0; px < gw; ++px) {
      float* row = cols.data() + (py * gw + px) * vol;
      for (std::int64_t ch = 0; ch < c; ++ch) {
        for (std::int64_t ky = 0; ky < patch; ++ky) {
          const float* line = src + (ch * h + py * patch + ky) * w + px * patch;
          std::copy(line, line + patch, row + (ch * patch + ky) * patch);
        }
      }
    }
  }
  const Tensor unfolded({gh * gw, vol}, std::move(cols), image.dtype());
  return linear(unfolded, kernel, bias);
}

Tensor transposed_conv2d(const Tensor& x, const Tensor& kernel, const Tensor& bias) {
  require_rank(x, 3, "transposed_conv2d");
  require_rank(kernel, 4, "transposed_conv2d");
  require_same_dtype(x, kernel, "transposed_conv2d");
  const std::int64_t cin = x.dim(0);
  const std::int64_t h = x.dim(1);
  const std::int64_t w = x.dim(2);
  const std::int64_t cout = kernel.dim(1);
  const std::int64_t k = kernel.dim(2);
  if (kernel.dim(0) != cin) {
    throw DimensionError("transposed_conv2d: kernel " + shape_str(kernel.shape()) +
                         " expects " + std::to_string(kernel.dim(0)) + " input channels, got " +
                         std::to_string(cin));
  }
  if (kernel.dim(3) != k) throw DimensionError("transposed_conv2d: kernel must be square");
  if (bias.rank() != 1 || bias.dim(0) != cout) {
    throw DimensionError("transposed_conv2d: bias " + shape_str(bias.shape()) +
                         " does not match " + std::to_string(cout) + " output channels");
  }
  const ConstMatrixMap xm(x.ptr(), cin, h * w);
  const ConstMatrixMap km(kernel.ptr(), cin, cout * k * k);
  const RowMatrix y = xm.transpose() * km;

  const std::int64_t oh = h * k;
  const std::int64_t ow = w * k;
  std::vector<float> out(static_cast<std::size_t>(cout * oh * ow));
  for (std::int64_t iy = 0; iy < h; ++iy) {
    for (std::int64_t ix = 0; ix < w; ++ix) {
      const float* px = y.data() + (iy * w + ix) * cout * k * k;
      for (std::int64_t co = 0; co < cout; ++co) {
        const float b = bias[co];
        for (std::int64_t ky = 0; ky < k; ++ky) {
          float* dst = out.data() + (co * oh + iy * k + ky) * ow + ix * k;
          const float* taps = px + (co * k + ky) * k;
          for (std::int64_t kx = 0; kx < k; ++kx) dst[kx] = taps[kx] + b;
        }
      }
    }
  }
  return Tensor({cout, oh, ow}, std::move(out), x.dtype());
}

namespace {

struct Tap {
  std::int64_t lo, hi;
  float frac;
};

std::vector<Tap> resize_taps(std::int64_t in, std::int64_t out) {
  std::vector<Tap> taps(static_cast<std::size_t>(out));
  const double scale = static_cast<double>(in) / static_cast<double>(out);
  for (std::int64_t i = 0; i < out; ++i) {
    double src = (static_cast<double>(i) + 0.5) * scale - 0.5;
    if (src < 0.0) src = 0.0;
    auto lo = static_cast<std::int64_t>(std::floor(src));
    lo = std::min(lo, in - 1);
    const std::int64_t hi = std::min(lo + 1, in - 1);
    taps[static_cast<std::size_t>(i)] = {lo, hi, static_cast<float>(src - static_cast<double>(lo))};
  }
  return taps;
}

}  // namespace

Tensor bilinear_resize(const Tensor& x, std::int64_t out_h, std::int64_t out_w) {
  if (x.rank() != 2 && x.rank() != 3) {
    throw DimensionError("bilinear_resize: expected [C x H x W] or [H x W], got " +
                         shape_str(x.shape()));
  }
  if (out_h < 1 || out_w < 1) throw DimensionError("bilinear_resize: output size must be >= 1");
  const bool planar = x.rank() == 3;
  const std::int64_t c = planar ? x.dim(0) : 1;
  const std::int64_t h = x.dim(planar ? 1 : 0);
  const std::int64_t w = x.dim(planar ? 2 : 1);
  if (h == out_h && w == out_w) return x;

  const auto ty = resize_taps(h, out_h);
  const auto tx = resize_taps(w, out_w);
  std::vector<float> out(static_cast<std::size_t>(c * out_h * out_w));
  for (std::int64_t ch = 0; ch < c; ++ch) {
    const float* plane = x.ptr() + ch * h * w;
    float* dst = out.data() + ch * out_h * out_w;
    for (std::int64_t oy = 0; oy < out_h; ++oy) {
      const Tap& yt = ty[static_cast<std::size_t>(oy)];
      const float* r0 = plane + yt.lo * w;
      const float* r1 = plane + yt.hi * w;
      for (std::int64_t ox = 0; ox < out_w; ++ox) {
        const Tap& xt = tx[static_cast<std::size_t>(ox)];
        const float top = r0[xt.lo] + (r0[xt.hi] - r0[xt.lo]) * xt.frac;
        const float bottom = r1[xt.lo] + (r1[xt.hi] - r1[xt.lo]) * xt.frac;
        dst[oy * out_w + ox] = top + (bottom - top) * yt.frac;
      }
    }
  }
  Shape shape = planar ? Shape{c, out_h, out_w} : Shape{out_h, out_w};
  return Tensor(std::move(shape), std::move(out), x.dtype());
}

std::vector<float> gaussian_kernel(int kernel_size, float sigma) {
  if (kernel_size < 1 || kernel_size % 2 == 0) {
    throw ConfigError("gaussian kernel size must be odd and positive, got " +
                      std::to_string(kernel_size));
  }
  if (!(sigma > 0.0f)) throw ConfigError("gaussian sigma must be positive");
  const int radius = kernel_size / 2;
  std::vector<double> taps(static_cast<std::size_t>(kernel_size));
  double sum = 0.0;
  for (int i = 0; i < kernel_size; ++i) {
    const double d = i - radius;
    taps[static_cast<std::size_t>(i)] = std::exp(-(d * d) / (2.0 * sigma * sigma));
    sum += taps[static_cast<std::size_t>(i)];
  }
  std::vector<float> out(taps.size());
  for (std::size_t i = 0; i < taps.size(); ++i) out[i] = static_cast<float>(taps[i] / sum);
  return out;
}

namespace {

// One separable pass along rows (stride 1) or columns (stride = width) with
// clamped indices; results stay inside the range of the taps they combine.
void blur_pass(const float* src, float* dst, std::int64_t lines, std::int64_t len,
               std::int64_t line_stride, std::int64_t step, const std::vector<float>& kernel) {
  const auto radius = static_cast<std::int64_t>(kernel.size() / 2);
  for (std::int64_t l = 0; l < lines; ++l) {
    const float* in = src + l * line_stride;
    float* out = dst + l * line_stride;
    for (std::int64_t i = 0; i < len; ++i) {
      float acc = 0.0f;
      float lo = std::numeric_limits<float>::infinity();
      float hi = -lo;
      for (std::int64_t j = -radius; j <= radius; ++j) {
        const std::int64_t idx = std::clamp<std::int64_t>(i + j, 0, len - 1);
        const float v = in[idx * step];
        acc += kernel[static_cast<std::size_t>(j + radius)] * v;
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
      out[i * step] = std::clamp(acc, lo, hi);
    }
  }
}

}  // namespace

Tensor gaussian_blur(const Tensor& x, int kernel_size, float sigma) {
  require_rank(x, 2, "gaussian_blur");
  const auto kernel = gaussian_kernel(kernel_size, sigma);
  const std::int64_t h = x.dim(0);
  const std::int64_t w = x.dim(1);
  std::vector<float> tmp(static_cast<std::size_t>(x.numel()));
  std::vector<float> out(tmp.size());
  blur_pass(x.ptr(), tmp.data(), h, w, w, 1, kernel);
  blur_pass(tmp.data(), out.data(), w, h, 1, w, kernel);
  return Tensor(x.shape(), std::move(out), x.dtype());
}

}  // namespace reuseg
