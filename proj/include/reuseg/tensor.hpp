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

#include <bit>
#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace reuseg {

class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class OutputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class DType : std::uint8_t { F32 = 0, F16 = 1 };

const char* dtype_name(DType dtype);
std::size_t dtype_size(DType dtype);

using Shape = std::vector<std::int64_t>;

std::int64_t shape_numel(const Shape& shape);
std::string shape_str(const Shape& shape);

/// Round a float to the nearest binary16 value (ties to even) and widen back.
/// Values beyond the half range become +-infinity; NaN stays NaN.
/// Branch-free so the bulk loop in Tensor::quantize vectorizes.
inline float round_to_half(float v) {
  const auto bits = std::bit_cast<std::uint32_t>(v);
  const std::uint32_t sign = bits & 0x80000000u;
  const auto mag = static_cast<std::int32_t>(bits ^ sign);
  // Normal half range: drop 13 mantissa bits, ties to even.
  const std::int32_t normal = (mag + 0x0fff + ((mag >> 13) & 1)) & ~0x1fff;
  // Half subnormals are multiples of 2^-24, the float ulp in [0.5, 1).
  const float sub = (std::bit_cast<float>(mag) + 0.5f) - 0.5f;
  std::int32_t r = mag < 0x38800000 ? std::bit_cast<std::int32_t>(sub) : normal;
  r = mag >= 0x477ff000 ? 0x7f800000 : r;  // rounds past 65504
  r = mag > 0x7f800000 ? mag : r;          // nan
  return std::bit_cast<float>(sign | static_cast<std::uint32_t>(r));
}

std::uint16_t half_bits(float v);
float half_from_bits(std::uint16_t bits);

/// Dense row-major tensor.
///
/// F16 tensors keep their elements widened to float for the CPU kernels, but
/// every stored element is exactly representable in binary16: construction
/// and every kernel output round through half precision.
class Tensor {
 public:
  Tensor() = default;
  Tensor(Shape shape, DType dtype = DType::F32);
  Tensor(Shape shape, std::vector<float> data, DType dtype = DType::F32);

  static Tensor zeros(Shape shape, DType dtype = DType::F32);
  static Tensor full(Shape shape, float value, DType dtype = DType::F32);
  static Tensor from_list(Shape shape, std::initializer_list<float> values,
                          DType dtype = DType::F32);

  const Shape& shape() const { return shape_; }
  std::int64_t dim(std::size_t axis) const;
  std::size_t rank() const { return shape_.size(); }
  std::int64_t numel() const { return static_cast<std::int64_t>(data_.size()); }
  DType dtype() const { return dtype_; }

  std::span<const float> data() const { return data_; }
  std::span<float> mutable_data() { return data_; }
  const float* ptr() const { return data_.data(); }
  float* mutable_ptr() { return data_.data(); }

  float operator[](std::int64_t i) const { return data_[static_cast<std::size_t>(i)]; }
  float at(std::initializer_list<std::int64_t> index) const;

  /// Same data viewed under a new shape with equal element count.
  Tensor reshaped(Shape shape) const;

  /// Re-round stored elements to the tensor's dtype. Kernels call this after
  /// writing through mutable_data().
  void quantize();

  bool bitwise_equal(const Tensor& other) const;

 private:
  Shape shape_;
  DType dtype_ = DType::F32;
  std::vector<float> data_;
};

/// Maximum absolute elementwise difference; shapes must match.
float max_abs_diff(const Tensor& a, const Tensor& b);

using RowMatrix = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatrixMap = Eigen::Map<RowMatrix>;
using ConstMatrixMap = Eigen::Map<const RowMatrix>;

/// View a rank-2 tensor (or a flattened rank-1 vector as 1xN) as a matrix.
ConstMatrixMap as_matrix(const Tensor& t);
MatrixMap as_matrix(Tensor& t);

}  // namespace reuseg
