// Copyright 2026 The sspk Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef SSPK_TENSOR_HPP_
#define SSPK_TENSOR_HPP_

#include <cstdint>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace sspk {

// Dense float32 tensor, row-major. Rank 1 and 2 cover everything in this
// codebase; the shape is kept general so pooled statistics, minibatch
// stacks, and scalars share one type.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<int64_t> shape);  // zero-initialized
  Tensor(std::vector<int64_t> shape, std::vector<float> data);

  static Tensor scalar(float v);
  static Tensor from_rows(std::initializer_list<std::initializer_list<float>> rows);

  const std::vector<int64_t>& shape() const { return shape_; }
  int64_t size() const { return static_cast<int64_t>(data_.size()); }
  int64_t rank() const { return static_cast<int64_t>(shape_.size()); }
  int64_t dim(int i) const { return shape_[static_cast<size_t>(i)]; }

  // Rank-2 convenience (scalars and vectors are treated as 1xN by rows()/cols()).
  int64_t rows() const { return rank() == 2 ? shape_[0] : 1; }
  int64_t cols() const { return rank() == 2 ? shape_[1] : size(); }

  float* data() { return data_.data(); }
  const float* data() const { return data_.data(); }
  std::span<float> span() { return {data_.data(), data_.size()}; }
  std::span<const float> span() const { return {data_.data(), data_.size()}; }

  float& at(int64_t r, int64_t c) { return data_[static_cast<size_t>(r * cols() + c)]; }
  float at(int64_t r, int64_t c) const { return data_[static_cast<size_t>(r * cols() + c)]; }
  float& operator[](int64_t i) { return data_[static_cast<size_t>(i)]; }
  float operator[](int64_t i) const { return data_[static_cast<size_t>(i)]; }

  bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }
  bool all_finite() const;

  void fill(float v);
  void release();  // drops the buffer (shape cleared)

  std::string shape_string() const;

 private:
  std::vector<int64_t> shape_;
  std::vector<float> data_;
};

std::string shape_string(const std::vector<int64_t>& shape);

}  // namespace sspk

#endif  // SSPK_TENSOR_HPP_
