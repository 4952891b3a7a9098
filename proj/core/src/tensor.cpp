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

#include "sspk/tensor.hpp"

#include <algorithm>
#include <cmath>

#include "sspk/error.hpp"

namespace sspk {

namespace {
int64_t shape_product(const std::vector<int64_t>& shape) {
  int64_t n = 1;
  for (int64_t d : shape) {
    if (d < 0) throw DataError("tensor: negative dimension in shape " + shape_string(shape));
    n *= d;
  }
  return n;
}
}  // namespace

Tensor::Tensor(std::vector<int64_t> shape)
    : shape_(std::move(shape)), data_(static_cast<size_t>(shape_product(shape_)), 0.0f) {}

Tensor::Tensor(std::vector<int64_t> shape, std::vector<float> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  if (shape_product(shape_) != static_cast<int64_t>(data_.size())) {
    throw DataError("tensor: shape " + sspk::shape_string(shape_) + " does not match data length " +
                    std::to_string(data_.size()));
  }
}

Tensor Tensor::scalar(float v) { return Tensor({1}, {v}); }

Tensor Tensor::from_rows(std::initializer_list<std::initializer_list<float>> rows) {
  int64_t r = static_cast<int64_t>(rows.size());
  int64_t c = r > 0 ? static_cast<int64_t>(rows.begin()->size()) : 0;
  std::vector<float> data;
  data.reserve(static_cast<size_t>(r * c));
  for (const auto& row : rows) {
    if (static_cast<int64_t>(row.size()) != c) throw DataError("tensor: ragged row list");
    data.insert(data.end(), row.begin(), row.end());
  }
  return Tensor({r, c}, std::move(data));
}

bool Tensor::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](float v) { return std::isfinite(v); });
}

void Tensor::fill(float v) { std::fill(data_.begin(), data_.end(), v); }

void Tensor::release() {
  shape_.clear();
  data_.clear();
  data_.shrink_to_fit();
}

std::string Tensor::shape_string() const { return sspk::shape_string(shape_); }

std::string shape_string(const std::vector<int64_t>& shape) {
  std::string s = "[";
  for (size_t i = 0; i < shape.size(); ++i) {
    if (i) s += "x";
    s += std::to_string(shape[i]);
  }
  s += "]";
  return s;
}

}  // namespace sspk
