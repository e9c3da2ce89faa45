// Copyright 2026 The FairST Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <initializer_list>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "fairst/error.hpp"

namespace fairst {

using Shape = std::vector<std::size_t>;

inline std::size_t shape_size(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         std::multiplies<>());
}

inline std::string shape_string(const Shape& shape) {
  std::string out = "(";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out += ", ";
    out += std::to_string(shape[i]);
  }
  return out + ")";
}

// Dense row-major double tensor with at most five axes.
class Tensor {
 public:
  static constexpr std::size_t kMaxRank = 5;

  Tensor() = default;

  explicit Tensor(Shape shape, double fill = 0.0)
      : shape_(std::move(shape)), data_(shape_size(shape_), fill) {
    check_rank();
  }

  Tensor(Shape shape, std::vector<double> data)
      : shape_(std::move(shape)), data_(std::move(data)) {
    check_rank();
    require(data_.size() == shape_size(shape_), ErrorKind::invalid_input,
            "tensor data length ", data_.size(), " does not match shape ",
            shape_string(shape_));
  }

  static Tensor zeros_like(const Tensor& other) { return Tensor(other.shape_); }

  const Shape& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t dim(std::size_t axis) const { return shape_.at(axis); }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  std::span<double> values() noexcept { return data_; }
  std::span<const double> values() const noexcept { return data_; }
  double* data() noexcept { return data_.data(); }
  const double* data() const noexcept { return data_.data(); }
  std::vector<double>& storage() noexcept { return data_; }
  const std::vector<double>& storage() const noexcept { return data_; }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  double& at(std::initializer_list<std::size_t> index) {
    return data_[offset(index)];
  }
  double at(std::initializer_list<std::size_t> index) const {
    return data_[offset(index)];
  }

  // Same data, new shape of equal element count.
  Tensor reshaped(Shape shape) const {
    require(shape_size(shape) == size(), ErrorKind::invalid_input,
            "cannot reshape ", shape_string(shape_), " to ",
            shape_string(shape));
    return Tensor(std::move(shape), data_);
  }

  void fill(double value) { std::fill(data_.begin(), data_.end(), value); }

  Tensor& operator+=(const Tensor& other) {
    require(other.shape_ == shape_, ErrorKind::invalid_input,
            "shape mismatch in +=: ", shape_string(shape_), " vs ",
            shape_string(other.shape_));
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
    return *this;
  }

  Tensor& operator*=(double factor) {
    for (double& v : data_) v *= factor;
    return *this;
  }

  double sum() const { return std::accumulate(data_.begin(), data_.end(), 0.0); }

  double max() const {
    require(!data_.empty(), ErrorKind::invalid_input, "max of empty tensor");
    return *std::max_element(data_.begin(), data_.end());
  }

  bool all_finite() const {
    return std::all_of(data_.begin(), data_.end(),
                       [](double v) { return std::isfinite(v); });
  }

  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  void check_rank() const {
    require(shape_.size() <= kMaxRank, ErrorKind::invalid_input,
            "tensor rank ", shape_.size(), " exceeds ", kMaxRank);
  }

  std::size_t offset(std::initializer_list<std::size_t> index) const {
    require(index.size() == shape_.size(), ErrorKind::invalid_input,
            "index rank ", index.size(), " does not match tensor rank ",
            shape_.size());
    std::size_t off = 0;
    std::size_t axis = 0;
    for (std::size_t i : index) {
      require(i < shape_[axis], ErrorKind::invalid_input, "index ", i,
              " out of range on axis ", axis);
      off = off * shape_[axis] + i;
      ++axis;
    }
    return off;
  }

  Shape shape_;
  std::vector<double> data_;
};

}  // namespace fairst
