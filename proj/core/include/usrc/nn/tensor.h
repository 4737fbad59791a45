// Copyright 2026 The usrc Authors
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

#ifndef USRC_NN_TENSOR_H_
#define USRC_NN_TENSOR_H_

#include <algorithm>
#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "usrc/error.h"

namespace usrc::nn {

// Dense 4D tensor in NCHW layout. For Mel grids H is the frequency axis and W
// is the time axis.
template <typename T>
class Tensor {
 public:
  using Shape = std::array<int, 4>;
  // Packet-aligned so vectorized reductions sum in the same order wherever
  // the buffer lands on the heap.
  using Storage = std::vector<T, Eigen::aligned_allocator<T>>;

  Tensor() = default;
  Tensor(int n, int c, int h, int w, T fill = T(0))
      : shape_{n, c, h, w},
        data_(static_cast<std::size_t>(n) * c * h * w, fill) {}
  explicit Tensor(const Shape& s, T fill = T(0))
      : Tensor(s[0], s[1], s[2], s[3], fill) {}

  int n() const { return shape_[0]; }
  int c() const { return shape_[1]; }
  int h() const { return shape_[2]; }
  int w() const { return shape_[3]; }
  const Shape& shape() const { return shape_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }
  std::span<T> span() { return data_; }
  std::span<const T> span() const { return data_; }
  Storage& vec() { return data_; }
  const Storage& vec() const { return data_; }

  std::size_t index(int n, int c, int h, int w) const {
    return ((static_cast<std::size_t>(n) * shape_[1] + c) * shape_[2] + h) *
               shape_[3] +
           w;
  }
  T& at(int n, int c, int h, int w) { return data_[index(n, c, h, w)]; }
  const T& at(int n, int c, int h, int w) const {
    return data_[index(n, c, h, w)];
  }

  // Pointer to the start of one (n, c) plane of h*w elements.
  T* plane(int n, int c) { return data_.data() + index(n, c, 0, 0); }
  const T* plane(int n, int c) const {
    return data_.data() + index(n, c, 0, 0);
  }
  // Pointer to sample n (c*h*w elements).
  T* sample(int n) { return data_.data() + index(n, 0, 0, 0); }
  const T* sample(int n) const { return data_.data() + index(n, 0, 0, 0); }

  void Fill(T v) { std::fill(data_.begin(), data_.end(), v); }
  bool SameShape(const Tensor& o) const { return shape_ == o.shape_; }

  template <typename U>
  Tensor<U> Cast() const {
    Tensor<U> out(shape_);
    for (std::size_t i = 0; i < data_.size(); ++i) {
      out.data()[i] = static_cast<U>(data_[i]);
    }
    return out;
  }

 private:
  Shape shape_{0, 0, 0, 0};
  Storage data_;
};

std::string ShapeString(const std::array<int, 4>& s);

template <typename T>
void RequireSameShape(const Tensor<T>& a, const Tensor<T>& b,
                      const char* what) {
  if (!a.SameShape(b)) {
    Fail(ErrorClass::kShape, std::string(what) + ": shape " +
                                 ShapeString(a.shape()) + " vs " +
                                 ShapeString(b.shape()));
  }
}

template <typename T>
bool AllFinite(const Tensor<T>& t);

// Elementwise helpers used by the backward passes.
template <typename T>
void AddInPlace(Tensor<T>& dst, const Tensor<T>& src);

}  // namespace usrc::nn

#endif  // USRC_NN_TENSOR_H_
