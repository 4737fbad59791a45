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

#include "usrc/nn/tensor.h"

#include <cmath>

namespace usrc::nn {

std::string ShapeString(const std::array<int, 4>& s) {
  return "[" + std::to_string(s[0]) + "x" + std::to_string(s[1]) + "x" +
         std::to_string(s[2]) + "x" + std::to_string(s[3]) + "]";
}

template <typename T>
bool AllFinite(const Tensor<T>& t) {
  for (T v : t.vec()) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

template <typename T>
void AddInPlace(Tensor<T>& dst, const Tensor<T>& src) {
  RequireSameShape(dst, src, "AddInPlace");
  T* d = dst.data();
  const T* s = src.data();
  for (std::size_t i = 0; i < dst.size(); ++i) d[i] += s[i];
}

template bool AllFinite(const Tensor<float>&);
template bool AllFinite(const Tensor<double>&);
template void AddInPlace(Tensor<float>&, const Tensor<float>&);
template void AddInPlace(Tensor<double>&, const Tensor<double>&);

}  // namespace usrc::nn
