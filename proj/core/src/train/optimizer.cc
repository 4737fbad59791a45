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

#include "usrc/train/optimizer.h"

#include <cmath>

#include "usrc/error.h"

namespace usrc::train {

void AdamW::Step(const nn::ParameterList<float>& params, double lr) {
  if (m_.empty()) {
    for (const auto* p : params) {
      m_.emplace_back(p->value.size(), 0.0f);
      v_.emplace_back(p->value.size(), 0.0f);
    }
  }
  if (m_.size() != params.size()) {
    Fail(ErrorClass::kShape, "optimizer parameter list changed size");
  }
  ++steps_;
  const double bc1 = 1.0 - std::pow(opt_.beta1, static_cast<double>(steps_));
  const double bc2 = 1.0 - std::pow(opt_.beta2, static_cast<double>(steps_));
  const float b1 = static_cast<float>(opt_.beta1);
  const float b2 = static_cast<float>(opt_.beta2);
  const float decay = static_cast<float>(1.0 - lr * opt_.weight_decay);
  const float step = static_cast<float>(lr / bc1);
  const float root_bc2 = static_cast<float>(std::sqrt(bc2));
  const float eps = static_cast<float>(opt_.eps);
  for (std::size_t k = 0; k < params.size(); ++k) {
    nn::Parameter<float>& p = *params[k];
    if (m_[k].size() != p.value.size()) {
      Fail(ErrorClass::kShape, "optimizer state does not match " + p.name);
    }
    float* w = p.value.data();
    const float* g = p.grad.data();
    float* m = m_[k].data();
    float* v = v_[k].data();
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      m[i] = b1 * m[i] + (1.0f - b1) * g[i];
      v[i] = b2 * v[i] + (1.0f - b2) * g[i] * g[i];
      w[i] *= decay;
      w[i] -= step * m[i] / (std::sqrt(v[i]) / root_bc2 + eps);
    }
  }
}

}  // namespace usrc::train
