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

#ifndef USRC_TRAIN_OPTIMIZER_H_
#define USRC_TRAIN_OPTIMIZER_H_

#include <vector>

#include "usrc/nn/layers.h"

namespace usrc::train {

struct AdamWOptions {
  double beta1 = 0.8;
  double beta2 = 0.99;
  double eps = 1e-8;
  double weight_decay = 0.01;
};

// Adam with decoupled weight decay. Moments are kept per parameter in the
// order of the list passed to Step, which must not change between calls.
class AdamW {
 public:
  AdamW() = default;
  explicit AdamW(const AdamWOptions& opt) : opt_(opt) {}

  void Step(const nn::ParameterList<float>& params, double lr);

  long long steps() const { return steps_; }
  const AdamWOptions& options() const { return opt_; }
  std::vector<std::vector<float>>& first_moments() { return m_; }
  std::vector<std::vector<float>>& second_moments() { return v_; }
  void set_steps(long long s) { steps_ = s; }

 private:
  AdamWOptions opt_;
  long long steps_ = 0;
  std::vector<std::vector<float>> m_;
  std::vector<std::vector<float>> v_;
};

}  // namespace usrc::train

#endif  // USRC_TRAIN_OPTIMIZER_H_
