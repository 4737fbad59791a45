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

#ifndef USRC_TRAIN_DISCRIMINATOR_H_
#define USRC_TRAIN_DISCRIMINATOR_H_

#include <random>
#include <vector>

#include "usrc/nn/layers.h"
#include "usrc/nn/tensor.h"

namespace usrc::train {

struct DiscriminatorConfig {
  int in_channels = 1;
  std::vector<int> channels{32, 64, 128, 256};
  int kernel = 3;
  int stride = 2;
  double slope = 0.1;

  void Validate() const;
};

// Single-resolution convolutional critic over a Mel grid. Each stage is a
// weight-normalized strided conv followed by a leaky ReLU; a 1-channel conv
// head produces the logit map.
template <typename T>
class Discriminator {
 public:
  struct Output {
    nn::Tensor<T> logits;
    std::vector<nn::Tensor<T>> features;  // post-activation, one per stage
  };
  struct Trace {
    std::vector<nn::Tensor<T>> inputs;  // stage inputs
    std::vector<nn::Tensor<T>> pre;     // stage pre-activations
    nn::Tensor<T> head_in;
  };

  Discriminator() = default;
  Discriminator(const DiscriminatorConfig& cfg, std::mt19937_64& rng);

  Output Forward(const nn::Tensor<T>& x, Trace* trace) const;

  // dfeatures may be null or hold empty tensors for stages without a gradient.
  nn::Tensor<T> Backward(const Trace& trace, const nn::Tensor<T>& dlogits,
                         const std::vector<nn::Tensor<T>>* dfeatures);

  void CollectParameters(nn::ParameterList<T>& out);
  nn::ParameterList<T> Parameters();
  const DiscriminatorConfig& config() const { return cfg_; }
  std::vector<nn::WeightNormConv2d<T>>& stages() { return stages_; }
  nn::WeightNormConv2d<T>& head() { return head_; }

 private:
  DiscriminatorConfig cfg_;
  std::vector<nn::WeightNormConv2d<T>> stages_;
  nn::WeightNormConv2d<T> head_;
};

}  // namespace usrc::train

#endif  // USRC_TRAIN_DISCRIMINATOR_H_
