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

#include "usrc/train/discriminator.h"

#include "usrc/error.h"

namespace usrc::train {

using nn::Tensor;

void DiscriminatorConfig::Validate() const {
  if (channels.empty()) Fail(ErrorClass::kConfig, "discriminator has no stages");
  if (kernel < 1 || kernel % 2 == 0) {
    Fail(ErrorClass::kConfig, "discriminator kernel must be odd");
  }
  if (stride < 1 || in_channels < 1) {
    Fail(ErrorClass::kConfig, "discriminator stride/in_channels must be >= 1");
  }
  for (int c : channels) {
    if (c < 1) Fail(ErrorClass::kConfig, "discriminator channels must be >= 1");
  }
}

template <typename T>
Discriminator<T>::Discriminator(const DiscriminatorConfig& cfg,
                                std::mt19937_64& rng)
    : cfg_(cfg) {
  cfg.Validate();
  const int pad = cfg.kernel / 2;
  int prev = cfg.in_channels;
  for (std::size_t s = 0; s < cfg.channels.size(); ++s) {
    nn::ConvGeometry g{prev,       cfg.channels[s], cfg.kernel, cfg.kernel,
                       cfg.stride, cfg.stride,      pad,        pad};
    stages_.emplace_back("disc.stage" + std::to_string(s), g, rng);
    prev = cfg.channels[s];
  }
  head_ = nn::WeightNormConv2d<T>(
      "disc.head", {prev, 1, cfg.kernel, cfg.kernel, 1, 1, pad, pad}, rng);
}

template <typename T>
typename Discriminator<T>::Output Discriminator<T>::Forward(const Tensor<T>& x,
                                                            Trace* trace) const {
  if (x.c() != cfg_.in_channels) {
    Fail(ErrorClass::kShape, "discriminator input channel mismatch");
  }
  Output out;
  if (trace) {
    trace->inputs.clear();
    trace->pre.clear();
  }
  const T slope = static_cast<T>(cfg_.slope);
  Tensor<T> cur = x;
  for (const auto& stage : stages_) {
    Tensor<T> pre = stage.Forward(cur);
    Tensor<T> act = nn::LeakyReluForward(pre, slope);
    if (trace) {
      trace->inputs.push_back(std::move(cur));
      trace->pre.push_back(std::move(pre));
    }
    out.features.push_back(act);
    cur = std::move(act);
  }
  out.logits = head_.Forward(cur);
  if (trace) trace->head_in = std::move(cur);
  return out;
}

template <typename T>
Tensor<T> Discriminator<T>::Backward(const Trace& trace, const Tensor<T>& dlogits,
                                     const std::vector<Tensor<T>>* dfeatures) {
  const T slope = static_cast<T>(cfg_.slope);
  Tensor<T> d = head_.Backward(trace.head_in, dlogits);
  for (std::size_t s = stages_.size(); s-- > 0;) {
    if (dfeatures && s < dfeatures->size() && !(*dfeatures)[s].empty()) {
      nn::AddInPlace(d, (*dfeatures)[s]);
    }
    d = nn::LeakyReluBackward(trace.pre[s], d, slope);
    d = stages_[s].Backward(trace.inputs[s], d);
  }
  return d;
}

template <typename T>
void Discriminator<T>::CollectParameters(nn::ParameterList<T>& out) {
  for (auto& s : stages_) s.CollectParameters(out);
  head_.CollectParameters(out);
}

template <typename T>
nn::ParameterList<T> Discriminator<T>::Parameters() {
  nn::ParameterList<T> out;
  CollectParameters(out);
  return out;
}

template class Discriminator<float>;
template class Discriminator<double>;

}  // namespace usrc::train
