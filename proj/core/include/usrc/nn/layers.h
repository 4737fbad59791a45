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

// Building blocks for the codec and the discriminator. Every layer exposes a
// Forward that optionally records what its Backward needs into a caller-owned
// Trace, so one set of weights can be run several times per training step
// (the discriminator sees both real and reconstructed grids) without the
// traces clobbering each other. Backward accumulates into parameter grads.

#ifndef USRC_NN_LAYERS_H_
#define USRC_NN_LAYERS_H_

#include <random>
#include <string>
#include <vector>

#include "usrc/nn/tensor.h"

namespace usrc::nn {

template <typename T>
struct Parameter {
  std::string name;
  Tensor<T> value;
  Tensor<T> grad;

  Parameter() = default;
  Parameter(std::string n, const typename Tensor<T>::Shape& s)
      : name(std::move(n)), value(s), grad(s) {}

  void ZeroGrad() { grad.Fill(T(0)); }
};

template <typename T>
using ParameterList = std::vector<Parameter<T>*>;

struct ConvGeometry {
  int in_channels = 1;
  int out_channels = 1;
  int kernel_h = 3;
  int kernel_w = 3;
  int stride_h = 1;
  int stride_w = 1;
  int pad_h = 1;
  int pad_w = 1;

  int OutH(int h) const { return (h + 2 * pad_h - kernel_h) / stride_h + 1; }
  int OutW(int w) const { return (w + 2 * pad_w - kernel_w) / stride_w + 1; }
  long long WeightCount() const {
    return static_cast<long long>(out_channels) * in_channels * kernel_h *
           kernel_w;
  }

  static ConvGeometry Same3x3(int in, int out) {
    return {in, out, 3, 3, 1, 1, 1, 1};
  }
  static ConvGeometry Pointwise(int in, int out) {
    return {in, out, 1, 1, 1, 1, 0, 0};
  }
  // Strided conv that divides each axis exactly by its factor when the input
  // length is a multiple of it. Odd kernel >= factor so no input is skipped.
  static ConvGeometry Downsample(int in, int out, int factor_h, int factor_w);
};

// y = conv(x, weight) + bias. weight is [out, in, kh, kw]; bias may be null.
template <typename T>
Tensor<T> ConvForward(const Tensor<T>& x, const Tensor<T>& weight,
                      const T* bias, const ConvGeometry& g);

// Accumulates dL/dweight and dL/dbias (either may be null) and returns dL/dx
// when need_dx is set (an empty tensor otherwise).
template <typename T>
Tensor<T> ConvBackward(const Tensor<T>& x, const Tensor<T>& weight,
                       const Tensor<T>& dy, const ConvGeometry& g,
                       Tensor<T>* dweight, Tensor<T>* dbias, bool need_dx);

template <typename T>
class Conv2d {
 public:
  Conv2d() = default;
  Conv2d(const std::string& name, const ConvGeometry& g, std::mt19937_64& rng);

  Tensor<T> Forward(const Tensor<T>& x) const;
  // x must be the tensor passed to the matching Forward.
  Tensor<T> Backward(const Tensor<T>& x, const Tensor<T>& dy,
                     bool need_dx = true);

  void CollectParameters(ParameterList<T>& out);
  const ConvGeometry& geometry() const { return geom_; }
  Parameter<T>& weight() { return weight_; }
  Parameter<T>& bias() { return bias_; }

 private:
  ConvGeometry geom_;
  Parameter<T> weight_;
  Parameter<T> bias_;
};

// Convolution whose kernel is reparameterized per output channel as
// w = g * v / |v|.
template <typename T>
class WeightNormConv2d {
 public:
  WeightNormConv2d() = default;
  WeightNormConv2d(const std::string& name, const ConvGeometry& g,
                   std::mt19937_64& rng);

  Tensor<T> Forward(const Tensor<T>& x) const;
  Tensor<T> Backward(const Tensor<T>& x, const Tensor<T>& dy,
                     bool need_dx = true);

  Tensor<T> EffectiveWeight() const;
  void CollectParameters(ParameterList<T>& out);
  const ConvGeometry& geometry() const { return geom_; }
  Parameter<T>& direction() { return v_; }
  Parameter<T>& magnitude() { return g_; }
  Parameter<T>& bias() { return bias_; }

 private:
  ConvGeometry geom_;
  Parameter<T> v_;
  Parameter<T> g_;
  Parameter<T> bias_;
};

template <typename T>
class GroupNorm {
 public:
  struct Trace {
    std::vector<T> mean;
    std::vector<T> rstd;
  };

  GroupNorm() = default;
  GroupNorm(const std::string& name, int groups, int channels,
            T eps = T(1e-5));

  Tensor<T> Forward(const Tensor<T>& x, Trace* trace) const;
  Tensor<T> Backward(const Tensor<T>& x, const Trace& trace,
                     const Tensor<T>& dy);

  void CollectParameters(ParameterList<T>& out);
  int groups() const { return groups_; }
  int channels() const { return channels_; }
  Parameter<T>& gamma() { return gamma_; }
  Parameter<T>& beta() { return beta_; }

 private:
  int groups_ = 1;
  int channels_ = 1;
  T eps_ = T(1e-5);
  Parameter<T> gamma_;
  Parameter<T> beta_;
};

template <typename T>
Tensor<T> SiluForward(const Tensor<T>& x);
template <typename T>
Tensor<T> SiluBackward(const Tensor<T>& x, const Tensor<T>& dy);

template <typename T>
Tensor<T> LeakyReluForward(const Tensor<T>& x, T slope);
template <typename T>
Tensor<T> LeakyReluBackward(const Tensor<T>& x, const Tensor<T>& dy, T slope);

template <typename T>
Tensor<T> UpsampleNearest(const Tensor<T>& x, int factor_h, int factor_w);
template <typename T>
Tensor<T> UpsampleNearestBackward(const Tensor<T>& dy, int factor_h,
                                  int factor_w);

// PyTorch-style default init: U(-1/sqrt(fan_in), 1/sqrt(fan_in)).
template <typename T>
void UniformFanInInit(Tensor<T>& t, int fan_in, std::mt19937_64& rng);

template <typename T>
long long CountScalars(const ParameterList<T>& params);

}  // namespace usrc::nn

#endif  // USRC_NN_LAYERS_H_
