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

#ifndef USRC_MODEL_CODEC_MODEL_H_
#define USRC_MODEL_CODEC_MODEL_H_

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "usrc/dsp/spectral.h"
#include "usrc/model/codec_config.h"
#include "usrc/nn/layers.h"
#include "usrc/nn/tensor.h"

namespace usrc::model {

// out = skip(x) + conv(act(GN(conv(act(GN(x)))))), where skip is identity or
// a 1x1 projection when the channel count changes.
template <typename T>
class ResBlock {
 public:
  struct Trace {
    typename nn::GroupNorm<T>::Trace gn1, gn2;
    nn::Tensor<T> x, h1, a1, c1, h2, a2;
  };

  ResBlock() = default;
  ResBlock(const std::string& name, int in_channels, int out_channels,
           int groups, std::mt19937_64& rng, int kernel = 3);

  nn::Tensor<T> Forward(const nn::Tensor<T>& x, Trace* trace) const;
  nn::Tensor<T> Backward(const Trace& trace, const nn::Tensor<T>& dy);

  // Zeroes the residual branch's last conv so the block reduces to skip(x).
  void ZeroResidual();

  void CollectParameters(nn::ParameterList<T>& out);
  int in_channels() const { return in_; }
  int out_channels() const { return out_; }
  nn::GroupNorm<T>& gn1() { return gn1_; }
  nn::GroupNorm<T>& gn2() { return gn2_; }
  nn::Conv2d<T>& conv1() { return conv1_; }
  nn::Conv2d<T>& conv2() { return conv2_; }
  bool has_projection() const { return in_ != out_; }
  nn::Conv2d<T>& projection() { return proj_; }

 private:
  int in_ = 0;
  int out_ = 0;
  nn::GroupNorm<T> gn1_, gn2_;
  nn::Conv2d<T> conv1_, conv2_, proj_;
};

template <typename T>
class Encoder {
 public:
  struct StageTrace {
    nn::Tensor<T> down_in;
    std::vector<typename ResBlock<T>::Trace> res;
  };
  struct Trace {
    nn::Tensor<T> input;
    std::vector<StageTrace> stages;
    nn::Tensor<T> head_in, head_norm, head_act;
    typename nn::GroupNorm<T>::Trace head_gn;
  };

  Encoder() = default;
  Encoder(const EncoderConfig& cfg, std::mt19937_64& rng);

  // [N, in, F, T] -> [N, latent, F / freq factor, T / time factor].
  nn::Tensor<T> Forward(const nn::Tensor<T>& x, Trace* trace) const;
  // Returns dL/dx only when need_dx is set.
  nn::Tensor<T> Backward(const Trace& trace, const nn::Tensor<T>& dz,
                         bool need_dx = false);

  void CollectParameters(nn::ParameterList<T>& out);
  const EncoderConfig& config() const { return cfg_; }

 private:
  struct Stage {
    nn::Conv2d<T> down;
    std::vector<ResBlock<T>> res;
  };
  EncoderConfig cfg_;
  nn::Conv2d<T> conv_in_;
  std::vector<Stage> stages_;
  nn::GroupNorm<T> head_gn_;
  nn::Conv2d<T> head_conv_;
};

template <typename T>
class Decoder {
 public:
  struct StageTrace {
    std::vector<typename ResBlock<T>::Trace> res;
    nn::Tensor<T> norm_in, norm_out;  // last stage only
    typename nn::GroupNorm<T>::Trace gn;
    nn::Tensor<T> up;
  };
  struct Trace {
    nn::Tensor<T> input;
    std::vector<StageTrace> stages;
  };

  Decoder() = default;
  Decoder(const DecoderConfig& cfg, int latent_channels,
          std::mt19937_64& rng);

  // Unclamped output, [N, out, F * freq factor, T * time factor].
  nn::Tensor<T> Forward(const nn::Tensor<T>& z, Trace* trace) const;
  nn::Tensor<T> Backward(const Trace& trace, const nn::Tensor<T>& dy);

  void CollectParameters(nn::ParameterList<T>& out);
  const DecoderConfig& config() const { return cfg_; }
  int latent_channels() const { return latent_; }

 private:
  struct Stage {
    std::vector<ResBlock<T>> res;
    nn::GroupNorm<T> gn;  // last stage only
    nn::Conv2d<T> conv;
  };
  DecoderConfig cfg_;
  int latent_ = 0;
  nn::Conv2d<T> conv_in_;
  std::vector<Stage> stages_;
};

// [C x F_lat x T_lat] latent plus the padding the encoder added.
struct LatentGrid {
  nn::Tensor<float> values;  // n == 1
  int pad_bins = 0;
  int pad_frames = 0;

  int channels() const { return values.c(); }
  int freq() const { return values.h(); }
  int frames() const { return values.w(); }
};

// Pads [F x T] up to multiples of the given factors with fill.
dsp::Grid PadToMultiple(const dsp::Grid& g, int freq_factor, int time_factor,
                        double fill, int* pad_bins, int* pad_frames);

template <typename T>
class CodecModel {
 public:
  CodecModel() = default;
  CodecModel(const CodecConfig& cfg, std::uint64_t seed);

  const CodecConfig& config() const { return cfg_; }
  Encoder<T>& encoder() { return encoder_; }
  Decoder<T>& decoder() { return decoder_; }
  const Encoder<T>& encoder() const { return encoder_; }
  const Decoder<T>& decoder() const { return decoder_; }

  // Named parameters: encoder.* then decoder.*.
  nn::ParameterList<T> Parameters();
  long long CountParameters();

  // Mel-facing inference API (float path).
  LatentGrid Encode(const dsp::MelSpectrogram& mel) const;
  dsp::MelSpectrogram Decode(const LatentGrid& latent) const;

 private:
  CodecConfig cfg_;
  Encoder<T> encoder_;
  Decoder<T> decoder_;
};

nn::Tensor<float> GridToTensor(const dsp::Grid& g);
dsp::Grid TensorToGrid(const nn::Tensor<float>& t, int n = 0, int c = 0);

}  // namespace usrc::model

#endif  // USRC_MODEL_CODEC_MODEL_H_
