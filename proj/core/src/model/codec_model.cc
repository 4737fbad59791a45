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

#include "usrc/model/codec_model.h"

#include <algorithm>
#include <cmath>

#include "usrc/error.h"

namespace usrc::model {

using nn::Tensor;

template <typename T>
ResBlock<T>::ResBlock(const std::string& name, int in_channels,
                      int out_channels, int groups, std::mt19937_64& rng,
                      int kernel)
    : in_(in_channels),
      out_(out_channels),
      gn1_(name + ".gn1", groups, in_channels),
      gn2_(name + ".gn2", groups, out_channels) {
  const int pad = kernel / 2;
  conv1_ = nn::Conv2d<T>(
      name + ".conv1",
      {in_channels, out_channels, kernel, kernel, 1, 1, pad, pad}, rng);
  conv2_ = nn::Conv2d<T>(
      name + ".conv2",
      {out_channels, out_channels, kernel, kernel, 1, 1, pad, pad}, rng);
  if (in_channels != out_channels) {
    proj_ = nn::Conv2d<T>(name + ".proj",
                          nn::ConvGeometry::Pointwise(in_channels, out_channels),
                          rng);
  }
}

template <typename T>
Tensor<T> ResBlock<T>::Forward(const Tensor<T>& x, Trace* trace) const {
  if (x.c() != in_) {
    Fail(ErrorClass::kShape, "resblock expects " + std::to_string(in_) +
                                 " channels, got " + std::to_string(x.c()));
  }
  typename nn::GroupNorm<T>::Trace g1, g2;
  Tensor<T> h1 = gn1_.Forward(x, &g1);
  Tensor<T> a1 = nn::SiluForward(h1);
  Tensor<T> c1 = conv1_.Forward(a1);
  Tensor<T> h2 = gn2_.Forward(c1, &g2);
  Tensor<T> a2 = nn::SiluForward(h2);
  Tensor<T> y = conv2_.Forward(a2);
  if (has_projection()) {
    nn::AddInPlace(y, proj_.Forward(x));
  } else {
    nn::AddInPlace(y, x);
  }
  if (trace) {
    trace->gn1 = std::move(g1);
    trace->gn2 = std::move(g2);
    trace->x = x;
    trace->h1 = std::move(h1);
    trace->a1 = std::move(a1);
    trace->c1 = std::move(c1);
    trace->h2 = std::move(h2);
    trace->a2 = std::move(a2);
  }
  return y;
}

template <typename T>
Tensor<T> ResBlock<T>::Backward(const Trace& tr, const Tensor<T>& dy) {
  Tensor<T> d = conv2_.Backward(tr.a2, dy);
  d = nn::SiluBackward(tr.h2, d);
  d = gn2_.Backward(tr.c1, tr.gn2, d);
  d = conv1_.Backward(tr.a1, d);
  d = nn::SiluBackward(tr.h1, d);
  Tensor<T> dx = gn1_.Backward(tr.x, tr.gn1, d);
  if (has_projection()) {
    nn::AddInPlace(dx, proj_.Backward(tr.x, dy));
  } else {
    nn::AddInPlace(dx, dy);
  }
  return dx;
}

template <typename T>
void ResBlock<T>::ZeroResidual() {
  conv2_.weight().value.Fill(T(0));
  conv2_.bias().value.Fill(T(0));
}

template <typename T>
void ResBlock<T>::CollectParameters(nn::ParameterList<T>& out) {
  gn1_.CollectParameters(out);
  conv1_.CollectParameters(out);
  gn2_.CollectParameters(out);
  conv2_.CollectParameters(out);
  if (has_projection()) proj_.CollectParameters(out);
}

template <typename T>
Encoder<T>::Encoder(const EncoderConfig& cfg, std::mt19937_64& rng)
    : cfg_(cfg) {
  cfg.Validate();
  const int c0 = cfg.channel_schedule.front();
  conv_in_ = nn::Conv2d<T>("encoder.conv_in",
                           nn::ConvGeometry::Same3x3(cfg.in_channels, c0), rng);
  int prev = c0;
  for (std::size_t s = 0; s < cfg.channel_schedule.size(); ++s) {
    const int c = cfg.channel_schedule[s];
    const std::string p = "encoder.stage" + std::to_string(s);
    Stage st;
    st.down = nn::Conv2d<T>(
        p + ".down",
        nn::ConvGeometry::Downsample(prev, c, cfg.freq_down[s], cfg.time_down[s]),
        rng);
    for (int r = 0; r < cfg.resblocks_per_stage; ++r) {
      st.res.emplace_back(p + ".res" + std::to_string(r), c, c,
                          cfg.groupnorm_groups, rng);
    }
    stages_.push_back(std::move(st));
    prev = c;
  }
  head_gn_ = nn::GroupNorm<T>("encoder.head.gn", cfg.groupnorm_groups, prev);
  head_conv_ = nn::Conv2d<T>(
      "encoder.head.conv",
      nn::ConvGeometry::Same3x3(prev, cfg.LatentChannels()), rng);
}

template <typename T>
Tensor<T> Encoder<T>::Forward(const Tensor<T>& x, Trace* trace) const {
  if (x.c() != cfg_.in_channels) {
    Fail(ErrorClass::kShape, "encoder input has " + std::to_string(x.c()) +
                                 " channels, expected " +
                                 std::to_string(cfg_.in_channels));
  }
  if (x.h() % cfg_.FreqFactor() != 0 || x.w() % cfg_.TimeFactor() != 0) {
    Fail(ErrorClass::kShape, "encoder input " + nn::ShapeString(x.shape()) +
                                 " is not a multiple of the down factors");
  }
  if (trace) {
    trace->input = x;
    trace->stages.assign(stages_.size(), {});
  }
  Tensor<T> cur = conv_in_.Forward(x);
  for (std::size_t s = 0; s < stages_.size(); ++s) {
    StageTrace* st = trace ? &trace->stages[s] : nullptr;
    if (st) {
      st->down_in = cur;
      st->res.assign(stages_[s].res.size(), {});
    }
    cur = stages_[s].down.Forward(cur);
    for (std::size_t r = 0; r < stages_[s].res.size(); ++r) {
      cur = stages_[s].res[r].Forward(cur, st ? &st->res[r] : nullptr);
    }
  }
  typename nn::GroupNorm<T>::Trace g;
  Tensor<T> norm = head_gn_.Forward(cur, &g);
  Tensor<T> act = nn::SiluForward(norm);
  Tensor<T> z = head_conv_.Forward(act);
  if (trace) {
    trace->head_in = std::move(cur);
    trace->head_norm = std::move(norm);
    trace->head_act = std::move(act);
    trace->head_gn = std::move(g);
  }
  return z;
}

template <typename T>
Tensor<T> Encoder<T>::Backward(const Trace& tr, const Tensor<T>& dz,
                              bool need_dx) {
  Tensor<T> d = head_conv_.Backward(tr.head_act, dz);
  d = nn::SiluBackward(tr.head_norm, d);
  d = head_gn_.Backward(tr.head_in, tr.head_gn, d);
  for (std::size_t s = stages_.size(); s-- > 0;) {
    const StageTrace& st = tr.stages[s];
    for (std::size_t r = stages_[s].res.size(); r-- > 0;) {
      d = stages_[s].res[r].Backward(st.res[r], d);
    }
    d = stages_[s].down.Backward(st.down_in, d);
  }
  return conv_in_.Backward(tr.input, d, need_dx);
}

template <typename T>
void Encoder<T>::CollectParameters(nn::ParameterList<T>& out) {
  conv_in_.CollectParameters(out);
  for (Stage& st : stages_) {
    st.down.CollectParameters(out);
    for (ResBlock<T>& r : st.res) r.CollectParameters(out);
  }
  head_gn_.CollectParameters(out);
  head_conv_.CollectParameters(out);
}

template <typename T>
Decoder<T>::Decoder(const DecoderConfig& cfg, int latent_channels,
                    std::mt19937_64& rng)
    : cfg_(cfg), latent_(latent_channels) {
  cfg.Validate();
  conv_in_ = nn::Conv2d<T>(
      "decoder.conv_in",
      nn::ConvGeometry::Same3x3(latent_channels, latent_channels), rng);
  int prev = latent_channels;
  const std::size_t n = cfg.channel_schedule.size();
  for (std::size_t s = 0; s < n; ++s) {
    const std::string p = "decoder.stage" + std::to_string(s);
    Stage st;
    for (int r = 0; r < cfg.resblocks_per_stage; ++r) {
      st.res.emplace_back(p + ".res" + std::to_string(r), prev, prev,
                          cfg.groupnorm_groups, rng);
    }
    if (s + 1 == n) {
      st.gn = nn::GroupNorm<T>(p + ".gn", cfg.groupnorm_groups, prev);
    }
    st.conv = nn::Conv2d<T>(
        p + ".conv", nn::ConvGeometry::Same3x3(prev, cfg.channel_schedule[s]),
        rng);
    prev = cfg.channel_schedule[s];
    stages_.push_back(std::move(st));
  }
}

template <typename T>
Tensor<T> Decoder<T>::Forward(const Tensor<T>& z, Trace* trace) const {
  if (z.c() != latent_) {
    Fail(ErrorClass::kShape, "decoder expects " + std::to_string(latent_) +
                                 " latent channels, got " +
                                 std::to_string(z.c()));
  }
  if (trace) {
    trace->input = z;
    trace->stages.assign(stages_.size(), {});
  }
  Tensor<T> cur = conv_in_.Forward(z);
  for (std::size_t s = 0; s < stages_.size(); ++s) {
    StageTrace* st = trace ? &trace->stages[s] : nullptr;
    if (st) st->res.assign(stages_[s].res.size(), {});
    for (std::size_t r = 0; r < stages_[s].res.size(); ++r) {
      cur = stages_[s].res[r].Forward(cur, st ? &st->res[r] : nullptr);
    }
    if (s + 1 == stages_.size()) {
      typename nn::GroupNorm<T>::Trace g;
      Tensor<T> norm = stages_[s].gn.Forward(cur, &g);
      Tensor<T> act = nn::SiluForward(norm);
      if (st) {
        st->norm_in = std::move(cur);
        st->norm_out = std::move(norm);
        st->gn = std::move(g);
      }
      cur = std::move(act);
    }
    Tensor<T> up = nn::UpsampleNearest(cur, cfg_.freq_up[s], cfg_.time_up[s]);
    cur = stages_[s].conv.Forward(up);
    if (st) st->up = std::move(up);
  }
  return cur;
}

template <typename T>
Tensor<T> Decoder<T>::Backward(const Trace& tr, const Tensor<T>& dy) {
  Tensor<T> d = dy;
  for (std::size_t s = stages_.size(); s-- > 0;) {
    const StageTrace& st = tr.stages[s];
    d = stages_[s].conv.Backward(st.up, d);
    d = nn::UpsampleNearestBackward(d, cfg_.freq_up[s], cfg_.time_up[s]);
    if (s + 1 == stages_.size()) {
      d = nn::SiluBackward(st.norm_out, d);
      d = stages_[s].gn.Backward(st.norm_in, st.gn, d);
    }
    for (std::size_t r = stages_[s].res.size(); r-- > 0;) {
      d = stages_[s].res[r].Backward(st.res[r], d);
    }
  }
  return conv_in_.Backward(tr.input, d, true);
}

template <typename T>
void Decoder<T>::CollectParameters(nn::ParameterList<T>& out) {
  conv_in_.CollectParameters(out);
  for (std::size_t s = 0; s < stages_.size(); ++s) {
    for (ResBlock<T>& r : stages_[s].res) r.CollectParameters(out);
    if (s + 1 == stages_.size()) stages_[s].gn.CollectParameters(out);
    stages_[s].conv.CollectParameters(out);
  }
}

dsp::Grid PadToMultiple(const dsp::Grid& g, int freq_factor, int time_factor,
                        double fill, int* pad_bins, int* pad_frames) {
  const int f = static_cast<int>(g.rows());
  const int t = static_cast<int>(g.cols());
  const int pf = (freq_factor - f % freq_factor) % freq_factor;
  const int pt = (time_factor - t % time_factor) % time_factor;
  dsp::Grid out = dsp::Grid::Constant(f + pf, t + pt, fill);
  out.topLeftCorner(f, t) = g;
  if (pad_bins) *pad_bins = pf;
  if (pad_frames) *pad_frames = pt;
  return out;
}

nn::Tensor<float> GridToTensor(const dsp::Grid& g) {
  nn::Tensor<float> t(1, 1, static_cast<int>(g.rows()),
                      static_cast<int>(g.cols()));
  for (Eigen::Index i = 0; i < g.size(); ++i) {
    t.data()[i] = static_cast<float>(g.data()[i]);
  }
  return t;
}

dsp::Grid TensorToGrid(const nn::Tensor<float>& t, int n, int c) {
  dsp::Grid g(t.h(), t.w());
  const float* p = t.plane(n, c);
  for (Eigen::Index i = 0; i < g.size(); ++i) g.data()[i] = p[i];
  return g;
}

template <typename T>
CodecModel<T>::CodecModel(const CodecConfig& cfg, std::uint64_t seed)
    : cfg_(cfg) {
  cfg.Validate();
  std::mt19937_64 rng(seed);
  encoder_ = Encoder<T>(cfg.encoder, rng);
  decoder_ = Decoder<T>(cfg.decoder, cfg.encoder.LatentChannels(), rng);
}

template <typename T>
nn::ParameterList<T> CodecModel<T>::Parameters() {
  nn::ParameterList<T> out;
  encoder_.CollectParameters(out);
  decoder_.CollectParameters(out);
  return out;
}

template <typename T>
long long CodecModel<T>::CountParameters() {
  return nn::CountScalars(Parameters());
}

template <typename T>
LatentGrid CodecModel<T>::Encode(const dsp::MelSpectrogram& mel) const {
  if (mel.n_mels() != cfg_.spectral.n_mels) {
    Fail(ErrorClass::kShape, "mel has " + std::to_string(mel.n_mels()) +
                                 " bins, model expects " +
                                 std::to_string(cfg_.spectral.n_mels));
  }
  if (!mel.values.allFinite()) {
    Fail(ErrorClass::kNumeric, "mel spectrogram contains non-finite values");
  }
  LatentGrid out;
  const dsp::Grid padded = PadToMultiple(
      mel.values, cfg_.encoder.FreqFactor(), cfg_.encoder.TimeFactor(),
      cfg_.spectral.LogFloorValue(), &out.pad_bins, &out.pad_frames);
  const Tensor<T> x = GridToTensor(padded).Cast<T>();
  out.values = encoder_.Forward(x, nullptr).template Cast<float>();
  return out;
}

template <typename T>
dsp::MelSpectrogram CodecModel<T>::Decode(const LatentGrid& latent) const {
  const Tensor<T> z = latent.values.Cast<T>();
  const Tensor<float> y = decoder_.Forward(z, nullptr).template Cast<float>();
  const int f = y.h() - latent.pad_bins;
  const int t = y.w() - latent.pad_frames;
  if (f < 1 || t < 1) {
    Fail(ErrorClass::kShape, "padding exceeds decoded grid");
  }
  dsp::MelSpectrogram mel;
  mel.config = cfg_.spectral;
  const double floor = cfg_.spectral.LogFloorValue();
  mel.values =
      TensorToGrid(y).topLeftCorner(f, t).cwiseMax(floor);
  return mel;
}

#define USRC_INSTANTIATE_MODEL(T) \
  template class ResBlock<T>;     \
  template class Encoder<T>;      \
  template class Decoder<T>;      \
  template class CodecModel<T>;

USRC_INSTANTIATE_MODEL(float)
USRC_INSTANTIATE_MODEL(double)

}  // namespace usrc::model
