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

#ifndef USRC_MODEL_CODEC_CONFIG_H_
#define USRC_MODEL_CODEC_CONFIG_H_

#include <cstdint>
#include <string>
#include <vector>

#include "usrc/dsp/spectral.h"

namespace usrc::model {

struct EncoderConfig {
  int in_channels = 1;
  std::vector<int> channel_schedule{128, 256, 512};
  std::vector<int> time_down{2, 2, 4};
  std::vector<int> freq_down{2, 2, 4};
  int resblocks_per_stage = 2;
  int groupnorm_groups = 32;
  // Width of the encoder output / code vectors. 0 means the last stage width.
  int latent_channels = 0;

  int LatentChannels() const {
    return latent_channels > 0 ? latent_channels : channel_schedule.back();
  }
  int TimeFactor() const;
  int FreqFactor() const;
  void Validate() const;
};

struct DecoderConfig {
  int out_channels = 1;
  std::vector<int> channel_schedule{256, 128, 1};
  std::vector<int> time_up{4, 2, 2};
  std::vector<int> freq_up{4, 2, 2};
  int resblocks_per_stage = 2;
  int groupnorm_groups = 32;

  int TimeFactor() const;
  int FreqFactor() const;
  void Validate() const;

  // Reverses the encoder's stage plan; the last stage emits out_channels.
  static DecoderConfig MirrorOf(const EncoderConfig& enc);
};

enum class FlattenOrder : std::uint8_t { kFrameWise = 0, kBandWise = 1 };

std::string FlattenOrderName(FlattenOrder o);
FlattenOrder ParseFlattenOrder(const std::string& s);

struct QuantizerConfig {
  int codebook_size = 8192;
  FlattenOrder order = FlattenOrder::kFrameWise;

  int CodebookBits() const;
  void Validate() const;
};

enum class Variant : std::uint8_t { kB = 0, kL = 1, kCustom = 255 };

std::string VariantName(Variant v);

// Everything that fixes the shape of the codec and its token stream.
struct CodecConfig {
  Variant variant = Variant::kB;
  dsp::SpectralConfig spectral;
  EncoderConfig encoder;
  DecoderConfig decoder;
  QuantizerConfig quantizer;

  void Validate() const;

  // Canonical text of every architectural field, used for fingerprinting.
  std::string Canonical() const;
  std::uint64_t Fingerprint() const;
  std::string FingerprintHex() const;

  // 16 x 16 compression: 40 nominal / ~43 measured tokens per second.
  static CodecConfig PresetB();
  // Time factor 4, frequency factor 16: ~172 tokens per second.
  static CodecConfig PresetL();
  // B geometry with channels [32, 64, 128] and 256 codes, for CPU overfit runs.
  static CodecConfig PresetOverfit();
  static CodecConfig Preset(const std::string& name);
};

// 64-bit FNV-1a.
std::uint64_t Fnv1a64(const std::string& s);

}  // namespace usrc::model

#endif  // USRC_MODEL_CODEC_CONFIG_H_
