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

#include "usrc/model/codec_config.h"

#include <bit>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "usrc/error.h"

namespace usrc::model {
namespace {

int Product(const std::vector<int>& v) {
  return std::accumulate(v.begin(), v.end(), 1, std::multiplies<>());
}

void ListTo(std::ostream& os, const char* key, const std::vector<int>& v) {
  os << key << "=[";
  for (std::size_t i = 0; i < v.size(); ++i) os << (i ? "," : "") << v[i];
  os << "];";
}

void RequirePositive(const std::vector<int>& v, const std::string& what) {
  for (int x : v) {
    if (x < 1) Fail(ErrorClass::kConfig, what + " entries must be >= 1");
  }
}

}  // namespace

int EncoderConfig::TimeFactor() const { return Product(time_down); }
int EncoderConfig::FreqFactor() const { return Product(freq_down); }

void EncoderConfig::Validate() const {
  const std::size_t s = channel_schedule.size();
  if (s == 0) Fail(ErrorClass::kConfig, "encoder needs at least one stage");
  if (time_down.size() != s || freq_down.size() != s) {
    Fail(ErrorClass::kConfig,
         "encoder channel_schedule, time_down and freq_down differ in length");
  }
  if (in_channels < 1) Fail(ErrorClass::kConfig, "encoder in_channels < 1");
  RequirePositive(channel_schedule, "encoder channel_schedule");
  RequirePositive(time_down, "encoder time_down");
  RequirePositive(freq_down, "encoder freq_down");
  if (resblocks_per_stage < 0) {
    Fail(ErrorClass::kConfig, "resblocks_per_stage must be >= 0");
  }
  if (groupnorm_groups < 1) Fail(ErrorClass::kConfig, "groupnorm_groups < 1");
  for (int c : channel_schedule) {
    if (c % groupnorm_groups != 0) {
      Fail(ErrorClass::kConfig, "groupnorm_groups " +
                                    std::to_string(groupnorm_groups) +
                                    " does not divide channel count " +
                                    std::to_string(c));
    }
  }
  if (LatentChannels() < 1) Fail(ErrorClass::kConfig, "latent_channels < 1");
}

int DecoderConfig::TimeFactor() const { return Product(time_up); }
int DecoderConfig::FreqFactor() const { return Product(freq_up); }

void DecoderConfig::Validate() const {
  const std::size_t s = channel_schedule.size();
  if (s == 0) Fail(ErrorClass::kConfig, "decoder needs at least one stage");
  if (time_up.size() != s || freq_up.size() != s) {
    Fail(ErrorClass::kConfig,
         "decoder channel_schedule, time_up and freq_up differ in length");
  }
  RequirePositive(channel_schedule, "decoder channel_schedule");
  RequirePositive(time_up, "decoder time_up");
  RequirePositive(freq_up, "decoder freq_up");
  if (channel_schedule.back() != out_channels) {
    Fail(ErrorClass::kConfig, "decoder must end at out_channels");
  }
  if (resblocks_per_stage < 0) {
    Fail(ErrorClass::kConfig, "resblocks_per_stage must be >= 0");
  }
  if (groupnorm_groups < 1) Fail(ErrorClass::kConfig, "groupnorm_groups < 1");
}

DecoderConfig DecoderConfig::MirrorOf(const EncoderConfig& enc) {
  DecoderConfig d;
  const std::size_t s = enc.channel_schedule.size();
  d.channel_schedule.clear();
  d.time_up.assign(enc.time_down.rbegin(), enc.time_down.rend());
  d.freq_up.assign(enc.freq_down.rbegin(), enc.freq_down.rend());
  for (std::size_t i = 1; i < s; ++i) {
    d.channel_schedule.push_back(enc.channel_schedule[s - 1 - i]);
  }
  d.channel_schedule.push_back(d.out_channels);
  d.resblocks_per_stage = enc.resblocks_per_stage;
  d.groupnorm_groups = enc.groupnorm_groups;
  return d;
}

std::string FlattenOrderName(FlattenOrder o) {
  return o == FlattenOrder::kFrameWise ? "frame_wise" : "band_wise";
}

FlattenOrder ParseFlattenOrder(const std::string& s) {
  if (s == "frame_wise" || s == "frame") return FlattenOrder::kFrameWise;
  if (s == "band_wise" || s == "band") return FlattenOrder::kBandWise;
  Fail(ErrorClass::kConfig, "unknown flatten order '" + s + "'");
}

int QuantizerConfig::CodebookBits() const {
  return std::countr_zero(static_cast<unsigned>(codebook_size));
}

void QuantizerConfig::Validate() const {
  if (codebook_size < 1 || !std::has_single_bit(static_cast<unsigned>(codebook_size))) {
    Fail(ErrorClass::kConfig, "codebook_size must be a power of two");
  }
  if (codebook_size > (1 << 24)) {
    Fail(ErrorClass::kConfig, "codebook_size above 2^24");
  }
}

std::string VariantName(Variant v) {
  switch (v) {
    case Variant::kB:
      return "B";
    case Variant::kL:
      return "L";
    default:
      return "custom";
  }
}

void CodecConfig::Validate() const {
  spectral.Validate();
  encoder.Validate();
  decoder.Validate();
  quantizer.Validate();
  if (encoder.TimeFactor() != decoder.TimeFactor() ||
      encoder.FreqFactor() != decoder.FreqFactor()) {
    Fail(ErrorClass::kConfig,
         "decoder upsampling must undo the encoder downsampling");
  }
  if (encoder.in_channels != decoder.out_channels) {
    Fail(ErrorClass::kConfig, "decoder out_channels must equal encoder input");
  }
}

std::string CodecConfig::Canonical() const {
  std::ostringstream os;
  os.precision(17);
  os << "variant=" << VariantName(variant) << ";";
  os << "sr=" << spectral.sample_rate << ";n_fft=" << spectral.n_fft
     << ";hop=" << spectral.hop << ";win=" << spectral.win_length
     << ";n_mels=" << spectral.n_mels << ";fmin=" << spectral.fmin
     << ";fmax=" << spectral.EffectiveFmax() << ";floor=" << spectral.log_floor
     << ";";
  os << "enc.in=" << encoder.in_channels << ";";
  ListTo(os, "enc.ch", encoder.channel_schedule);
  ListTo(os, "enc.td", encoder.time_down);
  ListTo(os, "enc.fd", encoder.freq_down);
  os << "enc.rb=" << encoder.resblocks_per_stage
     << ";enc.gn=" << encoder.groupnorm_groups
     << ";enc.latent=" << encoder.LatentChannels() << ";act=silu;";
  os << "dec.out=" << decoder.out_channels << ";";
  ListTo(os, "dec.ch", decoder.channel_schedule);
  ListTo(os, "dec.tu", decoder.time_up);
  ListTo(os, "dec.fu", decoder.freq_up);
  os << "dec.rb=" << decoder.resblocks_per_stage
     << ";dec.gn=" << decoder.groupnorm_groups << ";";
  os << "vq.k=" << quantizer.codebook_size
     << ";vq.order=" << FlattenOrderName(quantizer.order) << ";";
  return os.str();
}

std::uint64_t Fnv1a64(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t CodecConfig::Fingerprint() const { return Fnv1a64(Canonical()); }

std::string CodecConfig::FingerprintHex() const {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(Fingerprint()));
  return buf;
}

CodecConfig CodecConfig::PresetB() {
  CodecConfig c;
  c.variant = Variant::kB;
  c.decoder = DecoderConfig::MirrorOf(c.encoder);
  return c;
}

CodecConfig CodecConfig::PresetL() {
  CodecConfig c;
  c.variant = Variant::kL;
  c.encoder.time_down = {2, 2, 1};
  c.decoder = DecoderConfig::MirrorOf(c.encoder);
  return c;
}

CodecConfig CodecConfig::PresetOverfit() {
  CodecConfig c;
  c.variant = Variant::kCustom;
  c.encoder.channel_schedule = {32, 64, 128};
  c.encoder.groupnorm_groups = 8;
  c.decoder = DecoderConfig::MirrorOf(c.encoder);
  c.quantizer.codebook_size = 256;
  return c;
}

CodecConfig CodecConfig::Preset(const std::string& name) {
  if (name == "B" || name == "b") return PresetB();
  if (name == "L" || name == "l") return PresetL();
  if (name == "overfit") return PresetOverfit();
  Fail(ErrorClass::kConfig, "unknown variant preset '" + name + "'");
}

}  // namespace usrc::model
