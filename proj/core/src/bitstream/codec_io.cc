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

#include "usrc/bitstream/codec_io.h"

#include "usrc/error.h"

namespace usrc::bitstream {

EncodedClip EncodeClip(const train::CodecBundle& codec,
                       const dsp::AudioClip& clip) {
  const model::CodecConfig& cfg = codec.config;
  const dsp::MelSpectrogram mel = dsp::ComputeMelSpectrogram(clip, cfg.spectral);
  EncodedClip out;
  out.latent = codec.model.Encode(mel);
  const quant::QuantizeResult<float> q =
      quant::Quantize(out.latent.values, codec.codebook, cfg.quantizer.order);
  out.tokens = q.codes;
  out.header = Header::ForConfig(cfg, out.latent.pad_frames, out.tokens.size());
  return out;
}

std::vector<std::uint8_t> EncodeToStream(const train::CodecBundle& codec,
                                         const dsp::AudioClip& clip) {
  const EncodedClip enc = EncodeClip(codec, clip);
  return PackTokens(enc.header, enc.tokens);
}

dsp::MelSpectrogram DecodeToMel(const train::CodecBundle& codec,
                                const Header& header,
                                const std::vector<std::uint32_t>& tokens) {
  header.CheckMatches(codec.config);
  if (tokens.size() != header.n_tokens) {
    Fail(ErrorClass::kShape, "token count differs from the header");
  }
  if (tokens.empty()) {
    Fail(ErrorClass::kEmptyInput, "stream holds no tokens to decode");
  }
  quant::TokenSequence seq;
  seq.tokens = tokens;
  seq.freq = header.LatentFreq();
  seq.frames = static_cast<int>(header.LatentFrames());
  seq.order = header.order;
  model::LatentGrid latent;
  latent.values = quant::Dequantize(seq, codec.codebook);
  latent.pad_frames = header.pad_frames;
  latent.pad_bins = seq.freq * header.freq_down - header.n_mels;
  return codec.model.Decode(latent);
}

dsp::AudioClip DecodeStream(const train::CodecBundle& codec,
                            std::span<const std::uint8_t> stream,
                            const vocoder::VocoderSpec& voc) {
  const Unpacked u = UnpackTokens(stream, codec.config.quantizer.codebook_size);
  return vocoder::Synthesize(DecodeToMel(codec, u.header, u.tokens), voc);
}

dsp::AudioClip Reconstruct(const train::CodecBundle& codec,
                           const dsp::AudioClip& clip,
                           const vocoder::VocoderSpec& voc) {
  const EncodedClip enc = EncodeClip(codec, clip);
  return vocoder::Synthesize(DecodeToMel(codec, enc.header, enc.tokens), voc);
}

quant::Matrix<float> ExtractEmbeddings(const train::CodecBundle& codec,
                                       const dsp::AudioClip& clip) {
  const EncodedClip enc = EncodeClip(codec, clip);
  const quant::QuantizeResult<float> q = quant::Quantize(
      enc.latent.values, codec.codebook, model::FlattenOrder::kFrameWise);
  return quant::Flatten(q.quantized, model::FlattenOrder::kFrameWise);
}

}  // namespace usrc::bitstream
