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

#ifndef USRC_BITSTREAM_CODEC_IO_H_
#define USRC_BITSTREAM_CODEC_IO_H_

#include <cstdint>
#include <vector>

#include "usrc/bitstream/container.h"
#include "usrc/dsp/audio.h"
#include "usrc/dsp/spectral.h"
#include "usrc/quant/quantizer.h"
#include "usrc/train/checkpoint.h"
#include "usrc/vocoder/vocoder.h"

namespace usrc::bitstream {

struct EncodedClip {
  Header header;
  std::vector<std::uint32_t> tokens;
  model::LatentGrid latent;  // pre-quantization encoder output
};

// Mel, encoder and nearest-code lookup. The clip must already be at the
// codec's sample rate.
EncodedClip EncodeClip(const train::CodecBundle& codec, const dsp::AudioClip& clip);

// Bytes of a complete .usrc stream for clip.
std::vector<std::uint8_t> EncodeToStream(const train::CodecBundle& codec,
                                         const dsp::AudioClip& clip);

// Dequantize and decode back to a log-Mel grid. The header must match the
// checkpoint (kConfig otherwise).
dsp::MelSpectrogram DecodeToMel(const train::CodecBundle& codec,
                                const Header& header,
                                const std::vector<std::uint32_t>& tokens);

// Unpack, decode and synthesize.
dsp::AudioClip DecodeStream(const train::CodecBundle& codec,
                            std::span<const std::uint8_t> stream,
                            const vocoder::VocoderSpec& voc);

// encode -> decode -> synthesize without the byte stage.
dsp::AudioClip Reconstruct(const train::CodecBundle& codec,
                           const dsp::AudioClip& clip,
                           const vocoder::VocoderSpec& voc);

// Post-quantizer vectors in frame-wise order, [positions x d]. Row p equals
// the effective codebook row of token p.
quant::Matrix<float> ExtractEmbeddings(const train::CodecBundle& codec,
                                       const dsp::AudioClip& clip);

}  // namespace usrc::bitstream

#endif  // USRC_BITSTREAM_CODEC_IO_H_
