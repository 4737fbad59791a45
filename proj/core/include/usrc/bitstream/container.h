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

#ifndef USRC_BITSTREAM_CONTAINER_H_
#define USRC_BITSTREAM_CONTAINER_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "usrc/model/codec_config.h"

namespace usrc::bitstream {

// Layout of a .usrc stream, multi-byte integers little-endian:
//
//   off size field
//     0    4 magic "USRC"
//     4    1 version (1)
//     5    1 variant (0 = B, 1 = L, 255 = custom)
//     6    4 sample_rate
//    10    2 hop
//    12    1 n_mels
//    13    1 time_down
//    14    1 freq_down
//    15    1 codebook_bits, 1..24
//    16    1 flatten_order (0 = frame_wise, 1 = band_wise)
//    17    2 pad_frames
//    19    8 n_tokens
//    27      payload, ceil(n_tokens * codebook_bits / 8) bytes
//            CRC-32 (zlib polynomial) of header and payload, 4 bytes
//
// Tokens are packed MSB first: bit b - 1 of token 0 is bit 7 of the first
// payload byte. Unused low bits of the last byte are zero.
inline constexpr char kMagic[4] = {'U', 'S', 'R', 'C'};
inline constexpr std::uint8_t kVersion = 1;
inline constexpr std::size_t kHeaderSize = 27;
inline constexpr std::size_t kTrailerSize = 4;
inline constexpr int kMaxCodebookBits = 24;

struct Header {
  std::uint8_t version = kVersion;
  model::Variant variant = model::Variant::kB;
  std::uint32_t sample_rate = 0;
  std::uint16_t hop = 0;
  std::uint8_t n_mels = 0;
  std::uint8_t time_down = 0;
  std::uint8_t freq_down = 0;
  std::uint8_t codebook_bits = 0;
  model::FlattenOrder order = model::FlattenOrder::kFrameWise;
  std::uint16_t pad_frames = 0;
  std::uint64_t n_tokens = 0;

  std::size_t PayloadBytes() const;
  std::size_t StreamBytes() const {
    return kHeaderSize + PayloadBytes() + kTrailerSize;
  }
  // Latent bins per frame: ceil(n_mels / freq_down).
  int LatentFreq() const;
  // Latent frames, n_tokens / LatentFreq().
  std::uint64_t LatentFrames() const;
  // Mel frames after decode cropping.
  std::uint64_t MelFrames() const;

  // Fields that must agree with a codec config (all but pad_frames and
  // n_tokens). kConfig naming the first mismatching field.
  void CheckMatches(const model::CodecConfig& cfg) const;

  static Header ForConfig(const model::CodecConfig& cfg, int pad_frames,
                          std::uint64_t n_tokens);

  bool operator==(const Header&) const = default;
};

std::vector<std::uint8_t> SerializeHeader(const Header& h);

// Validates magic, version and every field range before anything else is
// read. kCorruptStream naming the field.
Header ParseHeader(std::span<const std::uint8_t> bytes);

// Fixed-width MSB-first packing. kEncode when a token needs more than bits.
std::vector<std::uint8_t> PackBits(std::span<const std::uint32_t> tokens,
                                   int bits);

// Inverse of PackBits. kCorruptStream on a wrong length or nonzero pad bits.
std::vector<std::uint32_t> UnpackBits(std::span<const std::uint8_t> payload,
                                      std::size_t n_tokens, int bits);

// Header, payload and trailer. h.n_tokens is taken from tokens.
std::vector<std::uint8_t> PackTokens(Header h,
                                     std::span<const std::uint32_t> tokens);

struct Unpacked {
  Header header;
  std::vector<std::uint32_t> tokens;
};

// Full validation: header, exact stream length, CRC, pad bits and, when
// codebook_size > 0, every token < codebook_size.
Unpacked UnpackTokens(std::span<const std::uint8_t> bytes,
                      int codebook_size = 0);

struct Inspection {
  Header header;
  std::size_t expected_bytes = 0;
  std::size_t actual_bytes = 0;
  // Empty when the stream has exactly the expected size.
  std::string warning;
};

// Reads only the header. A short or long payload becomes a warning.
Inspection Inspect(std::span<const std::uint8_t> bytes);

}  // namespace usrc::bitstream

#endif  // USRC_BITSTREAM_CONTAINER_H_
