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

#include "usrc/bitstream/container.h"

#include <algorithm>
#include <cstring>

#include <zlib.h>

#include "usrc/error.h"

namespace usrc::bitstream {
namespace {

void PutLe(std::vector<std::uint8_t>& out, std::uint64_t v, int bytes) {
  for (int i = 0; i < bytes; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint64_t GetLe(std::span<const std::uint8_t> in, std::size_t off, int bytes) {
  std::uint64_t v = 0;
  for (int i = 0; i < bytes; ++i) v |= std::uint64_t(in[off + i]) << (8 * i);
  return v;
}

std::uint32_t Crc32(std::span<const std::uint8_t> bytes) {
  uLong crc = crc32(0L, Z_NULL, 0);
  std::size_t done = 0;
  while (done < bytes.size()) {
    const uInt chunk = static_cast<uInt>(std::min<std::size_t>(bytes.size() - done, 1u << 30));
    crc = crc32(crc, bytes.data() + done, chunk);
    done += chunk;
  }
  return static_cast<std::uint32_t>(crc);
}

[[noreturn]] void Corrupt(const std::string& field, const std::string& why) {
  Fail(ErrorClass::kCorruptStream, field + ": " + why);
}

template <typename A, typename B>
void Match(const char* field, A got, B want) {
  if (static_cast<long long>(got) != static_cast<long long>(want)) {
    Fail(ErrorClass::kConfig, std::string("stream ") + field + " is " +
                                  std::to_string(static_cast<long long>(got)) +
                                  " but the checkpoint has " +
                                  std::to_string(static_cast<long long>(want)));
  }
}

}  // namespace

std::size_t Header::PayloadBytes() const {
  const unsigned __int128 bits_total =
      static_cast<unsigned __int128>(n_tokens) * codebook_bits;
  return static_cast<std::size_t>((bits_total + 7) / 8);
}

int Header::LatentFreq() const {
  if (freq_down == 0) return 0;
  return (n_mels + freq_down - 1) / freq_down;
}

std::uint64_t Header::LatentFrames() const {
  const int f = LatentFreq();
  return f > 0 ? n_tokens / static_cast<std::uint64_t>(f) : 0;
}

std::uint64_t Header::MelFrames() const {
  const std::uint64_t frames = LatentFrames() * time_down;
  return frames >= pad_frames ? frames - pad_frames : 0;
}

void Header::CheckMatches(const model::CodecConfig& cfg) const {
  Match("variant", static_cast<int>(variant), static_cast<int>(cfg.variant));
  Match("sample_rate", sample_rate, cfg.spectral.sample_rate);
  Match("hop", hop, cfg.spectral.hop);
  Match("n_mels", n_mels, cfg.spectral.n_mels);
  Match("time_down", time_down, cfg.encoder.TimeFactor());
  Match("freq_down", freq_down, cfg.encoder.FreqFactor());
  Match("codebook_bits", codebook_bits, cfg.quantizer.CodebookBits());
}

Header Header::ForConfig(const model::CodecConfig& cfg, int pad_frames,
                         std::uint64_t n_tokens) {
  auto fits = [](long long v, long long hi, const char* what) {
    if (v < 0 || v > hi) {
      Fail(ErrorClass::kEncode, std::string(what) + " = " + std::to_string(v) +
                                    " does not fit the stream header");
    }
  };
  fits(cfg.spectral.sample_rate, 0xFFFFFFFFLL, "sample_rate");
  fits(cfg.spectral.hop, 0xFFFF, "hop");
  fits(cfg.spectral.n_mels, 0xFF, "n_mels");
  fits(cfg.encoder.TimeFactor(), 0xFF, "time_down");
  fits(cfg.encoder.FreqFactor(), 0xFF, "freq_down");
  fits(pad_frames, 0xFFFF, "pad_frames");
  const int bits = cfg.quantizer.CodebookBits();
  if (bits < 1 || bits > kMaxCodebookBits) {
    Fail(ErrorClass::kEncode, "codebook of " + std::to_string(cfg.quantizer.codebook_size) +
                                  " codes needs 1..24 bits per token");
  }
  Header h;
  h.variant = cfg.variant;
  h.sample_rate = static_cast<std::uint32_t>(cfg.spectral.sample_rate);
  h.hop = static_cast<std::uint16_t>(cfg.spectral.hop);
  h.n_mels = static_cast<std::uint8_t>(cfg.spectral.n_mels);
  h.time_down = static_cast<std::uint8_t>(cfg.encoder.TimeFactor());
  h.freq_down = static_cast<std::uint8_t>(cfg.encoder.FreqFactor());
  h.codebook_bits = static_cast<std::uint8_t>(bits);
  h.order = cfg.quantizer.order;
  h.pad_frames = static_cast<std::uint16_t>(pad_frames);
  h.n_tokens = n_tokens;
  return h;
}

std::vector<std::uint8_t> SerializeHeader(const Header& h) {
  std::vector<std::uint8_t> out(kMagic, kMagic + 4);
  out.reserve(kHeaderSize);
  out.push_back(h.version);
  out.push_back(static_cast<std::uint8_t>(h.variant));
  PutLe(out, h.sample_rate, 4);
  PutLe(out, h.hop, 2);
  out.push_back(h.n_mels);
  out.push_back(h.time_down);
  out.push_back(h.freq_down);
  out.push_back(h.codebook_bits);
  out.push_back(static_cast<std::uint8_t>(h.order));
  PutLe(out, h.pad_frames, 2);
  PutLe(out, h.n_tokens, 8);
  return out;
}

Header ParseHeader(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    Corrupt("magic", "not a .usrc stream");
  }
  if (bytes.size() < kHeaderSize) {
    Corrupt("header", "truncated at " + std::to_string(bytes.size()) + " of " +
                          std::to_string(kHeaderSize) + " bytes");
  }
  Header h;
  h.version = bytes[4];
  if (h.version != kVersion) {
    Corrupt("version", "unsupported version " + std::to_string(h.version));
  }
  const std::uint8_t variant = bytes[5];
  if (variant != 0 && variant != 1 && variant != 255) {
    Corrupt("variant", "unknown value " + std::to_string(variant));
  }
  h.variant = static_cast<model::Variant>(variant);
  h.sample_rate = static_cast<std::uint32_t>(GetLe(bytes, 6, 4));
  h.hop = static_cast<std::uint16_t>(GetLe(bytes, 10, 2));
  h.n_mels = bytes[12];
  h.time_down = bytes[13];
  h.freq_down = bytes[14];
  h.codebook_bits = bytes[15];
  const std::uint8_t order = bytes[16];
  h.pad_frames = static_cast<std::uint16_t>(GetLe(bytes, 17, 2));
  h.n_tokens = GetLe(bytes, 19, 8);
  if (h.sample_rate == 0) Corrupt("sample_rate", "zero");
  if (h.hop == 0) Corrupt("hop", "zero");
  if (h.n_mels == 0) Corrupt("n_mels", "zero");
  if (h.time_down == 0) Corrupt("time_down", "zero");
  if (h.freq_down == 0) Corrupt("freq_down", "zero");
  if (h.codebook_bits < 1 || h.codebook_bits > kMaxCodebookBits) {
    Corrupt("codebook_bits", std::to_string(h.codebook_bits) + " outside 1..24");
  }
  if (order > 1) Corrupt("flatten_order", "unknown value " + std::to_string(order));
  h.order = static_cast<model::FlattenOrder>(order);
  if (h.n_tokens % static_cast<std::uint64_t>(h.LatentFreq()) != 0) {
    Corrupt("n_tokens", std::to_string(h.n_tokens) + " is not a whole number of " +
                            std::to_string(h.LatentFreq()) + "-bin frames");
  }
  if (h.n_tokens > 0 && h.pad_frames >= h.LatentFrames() * h.time_down) {
    Corrupt("pad_frames", "padding covers every frame");
  }
  return h;
}

std::vector<std::uint8_t> PackBits(std::span<const std::uint32_t> tokens,
                                   int bits) {
  if (bits < 1 || bits > kMaxCodebookBits) {
    Fail(ErrorClass::kEncode, "bits per token must be in 1..24");
  }
  const std::uint32_t limit = 1u << bits;
  std::vector<std::uint8_t> out((tokens.size() * bits + 7) / 8, 0);
  std::uint64_t acc = 0;
  int filled = 0;
  std::size_t pos = 0;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (tokens[i] >= limit) {
      Fail(ErrorClass::kEncode, "token " + std::to_string(tokens[i]) + " at " +
                                    std::to_string(i) + " needs more than " +
                                    std::to_string(bits) + " bits");
    }
    acc = (acc << bits) | tokens[i];
    filled += bits;
    while (filled >= 8) {
      filled -= 8;
      out[pos++] = static_cast<std::uint8_t>(acc >> filled);
    }
    acc &= (std::uint64_t(1) << filled) - 1;
  }
  if (filled > 0) out[pos] = static_cast<std::uint8_t>(acc << (8 - filled));
  return out;
}

std::vector<std::uint32_t> UnpackBits(std::span<const std::uint8_t> payload,
                                      std::size_t n_tokens, int bits) {
  if (bits < 1 || bits > kMaxCodebookBits) Corrupt("codebook_bits", "outside 1..24");
  const std::size_t want = (n_tokens * bits + 7) / 8;
  if (payload.size() != want) {
    Corrupt("payload", "length " + std::to_string(payload.size()) + " but " +
                           std::to_string(n_tokens) + " tokens need " +
                           std::to_string(want));
  }
  std::vector<std::uint32_t> tokens(n_tokens);
  std::uint64_t acc = 0;
  int filled = 0;
  std::size_t pos = 0;
  const std::uint64_t mask = (std::uint64_t(1) << bits) - 1;
  for (std::size_t i = 0; i < n_tokens; ++i) {
    while (filled < bits) {
      acc = (acc << 8) | payload[pos++];
      filled += 8;
    }
    filled -= bits;
    tokens[i] = static_cast<std::uint32_t>((acc >> filled) & mask);
    acc &= (std::uint64_t(1) << filled) - 1;
  }
  if (acc != 0) Corrupt("pad bits", "nonzero trailing bits in the last byte");
  return tokens;
}

std::vector<std::uint8_t> PackTokens(Header h,
                                     std::span<const std::uint32_t> tokens) {
  h.n_tokens = tokens.size();
  if (h.n_tokens % static_cast<std::uint64_t>(h.LatentFreq()) != 0) {
    Fail(ErrorClass::kEncode, std::to_string(h.n_tokens) + " tokens do not fill rows of " +
                                  std::to_string(h.LatentFreq()));
  }
  std::vector<std::uint8_t> out = SerializeHeader(h);
  const std::vector<std::uint8_t> payload = PackBits(tokens, h.codebook_bits);
  out.insert(out.end(), payload.begin(), payload.end());
  PutLe(out, Crc32(out), 4);
  return out;
}

Unpacked UnpackTokens(std::span<const std::uint8_t> bytes, int codebook_size) {
  Unpacked u;
  u.header = ParseHeader(bytes);
  const Header& h = u.header;
  const std::size_t payload = h.PayloadBytes();
  if (bytes.size() != h.StreamBytes()) {
    Corrupt("length", "stream is " + std::to_string(bytes.size()) +
                          " bytes, header implies " + std::to_string(h.StreamBytes()));
  }
  const std::size_t body = kHeaderSize + payload;
  const auto stored = static_cast<std::uint32_t>(GetLe(bytes, body, 4));
  if (stored != Crc32(bytes.first(body))) Corrupt("crc", "checksum mismatch");
  u.tokens = UnpackBits(bytes.subspan(kHeaderSize, payload), h.n_tokens,
                        h.codebook_bits);
  if (codebook_size > 0) {
    for (std::size_t i = 0; i < u.tokens.size(); ++i) {
      if (u.tokens[i] >= static_cast<std::uint32_t>(codebook_size)) {
        Corrupt("token", std::to_string(u.tokens[i]) + " at " + std::to_string(i) +
                             " exceeds codebook size " + std::to_string(codebook_size));
      }
    }
  }
  return u;
}

Inspection Inspect(std::span<const std::uint8_t> bytes) {
  Inspection r;
  r.header = ParseHeader(bytes.first(std::min(bytes.size(), kHeaderSize)));
  r.expected_bytes = r.header.StreamBytes();
  r.actual_bytes = bytes.size();
  if (r.actual_bytes < r.expected_bytes) {
    r.warning = "payload truncated: " + std::to_string(r.actual_bytes) + " of " +
                std::to_string(r.expected_bytes) + " bytes present";
  } else if (r.actual_bytes > r.expected_bytes) {
    r.warning = std::to_string(r.actual_bytes - r.expected_bytes) +
                " unexpected trailing bytes";
  }
  return r;
}

}  // namespace usrc::bitstream
