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

// Native FLAC decoder: STREAMINFO plus CONSTANT, VERBATIM, FIXED and LPC
// subframes with partitioned Rice residuals and inter-channel decorrelation.
// Frame header CRC-8 and frame CRC-16 are verified.

#include <cstdint>
#include <cstring>
#include <string>
#include <vector>

#include "usrc/dsp/audio.h"
#include "usrc/error.h"

namespace usrc::dsp {
namespace {

[[noreturn]] void Corrupt(const std::string& why) {
  Fail(ErrorClass::kIo, "invalid FLAC: " + why);
}

class BitReader {
 public:
  explicit BitReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::uint32_t Bits(int n) {
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) v = (v << 1) | Bit();
    return static_cast<std::uint32_t>(v);
  }
  std::uint64_t Bits64(int n) {
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) v = (v << 1) | Bit();
    return v;
  }
  std::int64_t Signed(int n) {
    if (n == 0) return 0;
    const std::uint64_t v = Bits64(n);
    const std::uint64_t sign = std::uint64_t(1) << (n - 1);
    return static_cast<std::int64_t>(v ^ sign) - static_cast<std::int64_t>(sign);
  }
  std::uint32_t Unary() {
    std::uint32_t zeros = 0;
    while (Bit() == 0) ++zeros;
    return zeros;
  }
  std::uint32_t Bit() {
    if (pos_ >= bytes_.size() * 8) Corrupt("unexpected end of stream");
    const std::uint32_t b = (bytes_[pos_ >> 3] >> (7 - (pos_ & 7))) & 1u;
    ++pos_;
    return b;
  }
  void AlignToByte() { pos_ = (pos_ + 7) & ~std::size_t(7); }
  std::size_t byte_pos() const { return pos_ >> 3; }
  void SeekByte(std::size_t b) { pos_ = b * 8; }
  bool AtEnd() const { return pos_ >= bytes_.size() * 8; }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

std::uint8_t Crc8(const std::uint8_t* p, std::size_t n) {
  std::uint8_t crc = 0;
  for (std::size_t i = 0; i < n; ++i) {
    crc ^= p[i];
    for (int b = 0; b < 8; ++b) {
      crc = static_cast<std::uint8_t>((crc & 0x80) ? (crc << 1) ^ 0x07 : crc << 1);
    }
  }
  return crc;
}

std::uint16_t Crc16(const std::uint8_t* p, std::size_t n) {
  std::uint16_t crc = 0;
  for (std::size_t i = 0; i < n; ++i) {
    crc ^= static_cast<std::uint16_t>(p[i] << 8);
    for (int b = 0; b < 8; ++b) {
      crc = static_cast<std::uint16_t>((crc & 0x8000) ? (crc << 1) ^ 0x8005
                                                     : crc << 1);
    }
  }
  return crc;
}

struct StreamInfo {
  int sample_rate = 0;
  int channels = 0;
  int bits = 0;
  std::uint64_t total_samples = 0;
};

void ReadResidual(BitReader& br, int block_size, int order,
                  std::int64_t* out) {
  const std::uint32_t method = br.Bits(2);
  if (method > 1) Corrupt("reserved residual coding method");
  const int param_bits = method == 0 ? 4 : 5;
  const std::uint32_t escape = method == 0 ? 15u : 31u;
  const int partition_order = static_cast<int>(br.Bits(4));
  const int partitions = 1 << partition_order;
  if ((block_size >> partition_order) < order && partition_order > 0) {
    Corrupt("partition smaller than predictor order");
  }
  int idx = 0;
  for (int p = 0; p < partitions; ++p) {
    int count = block_size >> partition_order;
    if (p == 0) count -= order;
    if (count < 0) Corrupt("negative residual partition");
    const std::uint32_t param = br.Bits(param_bits);
    if (param == escape) {
      const int raw_bits = static_cast<int>(br.Bits(5));
      for (int i = 0; i < count; ++i) out[idx++] = br.Signed(raw_bits);
    } else {
      for (int i = 0; i < count; ++i) {
        const std::uint64_t q = br.Unary();
        const std::uint64_t u = (q << param) | br.Bits64(static_cast<int>(param));
        out[idx++] = static_cast<std::int64_t>(u >> 1) ^ -static_cast<std::int64_t>(u & 1);
      }
    }
  }
}

void ReadSubframe(BitReader& br, int block_size, int bps,
                  std::vector<std::int64_t>& s) {
  s.assign(block_size, 0);
  if (br.Bit() != 0) Corrupt("subframe padding bit set");
  const std::uint32_t type = br.Bits(6);
  int wasted = 0;
  if (br.Bit()) wasted = static_cast<int>(br.Unary()) + 1;
  bps -= wasted;
  if (bps <= 0) Corrupt("wasted bits exceed sample size");

  if (type == 0) {
    const std::int64_t v = br.Signed(bps);
    for (auto& x : s) x = v;
  } else if (type == 1) {
    for (auto& x : s) x = br.Signed(bps);
  } else if (type >= 8 && type <= 12) {
    const int order = static_cast<int>(type - 8);
    if (order > block_size) Corrupt("fixed order exceeds block");
    for (int i = 0; i < order; ++i) s[i] = br.Signed(bps);
    ReadResidual(br, block_size, order, s.data() + order);
    for (int i = order; i < block_size; ++i) {
      std::int64_t pred = 0;
      switch (order) {
        case 1: pred = s[i - 1]; break;
        case 2: pred = 2 * s[i - 1] - s[i - 2]; break;
        case 3: pred = 3 * s[i - 1] - 3 * s[i - 2] + s[i - 3]; break;
        case 4:
          pred = 4 * s[i - 1] - 6 * s[i - 2] + 4 * s[i - 3] - s[i - 4];
          break;
        default: break;
      }
      s[i] += pred;
    }
  } else if (type >= 32) {
    const int order = static_cast<int>(type - 31);
    if (order > block_size) Corrupt("LPC order exceeds block");
    for (int i = 0; i < order; ++i) s[i] = br.Signed(bps);
    const std::uint32_t precision = br.Bits(4) + 1;
    if (precision == 16) Corrupt("invalid LPC precision");
    const int shift = static_cast<int>(br.Signed(5));
    if (shift < 0) Corrupt("negative LPC shift");
    std::vector<std::int64_t> coef(order);
    for (auto& c : coef) c = br.Signed(static_cast<int>(precision));
    ReadResidual(br, block_size, order, s.data() + order);
    for (int i = order; i < block_size; ++i) {
      std::int64_t acc = 0;
      for (int j = 0; j < order; ++j) acc += coef[j] * s[i - 1 - j];
      s[i] += acc >> shift;
    }
  } else {
    Corrupt("reserved subframe type " + std::to_string(type));
  }
  if (wasted > 0) {
    for (auto& x : s) x *= (std::int64_t(1) << wasted);
  }
}

}  // namespace

DecodedAudio DecodeFlac(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 8 || std::memcmp(bytes.data(), "fLaC", 4) != 0) {
    Corrupt("missing fLaC marker");
  }
  StreamInfo info;
  bool have_info = false;
  std::size_t pos = 4;
  for (bool last = false; !last;) {
    if (pos + 4 > bytes.size()) Corrupt("truncated metadata");
    last = (bytes[pos] & 0x80) != 0;
    const int type = bytes[pos] & 0x7F;
    const std::size_t len = (std::size_t(bytes[pos + 1]) << 16) |
                            (std::size_t(bytes[pos + 2]) << 8) | bytes[pos + 3];
    pos += 4;
    if (pos + len > bytes.size()) Corrupt("truncated metadata block");
    if (type == 0) {
      if (len < 34) Corrupt("short STREAMINFO");
      BitReader br(bytes.subspan(pos, len));
      br.Bits(16);
      br.Bits(16);
      br.Bits(24);
      br.Bits(24);
      info.sample_rate = static_cast<int>(br.Bits(20));
      info.channels = static_cast<int>(br.Bits(3)) + 1;
      info.bits = static_cast<int>(br.Bits(5)) + 1;
      info.total_samples = br.Bits64(36);
      have_info = true;
    }
    pos += len;
  }
  if (!have_info) Corrupt("no STREAMINFO block");

  DecodedAudio out;
  out.channels = info.channels;
  out.sample_rate = info.sample_rate;
  out.bits_per_sample = info.bits;
  if (info.total_samples > 0) {
    out.interleaved.reserve(info.total_samples * info.channels);
  }

  BitReader br(bytes);
  br.SeekByte(pos);
  std::vector<std::vector<std::int64_t>> chan(8);
  while (br.byte_pos() + 2 <= bytes.size()) {
    const std::size_t frame_start = br.byte_pos();
    const std::uint32_t sync = br.Bits(14);
    if (sync != 0x3FFE) Corrupt("lost frame sync");
    br.Bits(1);  // reserved
    br.Bits(1);  // blocking strategy
    const std::uint32_t bs_code = br.Bits(4);
    const std::uint32_t sr_code = br.Bits(4);
    const std::uint32_t ch_code = br.Bits(4);
    const std::uint32_t ss_code = br.Bits(3);
    br.Bits(1);
    // UTF-8 style coded frame/sample number.
    std::uint32_t lead = br.Bits(8);
    int extra = 0;
    if ((lead & 0x80) != 0) {
      while ((lead & (0x80u >> (extra + 1))) != 0) ++extra;
      if (extra == 0 || extra > 6) Corrupt("bad coded frame number");
      for (int i = 0; i < extra; ++i) {
        if ((br.Bits(8) & 0xC0) != 0x80) Corrupt("bad coded frame number");
      }
    }
    int block_size = 0;
    if (bs_code == 1) {
      block_size = 192;
    } else if (bs_code >= 2 && bs_code <= 5) {
      block_size = 576 << (bs_code - 2);
    } else if (bs_code == 6) {
      block_size = static_cast<int>(br.Bits(8)) + 1;
    } else if (bs_code == 7) {
      block_size = static_cast<int>(br.Bits(16)) + 1;
    } else if (bs_code >= 8) {
      block_size = 256 << (bs_code - 8);
    } else {
      Corrupt("reserved block size");
    }
    if (sr_code == 12) {
      br.Bits(8);
    } else if (sr_code == 13 || sr_code == 14) {
      br.Bits(16);
    } else if (sr_code == 15) {
      Corrupt("invalid sample rate code");
    }
    const std::size_t header_end = br.byte_pos();
    const std::uint8_t crc8 = static_cast<std::uint8_t>(br.Bits(8));
    if (Crc8(bytes.data() + frame_start, header_end - frame_start) != crc8) {
      Corrupt("frame header CRC mismatch");
    }

    int bps = info.bits;
    static constexpr int kSampleSizes[8] = {0, 8, 12, 0, 16, 20, 24, 32};
    if (ss_code != 0) {
      bps = kSampleSizes[ss_code];
      if (bps == 0) Corrupt("reserved sample size");
    }
    int nch = 0;
    if (ch_code <= 7) {
      nch = static_cast<int>(ch_code) + 1;
    } else if (ch_code <= 10) {
      nch = 2;
    } else {
      Corrupt("reserved channel assignment");
    }
    if (nch != info.channels) Corrupt("channel count changed mid-stream");
    for (int c = 0; c < nch; ++c) {
      int sub_bps = bps;
      if ((ch_code == 8 && c == 1) || (ch_code == 9 && c == 0) ||
          (ch_code == 10 && c == 1)) {
        sub_bps += 1;
      }
      ReadSubframe(br, block_size, sub_bps, chan[c]);
    }
    br.AlignToByte();
    const std::size_t body_end = br.byte_pos();
    const std::uint16_t crc16 = static_cast<std::uint16_t>(br.Bits(16));
    if (Crc16(bytes.data() + frame_start, body_end - frame_start) != crc16) {
      Corrupt("frame CRC mismatch");
    }

    auto& a = chan[0];
    auto& b = chan[1];
    if (ch_code == 8) {
      for (int i = 0; i < block_size; ++i) b[i] = a[i] - b[i];
    } else if (ch_code == 9) {
      for (int i = 0; i < block_size; ++i) a[i] += b[i];
    } else if (ch_code == 10) {
      for (int i = 0; i < block_size; ++i) {
        const std::int64_t mid = (a[i] * 2) | (b[i] & 1);
        const std::int64_t side = b[i];
        a[i] = (mid + side) >> 1;
        b[i] = (mid - side) >> 1;
      }
    }
    const double scale = 1.0 / static_cast<double>(std::int64_t(1) << (bps - 1));
    for (int i = 0; i < block_size; ++i) {
      for (int c = 0; c < nch; ++c) out.interleaved.push_back(chan[c][i] * scale);
    }
  }
  if (info.total_samples > 0 &&
      out.interleaved.size() > info.total_samples * info.channels) {
    out.interleaved.resize(info.total_samples * info.channels);
  }
  return out;
}

}  // namespace usrc::dsp
