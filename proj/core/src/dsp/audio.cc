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

#include "usrc/dsp/audio.h"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

#include "usrc/dsp/resample.h"
#include "usrc/error.h"

namespace usrc::dsp {
namespace {

std::uint32_t ReadLe32(const std::uint8_t* p) {
  return std::uint32_t(p[0]) | (std::uint32_t(p[1]) << 8) |
         (std::uint32_t(p[2]) << 16) | (std::uint32_t(p[3]) << 24);
}
std::uint16_t ReadLe16(const std::uint8_t* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}
void PutLe32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}
void PutLe16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}

constexpr std::uint16_t kWavePcm = 1;
constexpr std::uint16_t kWaveFloat = 3;
constexpr std::uint16_t kWaveExtensible = 0xFFFE;

}  // namespace

DecodedAudio DecodeWav(std::span<const std::uint8_t> bytes) {
  auto corrupt = [](const std::string& why) {
    Fail(ErrorClass::kIo, "invalid WAV: " + why);
  };
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
    corrupt("missing RIFF/WAVE header");
  }
  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  bool have_fmt = false;
  const std::uint8_t* data = nullptr;
  std::size_t data_len = 0;
  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const std::uint8_t* chunk = bytes.data() + pos;
    const std::uint32_t len = ReadLe32(chunk + 4);
    const std::size_t body = pos + 8;
    const std::size_t avail = bytes.size() - body;
    if (std::memcmp(chunk, "fmt ", 4) == 0) {
      if (len < 16 || avail < 16) corrupt("short fmt chunk");
      format = ReadLe16(chunk + 8);
      channels = ReadLe16(chunk + 10);
      rate = ReadLe32(chunk + 12);
      bits = ReadLe16(chunk + 22);
      if (format == kWaveExtensible) {
        if (len < 40 || avail < 40) corrupt("short extensible fmt chunk");
        format = ReadLe16(chunk + 8 + 24);
      }
      have_fmt = true;
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      data = chunk + 8;
      // Streaming writers sometimes leave the length at 0 or 0xFFFFFFFF.
      data_len = (len == 0 || len > avail) ? avail : len;
    }
    pos = body + len + (len & 1);
  }
  if (!have_fmt) corrupt("no fmt chunk");
  if (data == nullptr) corrupt("no data chunk");
  if (channels == 0 || rate == 0) corrupt("zero channels or sample rate");
  const bool is_float = format == kWaveFloat;
  if (!(format == kWavePcm || is_float)) {
    corrupt("unsupported format tag " + std::to_string(format));
  }
  if (is_float ? !(bits == 32 || bits == 64)
               : !(bits == 8 || bits == 16 || bits == 24 || bits == 32)) {
    corrupt("unsupported bit depth " + std::to_string(bits));
  }
  const int bytes_per_sample = bits / 8;
  const std::size_t count = data_len / bytes_per_sample;
  DecodedAudio out;
  out.channels = channels;
  out.sample_rate = static_cast<int>(rate);
  out.bits_per_sample = bits;
  out.interleaved.resize(count - count % channels);
  for (std::size_t i = 0; i < out.interleaved.size(); ++i) {
    const std::uint8_t* p = data + i * bytes_per_sample;
    double v = 0;
    if (is_float && bits == 32) {
      float f;
      std::memcpy(&f, p, 4);
      v = f;
    } else if (is_float) {
      std::memcpy(&v, p, 8);
    } else if (bits == 8) {
      v = (double(p[0]) - 128.0) / 128.0;
    } else if (bits == 16) {
      v = static_cast<std::int16_t>(ReadLe16(p)) / 32768.0;
    } else if (bits == 24) {
      std::int32_t s = std::int32_t(p[0]) | (std::int32_t(p[1]) << 8) |
                       (std::int32_t(p[2]) << 16);
      if (s & 0x800000) s -= 0x1000000;
      v = s / 8388608.0;
    } else {
      v = static_cast<std::int32_t>(ReadLe32(p)) / 2147483648.0;
    }
    out.interleaved[i] = v;
  }
  return out;
}

std::vector<std::uint8_t> ReadFileBytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) Fail(ErrorClass::kIo, "cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  if (in.bad()) Fail(ErrorClass::kIo, "read failed: " + path.string());
  return bytes;
}

void WriteFileBytes(const std::filesystem::path& path,
                    std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) Fail(ErrorClass::kIo, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) Fail(ErrorClass::kIo, "write failed: " + path.string());
}

DecodedAudio DecodeAudioFile(const std::filesystem::path& path) {
  const std::vector<std::uint8_t> bytes = ReadFileBytes(path);
  try {
    if (bytes.size() >= 4 && std::memcmp(bytes.data(), "fLaC", 4) == 0) {
      return DecodeFlac(bytes);
    }
    return DecodeWav(bytes);
  } catch (const Error& e) {
    Fail(e.error_class(), path.string() + ": " + e.what());
  }
}

std::vector<std::filesystem::path> ListAudioFiles(
    const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) {
    Fail(ErrorClass::kIo, dir.string() + ": not a directory");
  }
  std::vector<fs::path> files;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    std::string ext = e.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    if (ext == ".wav" || ext == ".flac") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  return files;
}

AudioClip LoadAudio(const std::filesystem::path& path, int target_sr) {
  if (target_sr <= 0) Fail(ErrorClass::kConfig, "target sample rate must be positive");
  const DecodedAudio dec = DecodeAudioFile(path);
  if (dec.frames() == 0) {
    Fail(ErrorClass::kEmptyInput, path.string() + ": zero-length audio");
  }
  AudioClip mono;
  mono.sample_rate = dec.sample_rate;
  mono.samples.resize(dec.frames());
  if (dec.channels == 1) {
    mono.samples = dec.interleaved;
  } else {
    for (std::size_t f = 0; f < dec.frames(); ++f) {
      double acc = 0;
      for (int c = 0; c < dec.channels; ++c) {
        acc += dec.interleaved[f * dec.channels + c];
      }
      mono.samples[f] = acc / dec.channels;
    }
  }
  AudioClip out = Resample(mono, target_sr);
  double peak = 0;
  for (double v : out.samples) {
    if (!std::isfinite(v)) Fail(ErrorClass::kNumeric, path.string() + ": non-finite sample");
    peak = std::max(peak, std::abs(v));
  }
  if (peak > 1.0) {
    for (double& v : out.samples) v /= peak;
  }
  return out;
}

std::vector<std::uint8_t> EncodeWav16(const AudioClip& clip) {
  const std::uint32_t data_bytes =
      static_cast<std::uint32_t>(clip.samples.size() * 2);
  std::vector<std::uint8_t> out;
  out.reserve(44 + data_bytes);
  out.insert(out.end(), {'R', 'I', 'F', 'F'});
  PutLe32(out, 36 + data_bytes);
  out.insert(out.end(), {'W', 'A', 'V', 'E', 'f', 'm', 't', ' '});
  PutLe32(out, 16);
  PutLe16(out, kWavePcm);
  PutLe16(out, 1);
  PutLe32(out, static_cast<std::uint32_t>(clip.sample_rate));
  PutLe32(out, static_cast<std::uint32_t>(clip.sample_rate) * 2);
  PutLe16(out, 2);
  PutLe16(out, 16);
  out.insert(out.end(), {'d', 'a', 't', 'a'});
  PutLe32(out, data_bytes);
  for (double v : clip.samples) {
    const double c = std::clamp(v, -1.0, 1.0);
    const long q = std::lround(c * 32767.0);
    PutLe16(out, static_cast<std::uint16_t>(static_cast<std::int16_t>(q)));
  }
  return out;
}

void WriteWav16(const std::filesystem::path& path, const AudioClip& clip) {
  const auto bytes = EncodeWav16(clip);
  WriteFileBytes(path, bytes);
}

}  // namespace usrc::dsp
