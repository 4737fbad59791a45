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

#ifndef USRC_DSP_AUDIO_H_
#define USRC_DSP_AUDIO_H_

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace usrc::dsp {

// Mono waveform. Samples are nominally in [-1, 1].
struct AudioClip {
  std::vector<double> samples;
  int sample_rate = 0;

  std::size_t size() const { return samples.size(); }
  double duration_seconds() const {
    return sample_rate > 0 ? double(samples.size()) / sample_rate : 0.0;
  }
};

// Interleaved multichannel PCM as decoded from a file.
struct DecodedAudio {
  std::vector<double> interleaved;
  int channels = 0;
  int sample_rate = 0;
  int bits_per_sample = 0;

  std::size_t frames() const {
    return channels > 0 ? interleaved.size() / channels : 0;
  }
};

DecodedAudio DecodeWav(std::span<const std::uint8_t> bytes);
DecodedAudio DecodeFlac(std::span<const std::uint8_t> bytes);

// Picks the decoder from the file's magic bytes ("RIFF" or "fLaC").
DecodedAudio DecodeAudioFile(const std::filesystem::path& path);

// Reads a WAV or FLAC file, averages channels to mono, resamples to
// target_sr, and rescales only when the peak exceeds full scale.
// Every .wav / .flac file below dir, recursively, in sorted order. kIo when
// dir is not a directory.
std::vector<std::filesystem::path> ListAudioFiles(
    const std::filesystem::path& dir);

AudioClip LoadAudio(const std::filesystem::path& path, int target_sr);

// 16-bit PCM mono WAV; samples are clipped to [-1, 1].
std::vector<std::uint8_t> EncodeWav16(const AudioClip& clip);
void WriteWav16(const std::filesystem::path& path, const AudioClip& clip);

std::vector<std::uint8_t> ReadFileBytes(const std::filesystem::path& path);
void WriteFileBytes(const std::filesystem::path& path,
                    std::span<const std::uint8_t> bytes);

}  // namespace usrc::dsp

#endif  // USRC_DSP_AUDIO_H_
