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

#ifndef USRC_VOCODER_VOCODER_H_
#define USRC_VOCODER_VOCODER_H_

#include <cstdint>
#include <string>
#include <vector>

#include "usrc/dsp/audio.h"
#include "usrc/dsp/spectral.h"

namespace usrc::vocoder {

enum class VocoderKind { kGriffinLim, kExternal };

// File-based adapter: the command template receives {in} (a MELX file),
// {out} (the WAV it must write), {sr}, {hop} and {n_mels}.
struct ExternalAdapter {
  std::string command;
  double timeout_seconds = 300.0;
  int declared_sample_rate = 0;  // 0 means the spectral config's rate
  double declared_latency_ms = 0.0;
};

struct VocoderSpec {
  VocoderKind kind = VocoderKind::kGriffinLim;
  int sample_rate = 44100;
  dsp::SpectralConfig expects;
  ExternalAdapter adapter;
  int griffin_lim_iters = 60;

  static VocoderSpec GriffinLim(const dsp::SpectralConfig& cfg, int iters = 60);
  static VocoderSpec External(const dsp::SpectralConfig& cfg,
                              const std::string& command);
};

// exp() of the log-Mel grid, then a non-negative least-squares inverse of
// the filterbank for every frame, seeded by the clamped pseudo-inverse.
// Returns [n_fft/2 + 1 x frames], all entries >= 0.
dsp::Grid MelToLinear(const dsp::MelSpectrogram& mel);
dsp::Grid MelToLinear(const dsp::MelSpectrogram& mel,
                      const dsp::SpectralConfig& expected);

// Griffin-Lim phase recovery from zero initial phase. Output has
// frames * hop samples clipped to [-1, 1]. When consistency is non-null it
// receives |STFT(ISTFT(X_i)) - X_i| for each iteration i (full-spectrum
// Frobenius norm).
dsp::AudioClip GriffinLim(const dsp::Grid& magnitude,
                          const dsp::SpectralConfig& cfg, int n_iters = 60,
                          std::vector<double>* consistency = nullptr);

dsp::AudioClip Synthesize(const dsp::MelSpectrogram& mel,
                          const VocoderSpec& spec);

// "MELX" | u32 rows | u32 frames | u32 sample_rate | u32 hop | f32 row-major.
struct MelxData {
  dsp::Grid values;
  std::uint32_t sample_rate = 0;
  std::uint32_t hop = 0;
};

std::vector<std::uint8_t> EncodeMelx(const dsp::Grid& values,
                                     std::uint32_t sample_rate,
                                     std::uint32_t hop);
MelxData DecodeMelx(const std::vector<std::uint8_t>& bytes);

}  // namespace usrc::vocoder

#endif  // USRC_VOCODER_VOCODER_H_
