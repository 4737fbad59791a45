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

#ifndef USRC_DSP_SYNTHETIC_H_
#define USRC_DSP_SYNTHETIC_H_

#include <cstdint>

#include "usrc/dsp/audio.h"

namespace usrc::dsp {

AudioClip SineTone(double freq_hz, double amplitude, std::size_t length,
                   int sample_rate);

AudioClip WhiteNoise(double amplitude, std::size_t length, int sample_rate,
                     std::uint64_t seed);

// White noise through a windowed-sinc lowpass (taps = 2 * half_taps + 1).
AudioClip LowpassNoise(double cutoff_hz, double amplitude, std::size_t length,
                       int sample_rate, std::uint64_t seed,
                       int half_taps = 512);

AudioClip Silence(std::size_t length, int sample_rate);

// Voiced, syllable-modulated harmonic signal with a gliding pitch, formant-like
// spectral tilt and a faint full-band noise floor. Different seeds give
// different pitch contours, rhythms and timbres.
AudioClip SpeechLike(std::size_t length, int sample_rate, std::uint64_t seed);

// Notes and chords from a pentatonic scale with decaying harmonic envelopes
// and occasional hi-hat noise bursts.
AudioClip MusicLike(std::size_t length, int sample_rate, std::uint64_t seed);

// Three band-pass noise layers under slow amplitude modulation plus sparse
// decaying clicks, in the manner of wind or rain.
AudioClip AmbientLike(std::size_t length, int sample_rate, std::uint64_t seed);

}  // namespace usrc::dsp

#endif  // USRC_DSP_SYNTHETIC_H_
