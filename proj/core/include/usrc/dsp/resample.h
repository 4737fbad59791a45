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

#ifndef USRC_DSP_RESAMPLE_H_
#define USRC_DSP_RESAMPLE_H_

#include <span>
#include <vector>

#include "usrc/dsp/audio.h"

namespace usrc::dsp {

struct ResamplerOptions {
  // One-sided number of sinc zero crossings kept by the Kaiser window.
  int zero_crossings = 24;
  double kaiser_beta = 9.0;
  // Cutoff as a fraction of the lower of the two Nyquist frequencies.
  double rolloff = 0.945;
};

// Band-limited rational-ratio resampling with a Kaiser-windowed sinc kernel
// evaluated in polyphase form. Output length is round(n * to / from). A
// same-rate call returns the input unchanged.
std::vector<double> Resample(std::span<const double> x, int from_rate,
                             int to_rate, const ResamplerOptions& opt = {});

AudioClip Resample(const AudioClip& clip, int to_rate,
                   const ResamplerOptions& opt = {});

}  // namespace usrc::dsp

#endif  // USRC_DSP_RESAMPLE_H_
