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

#ifndef USRC_DSP_BANDWIDTH_H_
#define USRC_DSP_BANDWIDTH_H_

#include "usrc/dsp/audio.h"

namespace usrc::dsp {

inline constexpr double kDefaultBandwidthThresholdDb = -60.0;
inline constexpr int kTrainingSampleRate = 44100;
inline constexpr double kDefaultBandwidthMargin = 0.95;

// Estimates the sample rate a clip was originally produced at. Mean Mel-band
// power (over frames clear of the clip edges, when there are any) is measured in dB relative to the loudest band; scanning down from
// the top band, the first band above threshold_db gives the highest occupied
// frequency f_top (its center) and the result is 2 * f_top. Returns 0 when
// the clip carries no energy at all.
double DetectNativeBandwidth(const AudioClip& clip, double threshold_db);

// True when the clip's native bandwidth reaches the 44.1 kHz Nyquist limit
// within margin. Expects a 44.1 kHz clip.
bool FilterTrainingClip(const AudioClip& clip,
                        double threshold_db = kDefaultBandwidthThresholdDb,
                        double margin = kDefaultBandwidthMargin);

}  // namespace usrc::dsp

#endif  // USRC_DSP_BANDWIDTH_H_
