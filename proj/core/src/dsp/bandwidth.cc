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

#include "usrc/dsp/bandwidth.h"

#include <algorithm>
#include <cmath>

#include "usrc/dsp/spectral.h"
#include "usrc/error.h"

namespace usrc::dsp {

double DetectNativeBandwidth(const AudioClip& clip, double threshold_db) {
  SpectralConfig cfg;
  cfg.sample_rate = clip.sample_rate;
  cfg.Validate();
  if (clip.samples.size() < static_cast<std::size_t>(cfg.win_length)) {
    Fail(ErrorClass::kInsufficientInput, "clip shorter than one analysis window");
  }
  const Grid mag = StftMagnitude(clip.samples, cfg.n_fft, cfg.hop, cfg.win_length);
  // Frames whose window overlaps the zero padding see the clip edge as a step,
  // which spreads energy across every band. Average interior frames only.
  const long long len = static_cast<long long>(clip.samples.size());
  int first = 0, last = static_cast<int>(mag.cols());
  while (first < last && static_cast<long long>(first) * cfg.hop < cfg.n_fft / 2) ++first;
  while (last > first &&
         static_cast<long long>(last - 1) * cfg.hop + cfg.n_fft / 2 > len) {
    --last;
  }
  if (first >= last) {
    first = 0;
    last = static_cast<int>(mag.cols());
  }
  const Grid power =
      MelFilterbank(cfg) * mag.middleCols(first, last - first).cwiseAbs2();
  const Eigen::VectorXd band_mean = power.rowwise().mean();
  const double peak = band_mean.maxCoeff();
  if (!(peak > 0)) return 0.0;
  const std::vector<double> centers = MelBandCenters(cfg);
  for (int b = cfg.n_mels - 1; b >= 0; --b) {
    if (band_mean[b] <= 0) continue;
    const double db = 10.0 * std::log10(band_mean[b] / peak);
    if (db > threshold_db) return 2.0 * centers[b];
  }
  return 0.0;
}

bool FilterTrainingClip(const AudioClip& clip, double threshold_db,
                        double margin) {
  if (clip.sample_rate != kTrainingSampleRate) {
    Fail(ErrorClass::kConfig, "training filter expects 44.1 kHz audio");
  }
  const double native = DetectNativeBandwidth(clip, threshold_db);
  return native >= 2.0 * (kTrainingSampleRate / 2.0) * margin;
}

}  // namespace usrc::dsp
