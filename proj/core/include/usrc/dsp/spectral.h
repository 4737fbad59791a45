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

#ifndef USRC_DSP_SPECTRAL_H_
#define USRC_DSP_SPECTRAL_H_

#include <complex>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "usrc/dsp/audio.h"

namespace usrc::dsp {

// Row-major real grid. Rows are frequency bins, columns are frames.
using Grid = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ComplexGrid =
    Eigen::Matrix<std::complex<double>, Eigen::Dynamic, Eigen::Dynamic,
                  Eigen::RowMajor>;

struct SpectralConfig {
  int sample_rate = 44100;
  int n_fft = 2048;
  int hop = 512;
  int win_length = 2048;
  int n_mels = 128;
  double fmin = 0.0;
  double fmax = 0.0;  // 0 selects sample_rate / 2
  double log_floor = 1e-5;

  double EffectiveFmax() const { return fmax > 0 ? fmax : sample_rate / 2.0; }
  double LogFloorValue() const;

  // Throws kConfig when an invariant is violated.
  void Validate() const;

  // Configs compare by resolved values, so fmax = 0 equals fmax = sr / 2.
  bool operator==(const SpectralConfig& o) const;

  std::string ToString() const;

  static SpectralConfig Default44k() { return {}; }
};

// Natural-log Mel magnitudes, [n_mels x n_frames].
struct MelSpectrogram {
  Grid values;
  SpectralConfig config;

  int n_mels() const { return static_cast<int>(values.rows()); }
  int n_frames() const { return static_cast<int>(values.cols()); }
};

struct SubBandPair {
  Grid low;   // Mel rows [0, m/2)
  Grid high;  // Mel rows [m/2, m)
};

// Periodic Hann window of length n.
std::vector<double> HannWindow(int n);

// Mel scale with the linear region below 1 kHz and log spacing above.
double HzToMel(double hz);
double MelToHz(double mel);

// Area-normalized triangular filterbank, [n_mels x (n_fft/2 + 1)].
Grid MelFilterbank(const SpectralConfig& cfg);

// Center frequency of each Mel band in Hz.
std::vector<double> MelBandCenters(const SpectralConfig& cfg);

// Number of frames produced for a signal of the given length.
int NumFrames(std::size_t length, int hop);

// Center-padded (zeros) STFT, [n_fft/2 + 1 x NumFrames(len, hop)].
ComplexGrid Stft(std::span<const double> x, int n_fft, int hop,
                 int win_length);

// Magnitude of the STFT above.
Grid StftMagnitude(std::span<const double> x, int n_fft, int hop,
                   int win_length);

// Windowed overlap-add inverse of Stft() with squared-window normalization.
std::vector<double> Istft(const ComplexGrid& spec, int n_fft, int hop,
                          int win_length, std::size_t length);

// values = ln(max(log_floor, M * |STFT|)).
MelSpectrogram ComputeMelSpectrogram(const AudioClip& clip,
                                     const SpectralConfig& cfg);

// Linear-frequency log magnitude: ln(max(log_floor, |STFT|)).
Grid LogMagnitudeSpectrogram(const AudioClip& clip, const SpectralConfig& cfg);

SubBandPair SplitSubbands(const Grid& mel);
Grid MergeSubbands(const SubBandPair& bands);

}  // namespace usrc::dsp

#endif  // USRC_DSP_SPECTRAL_H_
