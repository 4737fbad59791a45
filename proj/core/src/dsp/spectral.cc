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

#include "usrc/dsp/spectral.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "usrc/dsp/fft.h"
#include "usrc/error.h"

namespace usrc::dsp {
namespace {

constexpr double kLinearHzPerMel = 200.0 / 3.0;
constexpr double kLogRegionHz = 1000.0;
constexpr double kLogRegionMel = kLogRegionHz / kLinearHzPerMel;  // 15
const double kLogStep = std::log(6.4) / 27.0;

// Window of win_length centered inside n_fft.
std::vector<double> PaddedWindow(int n_fft, int win_length) {
  std::vector<double> w(n_fft, 0.0);
  const std::vector<double> hann = HannWindow(win_length);
  const int offset = (n_fft - win_length) / 2;
  for (int i = 0; i < win_length; ++i) w[offset + i] = hann[i];
  return w;
}

}  // namespace

double SpectralConfig::LogFloorValue() const { return std::log(log_floor); }

void SpectralConfig::Validate() const {
  auto bad = [](const std::string& why) {
    Fail(ErrorClass::kConfig, "spectral config: " + why);
  };
  if (sample_rate <= 0) bad("sample_rate must be positive");
  if (hop <= 0 || win_length <= 0 || n_fft <= 0) bad("sizes must be positive");
  if (!(hop <= win_length && win_length <= n_fft)) {
    bad("require hop <= win_length <= n_fft");
  }
  if (n_mels < 2) bad("n_mels must be >= 2");
  const double top = EffectiveFmax();
  if (!(fmin >= 0 && fmin < top && top <= sample_rate / 2.0)) {
    bad("require 0 <= fmin < fmax <= sample_rate / 2");
  }
  if (!(log_floor > 0)) bad("log_floor must be positive");
}

bool SpectralConfig::operator==(const SpectralConfig& o) const {
  return sample_rate == o.sample_rate && n_fft == o.n_fft && hop == o.hop &&
         win_length == o.win_length && n_mels == o.n_mels && fmin == o.fmin &&
         EffectiveFmax() == o.EffectiveFmax() && log_floor == o.log_floor;
}

std::string SpectralConfig::ToString() const {
  std::ostringstream s;
  s << "sr=" << sample_rate << " n_fft=" << n_fft << " hop=" << hop
    << " win=" << win_length << " n_mels=" << n_mels << " fmin=" << fmin
    << " fmax=" << EffectiveFmax() << " floor=" << log_floor;
  return s.str();
}

std::vector<double> HannWindow(int n) {
  std::vector<double> w(n);
  for (int i = 0; i < n; ++i) {
    w[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * i / n);
  }
  return w;
}

double HzToMel(double hz) {
  if (hz < kLogRegionHz) return hz / kLinearHzPerMel;
  return kLogRegionMel + std::log(hz / kLogRegionHz) / kLogStep;
}

double MelToHz(double mel) {
  if (mel < kLogRegionMel) return mel * kLinearHzPerMel;
  return kLogRegionHz * std::exp(kLogStep * (mel - kLogRegionMel));
}

namespace {
std::vector<double> MelEdges(const SpectralConfig& cfg) {
  const double lo = HzToMel(cfg.fmin);
  const double hi = HzToMel(cfg.EffectiveFmax());
  std::vector<double> hz(cfg.n_mels + 2);
  for (int i = 0; i < cfg.n_mels + 2; ++i) {
    hz[i] = MelToHz(lo + (hi - lo) * i / (cfg.n_mels + 1));
  }
  return hz;
}
}  // namespace

std::vector<double> MelBandCenters(const SpectralConfig& cfg) {
  const std::vector<double> edges = MelEdges(cfg);
  return {edges.begin() + 1, edges.end() - 1};
}

Grid MelFilterbank(const SpectralConfig& cfg) {
  cfg.Validate();
  const int bins = cfg.n_fft / 2 + 1;
  const std::vector<double> edges = MelEdges(cfg);
  Grid fb = Grid::Zero(cfg.n_mels, bins);
  for (int m = 0; m < cfg.n_mels; ++m) {
    const double left = edges[m], center = edges[m + 1], right = edges[m + 2];
    const double enorm = 2.0 / (right - left);
    for (int k = 0; k < bins; ++k) {
      const double f = static_cast<double>(k) * cfg.sample_rate / cfg.n_fft;
      const double lower = (f - left) / (center - left);
      const double upper = (right - f) / (right - center);
      fb(m, k) = std::max(0.0, std::min(lower, upper)) * enorm;
    }
  }
  return fb;
}

int NumFrames(std::size_t length, int hop) {
  return static_cast<int>((length + hop - 1) / hop);
}

ComplexGrid Stft(std::span<const double> x, int n_fft, int hop,
                 int win_length) {
  const int frames = NumFrames(x.size(), hop);
  const int bins = n_fft / 2 + 1;
  const std::vector<double> window = PaddedWindow(n_fft, win_length);
  ComplexGrid out(bins, frames);
  std::vector<double> buf(n_fft);
  std::vector<std::complex<double>> spec(bins);
  RealFft& fft = RealFft::ForSize(n_fft);
  const long long n = static_cast<long long>(x.size());
  for (int t = 0; t < frames; ++t) {
    const long long start = static_cast<long long>(t) * hop - n_fft / 2;
    for (int i = 0; i < n_fft; ++i) {
      const long long idx = start + i;
      buf[i] = (idx >= 0 && idx < n) ? x[idx] * window[i] : 0.0;
    }
    fft.Forward(buf.data(), spec.data());
    for (int k = 0; k < bins; ++k) out(k, t) = spec[k];
  }
  return out;
}

Grid StftMagnitude(std::span<const double> x, int n_fft, int hop,
                   int win_length) {
  return Stft(x, n_fft, hop, win_length).cwiseAbs();
}

std::vector<double> Istft(const ComplexGrid& spec, int n_fft, int hop,
                          int win_length, std::size_t length) {
  const int frames = static_cast<int>(spec.cols());
  const int bins = n_fft / 2 + 1;
  if (spec.rows() != bins) {
    Fail(ErrorClass::kShape, "ISTFT expects " + std::to_string(bins) + " bins");
  }
  const std::vector<double> window = PaddedWindow(n_fft, win_length);
  const long long padded = static_cast<long long>(frames - 1) * hop + n_fft;
  std::vector<double> acc(padded, 0.0), norm(padded, 0.0);
  std::vector<std::complex<double>> buf(bins);
  std::vector<double> frame(n_fft);
  RealFft& fft = RealFft::ForSize(n_fft);
  for (int t = 0; t < frames; ++t) {
    for (int k = 0; k < bins; ++k) buf[k] = spec(k, t);
    fft.Inverse(buf.data(), frame.data());
    const long long start = static_cast<long long>(t) * hop;
    for (int i = 0; i < n_fft; ++i) {
      acc[start + i] += frame[i] * window[i];
      norm[start + i] += window[i] * window[i];
    }
  }
  std::vector<double> y(length, 0.0);
  const long long offset = n_fft / 2;
  for (std::size_t i = 0; i < length; ++i) {
    const long long j = static_cast<long long>(i) + offset;
    if (j < padded && norm[j] > 1e-11) y[i] = acc[j] / norm[j];
  }
  return y;
}

MelSpectrogram ComputeMelSpectrogram(const AudioClip& clip,
                                     const SpectralConfig& cfg) {
  cfg.Validate();
  if (clip.sample_rate != cfg.sample_rate) {
    Fail(ErrorClass::kConfig, "clip is " + std::to_string(clip.sample_rate) +
                                  " Hz but config expects " +
                                  std::to_string(cfg.sample_rate));
  }
  if (clip.samples.size() < static_cast<std::size_t>(cfg.win_length)) {
    Fail(ErrorClass::kInsufficientInput,
         "clip of " + std::to_string(clip.samples.size()) +
             " samples is shorter than one window (" +
             std::to_string(cfg.win_length) + ")");
  }
  const Grid mag = StftMagnitude(clip.samples, cfg.n_fft, cfg.hop, cfg.win_length);
  const Grid fb = MelFilterbank(cfg);
  MelSpectrogram out;
  out.config = cfg;
  out.values = (fb * mag).cwiseMax(cfg.log_floor).array().log().matrix();
  return out;
}

Grid LogMagnitudeSpectrogram(const AudioClip& clip, const SpectralConfig& cfg) {
  cfg.Validate();
  if (clip.sample_rate != cfg.sample_rate) {
    Fail(ErrorClass::kConfig, "sample rate mismatch for spectrogram");
  }
  if (clip.samples.size() < static_cast<std::size_t>(cfg.win_length)) {
    Fail(ErrorClass::kInsufficientInput, "clip shorter than one window");
  }
  const Grid mag = StftMagnitude(clip.samples, cfg.n_fft, cfg.hop, cfg.win_length);
  return mag.cwiseMax(cfg.log_floor).array().log().matrix();
}

SubBandPair SplitSubbands(const Grid& mel) {
  if (mel.rows() % 2 != 0) {
    Fail(ErrorClass::kConfig, "sub-band split needs an even number of Mel bins, got " +
                                  std::to_string(mel.rows()));
  }
  const Eigen::Index half = mel.rows() / 2;
  return {mel.topRows(half), mel.bottomRows(half)};
}

Grid MergeSubbands(const SubBandPair& bands) {
  if (bands.low.rows() != bands.high.rows() ||
      bands.low.cols() != bands.high.cols()) {
    Fail(ErrorClass::kShape, "sub-band halves differ in shape");
  }
  Grid out(bands.low.rows() * 2, bands.low.cols());
  out.topRows(bands.low.rows()) = bands.low;
  out.bottomRows(bands.high.rows()) = bands.high;
  return out;
}

}  // namespace usrc::dsp
