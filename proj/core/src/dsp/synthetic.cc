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

#include "usrc/dsp/synthetic.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

namespace usrc::dsp {
namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;

void LimitPeak(AudioClip& c, double limit) {
  double peak = 0;
  for (double s : c.samples) peak = std::max(peak, std::abs(s));
  if (peak > limit) {
    for (double& s : c.samples) s *= limit / peak;
  }
}

// One-pole smoothing coefficient for a corner frequency.
double PoleFor(double hz, int sample_rate) {
  return std::exp(-kTwoPi * hz / sample_rate);
}
}  // namespace

AudioClip SineTone(double freq_hz, double amplitude, std::size_t length,
                   int sample_rate) {
  AudioClip c;
  c.sample_rate = sample_rate;
  c.samples.resize(length);
  for (std::size_t i = 0; i < length; ++i) {
    c.samples[i] = amplitude * std::sin(kTwoPi * freq_hz * i / sample_rate);
  }
  return c;
}

AudioClip WhiteNoise(double amplitude, std::size_t length, int sample_rate,
                     std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  AudioClip c;
  c.sample_rate = sample_rate;
  c.samples.resize(length);
  for (double& s : c.samples) s = amplitude * u(rng);
  return c;
}

AudioClip LowpassNoise(double cutoff_hz, double amplitude, std::size_t length,
                       int sample_rate, std::uint64_t seed, int half_taps) {
  const std::size_t pad = static_cast<std::size_t>(half_taps);
  const AudioClip raw = WhiteNoise(1.0, length + 2 * pad, sample_rate, seed);
  const double fc = cutoff_hz / sample_rate;
  std::vector<double> h(2 * pad + 1);
  for (int k = -half_taps; k <= half_taps; ++k) {
    const double x = kTwoPi * fc * k;
    const double sinc = k == 0 ? 2 * fc : std::sin(x) / (std::numbers::pi * k);
    const double win = 0.42 + 0.5 * std::cos(std::numbers::pi * k / half_taps) +
                       0.08 * std::cos(2 * std::numbers::pi * k / half_taps);
    h[k + half_taps] = sinc * win;
  }
  AudioClip c;
  c.sample_rate = sample_rate;
  c.samples.resize(length);
  double peak = 0;
  for (std::size_t i = 0; i < length; ++i) {
    double acc = 0;
    for (std::size_t j = 0; j < h.size(); ++j) acc += h[j] * raw.samples[i + j];
    c.samples[i] = acc;
    peak = std::max(peak, std::abs(acc));
  }
  if (peak > 0) {
    for (double& s : c.samples) s *= amplitude / peak;
  }
  return c;
}

AudioClip Silence(std::size_t length, int sample_rate) {
  AudioClip c;
  c.sample_rate = sample_rate;
  c.samples.assign(length, 0.0);
  return c;
}

AudioClip SpeechLike(std::size_t length, int sample_rate, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double f0 = 90.0 + 180.0 * u(rng);
  const double glide = (u(rng) - 0.5) * 0.6;
  const double vibrato_hz = 4.0 + 3.0 * u(rng);
  const double syllable_hz = 2.5 + 3.0 * u(rng);
  const double formant1 = 400.0 + 500.0 * u(rng);
  const double formant2 = 1200.0 + 1400.0 * u(rng);
  const double tilt = 0.6 + 0.6 * u(rng);
  const double noise_level = 0.002 + 0.004 * u(rng);
  std::normal_distribution<double> noise(0.0, 1.0);

  AudioClip c;
  c.sample_rate = sample_rate;
  c.samples.resize(length);
  const double nyquist = sample_rate / 2.0;
  const double dur = static_cast<double>(length) / sample_rate;
  double phase = 0;
  for (std::size_t i = 0; i < length; ++i) {
    const double t = static_cast<double>(i) / sample_rate;
    const double f = f0 * (1.0 + glide * t / std::max(dur, 1e-9)) *
                     (1.0 + 0.02 * std::sin(kTwoPi * vibrato_hz * t));
    phase += kTwoPi * f / sample_rate;
    double v = 0;
    for (int k = 1; k * f < nyquist && k <= 60; ++k) {
      const double hf = k * f;
      const double env =
          std::pow(k, -tilt) *
          (1.0 + 2.0 * std::exp(-std::pow((hf - formant1) / 150.0, 2)) +
           1.5 * std::exp(-std::pow((hf - formant2) / 250.0, 2)));
      v += env * std::sin(k * phase);
    }
    const double syllable = 0.5 - 0.5 * std::cos(kTwoPi * syllable_hz * t);
    c.samples[i] = 0.25 * syllable * v + noise_level * noise(rng);
  }
  LimitPeak(c, 0.9);
  return c;
}

AudioClip MusicLike(std::size_t length, int sample_rate, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  static constexpr int kScale[] = {0, 2, 4, 7, 9};
  const double root = 110.0 * std::pow(2.0, u(rng));
  const double nyquist = sample_rate / 2.0;
  std::normal_distribution<double> noise(0.0, 1.0);

  AudioClip c;
  c.sample_rate = sample_rate;
  c.samples.assign(length, 0.0);
  std::size_t start = 0;
  while (start < length) {
    const std::size_t dur =
        static_cast<std::size_t>((0.15 + 0.3 * u(rng)) * sample_rate);
    const std::size_t end = std::min(length, start + dur);
    const int voices = 1 + static_cast<int>(3 * u(rng));
    const double tilt = 0.7 + 1.3 * u(rng);
    const double decay = 2.0 + 10.0 * u(rng);
    const double level = 0.3 + 0.7 * u(rng);
    for (int v = 0; v < voices; ++v) {
      const int degree = static_cast<int>(15 * u(rng));
      const double f = root * std::pow(2.0, (12 * (degree / 5) + kScale[degree % 5]) / 12.0);
      for (std::size_t i = start; i < end; ++i) {
        const double t = static_cast<double>(i - start) / sample_rate;
        const double env = std::min(1.0, t / 0.005) * std::exp(-decay * t);
        double acc = 0;
        for (int k = 1; k * f < nyquist && k <= 24; ++k) {
          acc += std::pow(k, -tilt) * std::sin(kTwoPi * k * f * t);
        }
        c.samples[i] += 0.2 * level * env * acc / voices;
      }
    }
    if (u(rng) < 0.5) {
      // Hi-hat style burst: differentiated noise with a fast decay.
      const double amp = 0.05 + 0.15 * u(rng);
      double prev = 0;
      for (std::size_t i = start; i < std::min(end, start + sample_rate / 10); ++i) {
        const double t = static_cast<double>(i - start) / sample_rate;
        const double n = noise(rng);
        c.samples[i] += amp * std::exp(-t / 0.02) * (n - prev);
        prev = n;
      }
    }
    start = end;
  }
  LimitPeak(c, 0.9);
  return c;
}

AudioClip AmbientLike(std::size_t length, int sample_rate, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> noise(0.0, 1.0);
  struct Layer {
    double lo_pole, hi_pole, lfo_hz, lfo_phase, gain;
    double lo = 0, hi = 0;
  };
  std::vector<Layer> layers;
  for (int l = 0; l < 3; ++l) {
    const double center = 200.0 * std::pow(80.0, u(rng));
    layers.push_back({PoleFor(std::min(center * 1.6, sample_rate * 0.45), sample_rate),
                      PoleFor(center / 1.6, sample_rate), 0.1 + 1.5 * u(rng),
                      kTwoPi * u(rng), 0.3 + 0.7 * u(rng)});
  }
  const double click_rate = 2.0 + 30.0 * u(rng);
  AudioClip c;
  c.sample_rate = sample_rate;
  c.samples.assign(length, 0.0);
  double click = 0;
  for (std::size_t i = 0; i < length; ++i) {
    const double t = static_cast<double>(i) / sample_rate;
    double v = 0;
    for (Layer& layer : layers) {
      const double n = noise(rng);
      layer.lo = layer.lo_pole * layer.lo + (1 - layer.lo_pole) * n;   // lowpass at the top edge
      layer.hi = layer.hi_pole * layer.hi + (1 - layer.hi_pole) * layer.lo;  // its lowpass, removed below
      const double lfo = 0.55 + 0.45 * std::sin(kTwoPi * layer.lfo_hz * t + layer.lfo_phase);
      v += layer.gain * lfo * (layer.lo - layer.hi);
    }
    if (u(rng) < click_rate / sample_rate) click = 0.2 + 0.6 * u(rng);
    v += click * noise(rng);
    click *= 0.995;
    c.samples[i] = 0.3 * v;
  }
  LimitPeak(c, 0.9);
  return c;
}

}  // namespace usrc::dsp
