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

#include "usrc/dsp/resample.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "usrc/error.h"

namespace usrc::dsp {
namespace {

// Phase tables larger than this are evaluated on the fly instead.
constexpr std::size_t kMaxTableEntries = std::size_t(1) << 22;

class SincKernel {
 public:
  SincKernel(double cutoff, double half_width, double beta)
      : cutoff_(cutoff),
        half_width_(half_width),
        beta_(beta),
        norm_(1.0 / std::cyl_bessel_i(0.0, beta)) {}

  // Impulse response at offset tau, in input samples.
  double operator()(double tau) const {
    const double r = tau / half_width_;
    if (std::abs(r) >= 1.0) return 0.0;
    const double x = std::numbers::pi * cutoff_ * tau;
    const double sinc = std::abs(x) < 1e-12 ? 1.0 : std::sin(x) / x;
    const double win =
        std::cyl_bessel_i(0.0, beta_ * std::sqrt(1.0 - r * r)) * norm_;
    return cutoff_ * sinc * win;
  }

 private:
  double cutoff_;
  double half_width_;
  double beta_;
  double norm_;
};

}  // namespace

std::vector<double> Resample(std::span<const double> x, int from_rate,
                             int to_rate, const ResamplerOptions& opt) {
  if (from_rate <= 0 || to_rate <= 0) {
    Fail(ErrorClass::kConfig, "sample rates must be positive");
  }
  if (from_rate == to_rate) return {x.begin(), x.end()};
  if (x.empty()) return {};

  const long long g = std::gcd(from_rate, to_rate);
  const long long up = to_rate / g;
  const long long down = from_rate / g;
  const double cutoff =
      std::min(1.0, static_cast<double>(up) / down) * opt.rolloff;
  const double half_width = opt.zero_crossings / cutoff;
  const SincKernel kernel(cutoff, half_width, opt.kaiser_beta);
  const int taps = static_cast<int>(std::ceil(half_width));

  const std::size_t n_in = x.size();
  const std::size_t n_out = static_cast<std::size_t>(
      std::llround(static_cast<double>(n_in) * to_rate / from_rate));

  // Tap j of phase p weighs x[i + j] for output time i + p/up.
  const std::size_t width = 2 * static_cast<std::size_t>(taps) + 1;
  const bool tabulate = static_cast<std::size_t>(up) * width <= kMaxTableEntries;
  std::vector<double> table;
  if (tabulate) {
    table.resize(static_cast<std::size_t>(up) * width);
    for (long long p = 0; p < up; ++p) {
      const double frac = static_cast<double>(p) / up;
      for (int j = -taps; j <= taps; ++j) {
        table[p * width + (j + taps)] = kernel(frac - j);
      }
    }
  }

  std::vector<double> y(n_out, 0.0);
  std::vector<double> scratch(tabulate ? 0 : width);
  for (std::size_t n = 0; n < n_out; ++n) {
    const long long t = static_cast<long long>(n) * down;
    const long long base = t / up;
    const long long phase = t % up;
    const double* h;
    if (tabulate) {
      h = table.data() + phase * width;
    } else {
      const double frac = static_cast<double>(phase) / up;
      for (int j = -taps; j <= taps; ++j) scratch[j + taps] = kernel(frac - j);
      h = scratch.data();
    }
    const long long lo = std::max<long long>(0, base - taps);
    const long long hi =
        std::min<long long>(static_cast<long long>(n_in) - 1, base + taps);
    double acc = 0;
    for (long long k = lo; k <= hi; ++k) acc += x[k] * h[k - base + taps];
    y[n] = acc;
  }
  return y;
}

AudioClip Resample(const AudioClip& clip, int to_rate,
                   const ResamplerOptions& opt) {
  AudioClip out;
  out.sample_rate = to_rate;
  out.samples = Resample(clip.samples, clip.sample_rate, to_rate, opt);
  return out;
}

}  // namespace usrc::dsp
