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

#include "usrc/dsp/fft.h"

#include <map>

#include <unsupported/Eigen/FFT>

namespace usrc::dsp {

struct RealFft::Impl {
  Eigen::FFT<double> fft;
};

RealFft::RealFft(int n) : n_(n), impl_(std::make_unique<Impl>()) {
  impl_->fft.SetFlag(Eigen::FFT<double>::HalfSpectrum);
}

RealFft::~RealFft() = default;

void RealFft::Forward(const double* in, std::complex<double>* out) {
  impl_->fft.fwd(out, in, n_);
}

void RealFft::Inverse(const std::complex<double>* in, double* out) {
  impl_->fft.inv(out, in, n_);
}

RealFft& RealFft::ForSize(int n) {
  thread_local std::map<int, std::unique_ptr<RealFft>> cache;
  auto& slot = cache[n];
  if (!slot) slot = std::make_unique<RealFft>(n);
  return *slot;
}

}  // namespace usrc::dsp
