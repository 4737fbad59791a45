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

#ifndef USRC_DSP_FFT_H_
#define USRC_DSP_FFT_H_

#include <complex>
#include <memory>

namespace usrc::dsp {

// Real-input FFT of a fixed size producing the n/2 + 1 non-negative
// frequency bins. Inverse is scaled by 1/n.
class RealFft {
 public:
  explicit RealFft(int n);
  ~RealFft();
  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;

  int size() const { return n_; }
  void Forward(const double* in, std::complex<double>* out);
  void Inverse(const std::complex<double>* in, double* out);

  // Per-thread cached instance.
  static RealFft& ForSize(int n);

 private:
  struct Impl;
  int n_;
  std::unique_ptr<Impl> impl_;
};

}  // namespace usrc::dsp

#endif  // USRC_DSP_FFT_H_
