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

#include "usrc/train/losses.h"

#include <cmath>
#include <sstream>

#include "usrc/error.h"

namespace usrc::train {

using nn::Tensor;

namespace {

template <typename T>
T Sign(T v) {
  return v > T(0) ? T(1) : (v < T(0) ? T(-1) : T(0));
}

}  // namespace

void LossWeights::Validate() const {
  const double all[] = {alpha_low, alpha_high, lambda_sr, lambda_disc,
                        lambda_adv, lambda_fm, lambda_cm};
  for (double v : all) {
    if (!(v >= 0) || !std::isfinite(v)) {
      Fail(ErrorClass::kConfig, "loss weights must be finite and >= 0");
    }
  }
  if (!(alpha_low + alpha_high > 0)) {
    Fail(ErrorClass::kConfig, "alpha_low + alpha_high must be positive");
  }
}

std::string LossBreakdown::ToString() const {
  std::ostringstream s;
  s.precision(9);
  s << "l_sr=" << l_sr << " l_disc=" << l_disc << " l_adv=" << l_adv
    << " l_fm=" << l_fm << " l_cm=" << l_cm << " total=" << total
    << " generator=" << generator;
  return s.str();
}

LossBreakdown ComposeObjective(double l_sr, double l_disc, double l_adv,
                               double l_fm, double l_cm, const LossWeights& w) {
  LossBreakdown b{l_sr, l_disc, l_adv, l_fm, l_cm, 0, 0};
  b.generator = w.lambda_sr * l_sr + w.lambda_adv * l_adv +
                w.lambda_fm * l_fm + w.lambda_cm * l_cm;
  b.total = w.lambda_sr * l_sr + w.lambda_disc * l_disc + w.lambda_adv * l_adv +
            w.lambda_fm * l_fm + w.lambda_cm * l_cm;
  return b;
}

template <typename T>
T SubbandReconLoss(const Tensor<T>& x, const Tensor<T>& x_hat,
                   const LossWeights& w, Tensor<T>* grad) {
  nn::RequireSameShape(x, x_hat, "sub-band loss");
  if (x.h() % 2 != 0) {
    Fail(ErrorClass::kConfig, "sub-band loss needs an even number of Mel bins");
  }
  const int half = x.h() / 2;
  const std::size_t per_half =
      static_cast<std::size_t>(x.n()) * x.c() * half * x.w();
  const T a_low = static_cast<T>(w.alpha_low);
  const T a_high = static_cast<T>(w.alpha_high);
  const T denom = a_low + a_high;
  if (grad) *grad = Tensor<T>(x.shape());
  T sum_low = 0, sum_high = 0;
  const T g_low = a_low / (denom * static_cast<T>(per_half));
  const T g_high = a_high / (denom * static_cast<T>(per_half));
  for (int n = 0; n < x.n(); ++n) {
    for (int c = 0; c < x.c(); ++c) {
      for (int f = 0; f < x.h(); ++f) {
        const bool low = f < half;
        for (int t = 0; t < x.w(); ++t) {
          const std::size_t i = x.index(n, c, f, t);
          const T diff = x_hat.data()[i] - x.data()[i];
          (low ? sum_low : sum_high) += std::abs(diff);
          if (grad) grad->data()[i] = Sign(diff) * (low ? g_low : g_high);
        }
      }
    }
  }
  const T mean_low = sum_low / static_cast<T>(per_half);
  const T mean_high = sum_high / static_cast<T>(per_half);
  return (a_low * mean_low + a_high * mean_high) / denom;
}

double SubbandReconLoss(const dsp::MelSpectrogram& x,
                        const dsp::MelSpectrogram& x_hat,
                        const LossWeights& w) {
  if (x.values.rows() != x_hat.values.rows() ||
      x.values.cols() != x_hat.values.cols()) {
    Fail(ErrorClass::kShape, "sub-band loss: Mel grids differ in shape");
  }
  Tensor<double> a(1, 1, x.n_mels(), x.n_frames());
  Tensor<double> b(a.shape());
  std::copy(x.values.data(), x.values.data() + x.values.size(), a.data());
  std::copy(x_hat.values.data(), x_hat.values.data() + x_hat.values.size(),
            b.data());
  return SubbandReconLoss(a, b, w);
}

template <typename T>
T FullReconLoss(const Tensor<T>& x, const Tensor<T>& x_hat, Tensor<T>* grad) {
  nn::RequireSameShape(x, x_hat, "reconstruction loss");
  const T inv = T(1) / static_cast<T>(x.size());
  if (grad) *grad = Tensor<T>(x.shape());
  T sum = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const T diff = x_hat.data()[i] - x.data()[i];
    sum += std::abs(diff);
    if (grad) grad->data()[i] = Sign(diff) * inv;
  }
  return sum * inv;
}

template <typename T>
AdversarialTerms<T> AdversarialLosses(const Tensor<T>& real,
                                      const Tensor<T>& fake) {
  T real_term = 0, fake_term = 0, adv = 0;
  for (std::size_t i = 0; i < real.size(); ++i) {
    const T d = real.data()[i] - T(1);
    real_term += d * d;
  }
  for (std::size_t i = 0; i < fake.size(); ++i) {
    const T f = fake.data()[i];
    fake_term += f * f;
    adv += (f - T(1)) * (f - T(1));
  }
  AdversarialTerms<T> out;
  out.l_disc = real_term / static_cast<T>(real.size()) +
               fake_term / static_cast<T>(fake.size());
  out.l_adv = adv / static_cast<T>(fake.size());
  return out;
}

template <typename T>
void DiscriminatorLossGrad(const Tensor<T>& real, const Tensor<T>& fake,
                           Tensor<T>* d_real, Tensor<T>* d_fake) {
  if (d_real) {
    *d_real = Tensor<T>(real.shape());
    const T s = T(2) / static_cast<T>(real.size());
    for (std::size_t i = 0; i < real.size(); ++i) {
      d_real->data()[i] = s * (real.data()[i] - T(1));
    }
  }
  if (d_fake) {
    *d_fake = Tensor<T>(fake.shape());
    const T s = T(2) / static_cast<T>(fake.size());
    for (std::size_t i = 0; i < fake.size(); ++i) {
      d_fake->data()[i] = s * fake.data()[i];
    }
  }
}

template <typename T>
Tensor<T> GeneratorAdvGrad(const Tensor<T>& fake) {
  Tensor<T> d(fake.shape());
  const T s = T(2) / static_cast<T>(fake.size());
  for (std::size_t i = 0; i < fake.size(); ++i) {
    d.data()[i] = s * (fake.data()[i] - T(1));
  }
  return d;
}

template <typename T>
T FeatureMatchingLoss(const std::vector<Tensor<T>>& real,
                      const std::vector<Tensor<T>>& fake,
                      std::vector<Tensor<T>>* grad_fake) {
  if (real.size() != fake.size()) {
    Fail(ErrorClass::kShape, "feature matching: " + std::to_string(real.size()) +
                                 " real vs " + std::to_string(fake.size()) +
                                 " fake stages");
  }
  if (real.empty()) return T(0);
  if (grad_fake) grad_fake->assign(real.size(), {});
  const T stages = static_cast<T>(real.size());
  T total = 0;
  for (std::size_t s = 0; s < real.size(); ++s) {
    nn::RequireSameShape(real[s], fake[s], "feature matching");
    const T inv = T(1) / static_cast<T>(real[s].size());
    T sum = 0;
    Tensor<T>* g = nullptr;
    if (grad_fake) {
      (*grad_fake)[s] = Tensor<T>(real[s].shape());
      g = &(*grad_fake)[s];
    }
    for (std::size_t i = 0; i < real[s].size(); ++i) {
      const T diff = fake[s].data()[i] - real[s].data()[i];
      sum += std::abs(diff);
      if (g) g->data()[i] = Sign(diff) * inv / stages;
    }
    total += sum * inv;
  }
  return total / stages;
}

#define USRC_INSTANTIATE_LOSSES(T)                                             \
  template T SubbandReconLoss(const Tensor<T>&, const Tensor<T>&,              \
                              const LossWeights&, Tensor<T>*);                 \
  template T FullReconLoss(const Tensor<T>&, const Tensor<T>&, Tensor<T>*);    \
  template struct AdversarialTerms<T>;                                         \
  template AdversarialTerms<T> AdversarialLosses(const Tensor<T>&,             \
                                                 const Tensor<T>&);            \
  template void DiscriminatorLossGrad(const Tensor<T>&, const Tensor<T>&,      \
                                      Tensor<T>*, Tensor<T>*);                 \
  template Tensor<T> GeneratorAdvGrad(const Tensor<T>&);                       \
  template T FeatureMatchingLoss(const std::vector<Tensor<T>>&,                \
                                 const std::vector<Tensor<T>>&,                \
                                 std::vector<Tensor<T>>*);

USRC_INSTANTIATE_LOSSES(float)
USRC_INSTANTIATE_LOSSES(double)

}  // namespace usrc::train
