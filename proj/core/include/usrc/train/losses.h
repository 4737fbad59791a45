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

#ifndef USRC_TRAIN_LOSSES_H_
#define USRC_TRAIN_LOSSES_H_

#include <string>
#include <vector>

#include "usrc/dsp/spectral.h"
#include "usrc/nn/tensor.h"

namespace usrc::train {

struct LossWeights {
  double alpha_low = 2.0;
  double alpha_high = 1.0;
  double lambda_sr = 15.0;
  double lambda_disc = 1.0;
  double lambda_adv = 1.0;
  double lambda_fm = 1.0;
  double lambda_cm = 1.0;

  void Validate() const;
};

struct LossBreakdown {
  double l_sr = 0;
  double l_disc = 0;
  double l_adv = 0;
  double l_fm = 0;
  double l_cm = 0;
  // Weighted sum of all five terms (the reported objective).
  double total = 0;
  // What the generator side minimizes: everything except l_disc.
  double generator = 0;

  std::string ToString() const;
};

LossBreakdown ComposeObjective(double l_sr, double l_disc, double l_adv,
                               double l_fm, double l_cm, const LossWeights& w);

// Weighted mean absolute error over the low and high Mel halves of [N, C, M, T]
// grids. When grad is non-null it receives dL/dx_hat.
template <typename T>
T SubbandReconLoss(const nn::Tensor<T>& x, const nn::Tensor<T>& x_hat,
                   const LossWeights& w, nn::Tensor<T>* grad = nullptr);

double SubbandReconLoss(const dsp::MelSpectrogram& x,
                        const dsp::MelSpectrogram& x_hat, const LossWeights& w);

// Plain mean|x - x_hat| over the whole grid.
template <typename T>
T FullReconLoss(const nn::Tensor<T>& x, const nn::Tensor<T>& x_hat,
                nn::Tensor<T>* grad = nullptr);

template <typename T>
struct AdversarialTerms {
  T l_disc = T(0);
  T l_adv = T(0);
};

// Least-squares GAN terms: l_disc = mean((D(x)-1)^2) + mean(D(x_hat)^2),
// l_adv = mean((D(x_hat)-1)^2).
template <typename T>
AdversarialTerms<T> AdversarialLosses(const nn::Tensor<T>& real_logits,
                                      const nn::Tensor<T>& fake_logits);

// Gradients of l_disc with respect to both logit maps.
template <typename T>
void DiscriminatorLossGrad(const nn::Tensor<T>& real_logits,
                           const nn::Tensor<T>& fake_logits,
                           nn::Tensor<T>* d_real, nn::Tensor<T>* d_fake);

// Gradient of l_adv with respect to the fake logits.
template <typename T>
nn::Tensor<T> GeneratorAdvGrad(const nn::Tensor<T>& fake_logits);

// Mean over stages of mean|f_real - f_fake|; grads are for the fake side.
template <typename T>
T FeatureMatchingLoss(const std::vector<nn::Tensor<T>>& real,
                      const std::vector<nn::Tensor<T>>& fake,
                      std::vector<nn::Tensor<T>>* grad_fake = nullptr);

}  // namespace usrc::train

#endif  // USRC_TRAIN_LOSSES_H_
