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

#include <gtest/gtest.h>

#include <cmath>

#include "test_util.h"
#include "usrc/train/discriminator.h"
#include "usrc/train/losses.h"

namespace usrc::train {
namespace {

using nn::Tensor;
using testing::RandomTensor;
using testing::ThrownClass;

// Straight elementwise reading of the weighted two-band L1, kept independent
// of the library loop structure.
double SubbandOracle(const Tensor<double>& x, const Tensor<double>& y,
                     double a_low, double a_high) {
  const int half = x.h() / 2;
  double lo = 0, hi = 0;
  long long n_lo = 0, n_hi = 0;
  for (int n = 0; n < x.n(); ++n) {
    for (int c = 0; c < x.c(); ++c) {
      for (int f = 0; f < x.h(); ++f) {
        for (int t = 0; t < x.w(); ++t) {
          const double d = std::fabs(x.at(n, c, f, t) - y.at(n, c, f, t));
          if (f < half) {
            lo += d;
            ++n_lo;
          } else {
            hi += d;
            ++n_hi;
          }
        }
      }
    }
  }
  return (a_low * (lo / n_lo) + a_high * (hi / n_hi)) / (a_low + a_high);
}

TEST(SubbandLossTest, ClosedFormCase) {
  Tensor<double> x(1, 1, 8, 8, 1.0), y(1, 1, 8, 8);
  for (int f = 0; f < 8; ++f) {
    for (int t = 0; t < 8; ++t) y.at(0, 0, f, t) = 1.0 + (f < 4 ? 0.3 : -0.6);
  }
  EXPECT_NEAR(SubbandReconLoss(x, y, LossWeights{}), 0.4, 1e-15);
  EXPECT_EQ(SubbandReconLoss(x, x, LossWeights{}), 0.0);
}

TEST(SubbandLossTest, MatchesElementwiseOracle) {
  std::mt19937_64 rng(1);
  std::uniform_int_distribution<int> half(1, 4), width(1, 8), batch(1, 3);
  std::uniform_real_distribution<double> alpha(0.0, 3.0);
  for (int i = 0; i < 1000; ++i) {
    const int n = batch(rng), h = 2 * half(rng), w = width(rng);
    const Tensor<double> x = RandomTensor<double>(n, 1, h, w, rng, -10, 2);
    const Tensor<double> y = RandomTensor<double>(n, 1, h, w, rng, -10, 2);
    LossWeights lw;
    if (i % 2) {
      lw.alpha_low = alpha(rng);
      lw.alpha_high = alpha(rng) + 0.01;
    }
    ASSERT_NEAR(SubbandReconLoss(x, y, lw),
                SubbandOracle(x, y, lw.alpha_low, lw.alpha_high), 1e-12);
  }
}

TEST(SubbandLossTest, SymmetricAndCollapsesToMae) {
  std::mt19937_64 rng(2);
  const Tensor<double> x = RandomTensor<double>(2, 1, 8, 8, rng);
  const Tensor<double> y = RandomTensor<double>(2, 1, 8, 8, rng);
  const LossWeights w;
  EXPECT_EQ(SubbandReconLoss(x, y, w), SubbandReconLoss(y, x, w));
  LossWeights eq;
  eq.alpha_low = eq.alpha_high = 0.7;
  EXPECT_NEAR(SubbandReconLoss(x, y, eq), FullReconLoss(x, y), 1e-14);
}

TEST(SubbandLossTest, MelOverloadAndErrors) {
  dsp::MelSpectrogram a, b;
  a.values = dsp::Grid::Zero(4, 3);
  b.values = dsp::Grid::Constant(4, 3, 0.5);
  EXPECT_NEAR(SubbandReconLoss(a, b, LossWeights{}), 0.5, 1e-15);
  b.values = dsp::Grid::Zero(4, 2);
  EXPECT_EQ(ThrownClass([&] { SubbandReconLoss(a, b, LossWeights{}); }),
            ErrorClass::kShape);
  EXPECT_EQ(ThrownClass([] {
              SubbandReconLoss(Tensor<double>(1, 1, 4, 4),
                               Tensor<double>(1, 1, 4, 5), LossWeights{});
            }),
            ErrorClass::kShape);
  LossWeights bad;
  bad.alpha_low = -1;
  EXPECT_EQ(ThrownClass([&] { bad.Validate(); }), ErrorClass::kConfig);
  bad = LossWeights{};
  bad.alpha_low = bad.alpha_high = 0;
  EXPECT_EQ(ThrownClass([&] { bad.Validate(); }), ErrorClass::kConfig);
}

TEST(ObjectiveTest, WeightsAndClosedForms) {
  const LossWeights w;
  EXPECT_EQ(w.lambda_sr, 15.0);
  EXPECT_EQ(w.lambda_disc + w.lambda_adv + w.lambda_fm + w.lambda_cm, 4.0);
  EXPECT_EQ(w.alpha_low, 2.0);
  EXPECT_EQ(w.alpha_high, 1.0);
  EXPECT_EQ(ComposeObjective(1, 1, 1, 1, 1, w).total, 19.0);
  EXPECT_EQ(ComposeObjective(0, 0, 0, 0, 0, w).total, 0.0);
  const LossBreakdown b = ComposeObjective(0.4, 0.5, 0.25, 0.2, 0.1, w);
  EXPECT_NEAR(b.total, 7.05, 1e-12);
  EXPECT_NEAR(b.generator, 6.55, 1e-12);
}

TEST(ObjectiveTest, RandomTuplesExact) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 5.0);
  const LossWeights w;
  for (int i = 0; i < 1000; ++i) {
    const double a = u(rng), b = u(rng), c = u(rng), d = u(rng), e = u(rng);
    const LossBreakdown r = ComposeObjective(a, b, c, d, e, w);
    ASSERT_EQ(r.total, 15.0 * a + 1.0 * b + 1.0 * c + 1.0 * d + 1.0 * e);
    ASSERT_EQ(r.generator, 15.0 * a + 1.0 * c + 1.0 * d + 1.0 * e);
  }
}

TEST(AdversarialTest, ClosedForms) {
  AdversarialTerms<double> t =
      AdversarialLosses(Tensor<double>(1, 1, 4, 4, 1.0), Tensor<double>(1, 1, 4, 4, 0.0));
  EXPECT_EQ(t.l_disc, 0.0);
  EXPECT_EQ(t.l_adv, 1.0);
  t = AdversarialLosses(Tensor<double>(1, 1, 4, 4, 0.5), Tensor<double>(1, 1, 4, 4, 0.5));
  EXPECT_EQ(t.l_disc, 0.5);
  EXPECT_EQ(t.l_adv, 0.25);
}

TEST(AdversarialTest, MatchesElementwiseOracle) {
  std::mt19937_64 rng(4);
  for (int i = 0; i < 200; ++i) {
    const Tensor<double> r = RandomTensor<double>(2, 1, 3, 5, rng, -2, 2);
    const Tensor<double> f = RandomTensor<double>(2, 1, 3, 5, rng, -2, 2);
    double dr = 0, df = 0, adv = 0;
    for (std::size_t k = 0; k < r.size(); ++k) {
      dr += std::pow(r.data()[k] - 1.0, 2);
      df += std::pow(f.data()[k], 2);
      adv += std::pow(f.data()[k] - 1.0, 2);
    }
    const AdversarialTerms<double> t = AdversarialLosses(r, f);
    ASSERT_NEAR(t.l_disc, dr / r.size() + df / f.size(), 1e-12);
    ASSERT_NEAR(t.l_adv, adv / f.size(), 1e-12);
  }
}

TEST(FeatureMatchingTest, ClosedFormsAndOracle) {
  std::mt19937_64 rng(5);
  std::vector<Tensor<double>> a{RandomTensor<double>(1, 2, 4, 4, rng)};
  EXPECT_EQ(FeatureMatchingLoss(a, a), 0.0);
  std::vector<Tensor<double>> b = a;
  for (double& v : b[0].vec()) v += 0.2;
  EXPECT_NEAR(FeatureMatchingLoss(a, b), 0.2, 1e-12);

  for (int i = 0; i < 100; ++i) {
    std::vector<Tensor<double>> r, f;
    for (int s = 0; s < 3; ++s) {
      r.push_back(RandomTensor<double>(1, 1 + s, 4 >> s, 4 >> s, rng));
      f.push_back(RandomTensor<double>(1, 1 + s, 4 >> s, 4 >> s, rng));
    }
    double total = 0;
    for (int s = 0; s < 3; ++s) {
      double m = 0;
      for (std::size_t k = 0; k < r[s].size(); ++k) {
        m += std::fabs(r[s].data()[k] - f[s].data()[k]);
      }
      total += m / r[s].size();
    }
    ASSERT_NEAR(FeatureMatchingLoss(r, f), total / 3, 1e-12);
  }
  std::vector<Tensor<double>> shorter(a.begin(), a.begin());
  EXPECT_EQ(ThrownClass([&] { FeatureMatchingLoss(a, shorter); }),
            ErrorClass::kShape);
  std::vector<Tensor<double>> other{Tensor<double>(1, 2, 4, 3)};
  EXPECT_EQ(ThrownClass([&] { FeatureMatchingLoss(a, other); }),
            ErrorClass::kShape);
}

TEST(DiscriminatorTest, DefaultStagePlanOn128Grid) {
  std::mt19937_64 rng(6);
  Discriminator<float> d(DiscriminatorConfig{}, rng);
  const Tensor<float> x = RandomTensor<float>(1, 1, 128, 128, rng);
  const auto out = d.Forward(x, nullptr);
  ASSERT_EQ(out.features.size(), 4u);
  const int dims[] = {64, 32, 16, 8};
  const int chans[] = {32, 64, 128, 256};
  for (int s = 0; s < 4; ++s) {
    EXPECT_EQ(out.features[s].c(), chans[s]);
    EXPECT_EQ(out.features[s].h(), dims[s]);
    EXPECT_EQ(out.features[s].w(), dims[s]);
  }
  EXPECT_EQ(out.logits.c(), 1);
  EXPECT_EQ(out.logits.h(), 8);
}

TEST(DiscriminatorTest, ZeroWeightsGiveZeroOutputs) {
  std::mt19937_64 rng(7);
  Discriminator<double> d(DiscriminatorConfig{}, rng);
  for (auto& s : d.stages()) {
    s.magnitude().value.Fill(0.0);
    s.bias().value.Fill(0.0);
  }
  d.head().magnitude().value.Fill(0.0);
  d.head().bias().value.Fill(0.0);
  const auto out = d.Forward(RandomTensor<double>(1, 1, 32, 32, rng), nullptr);
  for (const auto& f : out.features) {
    for (double v : f.vec()) EXPECT_EQ(v, 0.0);
  }
  for (double v : out.logits.vec()) EXPECT_EQ(v, 0.0);
}

TEST(DiscriminatorTest, ScalarHandComputation) {
  std::mt19937_64 rng(8);
  DiscriminatorConfig cfg;
  cfg.channels = {1};
  cfg.kernel = 1;
  cfg.stride = 1;
  Discriminator<double> d(cfg, rng);
  auto& s = d.stages()[0];
  s.direction().value.data()[0] = 2.0;   // direction only contributes its sign
  s.magnitude().value.data()[0] = 0.5;
  s.bias().value.data()[0] = -0.3;
  d.head().direction().value.data()[0] = -3.0;
  d.head().magnitude().value.data()[0] = 2.0;
  d.head().bias().value.data()[0] = 0.1;
  const auto out = d.Forward(Tensor<double>(1, 1, 1, 1, 0.2), nullptr);
  // pre = 0.5 * 0.2 - 0.3 = -0.2; leaky(0.1) -> -0.02; logit = -2 * -0.02 + 0.1
  EXPECT_NEAR(out.features[0].data()[0], -0.02, 1e-15);
  EXPECT_NEAR(out.logits.data()[0], 0.14, 1e-15);
}

TEST(DiscriminatorTest, ConfigErrors) {
  DiscriminatorConfig c;
  c.kernel = 4;
  EXPECT_EQ(ThrownClass([&] { c.Validate(); }), ErrorClass::kConfig);
  c = DiscriminatorConfig{};
  c.channels.clear();
  EXPECT_EQ(ThrownClass([&] { c.Validate(); }), ErrorClass::kConfig);
  std::mt19937_64 rng(9);
  Discriminator<float> d(DiscriminatorConfig{}, rng);
  EXPECT_EQ(ThrownClass([&] { d.Forward(Tensor<float>(1, 2, 8, 8), nullptr); }),
            ErrorClass::kShape);
}

}  // namespace
}  // namespace usrc::train
