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

// Central finite differences against the analytic backward passes, all in
// double precision on grids no larger than 8x8.

#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <span>

#include "test_util.h"
#include "usrc/model/codec_model.h"
#include "usrc/quant/quantizer.h"
#include "usrc/train/discriminator.h"
#include "usrc/train/losses.h"

namespace usrc::train {
namespace {

using nn::Tensor;
using testing::RandomTensor;

constexpr double kEps = 1e-6;
constexpr double kTol = 1e-4;

// Numerical gradient of f with respect to every entry of *x.
std::vector<double> NumericGrad(std::span<double> x,
                                const std::function<double()>& f) {
  std::vector<double> g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double keep = x[i];
    x[i] = keep + kEps;
    const double up = f();
    x[i] = keep - kEps;
    const double down = f();
    x[i] = keep;
    g[i] = (up - down) / (2 * kEps);
  }
  return g;
}

double RelativeError(std::span<const double> a, std::span<const double> b) {
  double diff = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff += (a[i] - b[i]) * (a[i] - b[i]);
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  return std::sqrt(diff) / std::max({std::sqrt(na), std::sqrt(nb), 1e-12});
}

// Pushes every entry at least margin away from the matching entry of ref so
// |x - ref| stays differentiable under the probe step.
void KeepAway(Tensor<double>& x, const Tensor<double>& ref, double margin) {
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = x.data()[i] - ref.data()[i];
    if (std::fabs(d) < margin) x.data()[i] = ref.data()[i] + (d < 0 ? -margin : margin);
  }
}

TEST(GradientTest, SubbandReconstruction) {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 5; ++trial) {
    const Tensor<double> x = RandomTensor<double>(2, 1, 8, 8, rng);
    Tensor<double> y = RandomTensor<double>(2, 1, 8, 8, rng);
    KeepAway(y, x, 1e-3);
    const LossWeights w;
    Tensor<double> grad;
    SubbandReconLoss(x, y, w, &grad);
    const auto num = NumericGrad(y.vec(), [&] { return SubbandReconLoss(x, y, w); });
    EXPECT_LT(RelativeError(grad.vec(), num), kTol);
    FullReconLoss(x, y, &grad);
    const auto num_full = NumericGrad(y.vec(), [&] { return FullReconLoss(x, y); });
    EXPECT_LT(RelativeError(grad.vec(), num_full), kTol);
  }
}

TEST(GradientTest, FeatureMatchingThroughDiscriminator) {
  std::mt19937_64 rng(2);
  DiscriminatorConfig cfg;
  cfg.channels = {4, 6};
  Discriminator<double> d(cfg, rng);
  const Tensor<double> x = RandomTensor<double>(1, 1, 8, 8, rng);
  Tensor<double> y = RandomTensor<double>(1, 1, 8, 8, rng);
  const auto real = d.Forward(x, nullptr);
  auto loss = [&] { return FeatureMatchingLoss(real.features, d.Forward(y, nullptr).features); };
  typename Discriminator<double>::Trace tr;
  const auto fake = d.Forward(y, &tr);
  std::vector<Tensor<double>> gf;
  FeatureMatchingLoss(real.features, fake.features, &gf);
  const Tensor<double> dy = d.Backward(tr, Tensor<double>(fake.logits.shape()), &gf);
  EXPECT_LT(RelativeError(dy.vec(), NumericGrad(y.vec(), loss)), kTol);
}

TEST(GradientTest, AdversarialThroughDiscriminator) {
  std::mt19937_64 rng(3);
  DiscriminatorConfig cfg;
  cfg.channels = {4, 6};
  Discriminator<double> d(cfg, rng);
  const Tensor<double> x = RandomTensor<double>(1, 1, 8, 8, rng);
  Tensor<double> y = RandomTensor<double>(1, 1, 8, 8, rng);
  auto loss = [&] {
    return AdversarialLosses(d.Forward(x, nullptr).logits, d.Forward(y, nullptr).logits).l_adv;
  };
  typename Discriminator<double>::Trace tr;
  const auto fake = d.Forward(y, &tr);
  const Tensor<double> dy = d.Backward(tr, GeneratorAdvGrad(fake.logits), nullptr);
  EXPECT_LT(RelativeError(dy.vec(), NumericGrad(y.vec(), loss)), kTol);
}

TEST(GradientTest, DiscriminatorLossParameters) {
  std::mt19937_64 rng(4);
  DiscriminatorConfig cfg;
  cfg.channels = {3, 4};
  Discriminator<double> d(cfg, rng);
  const Tensor<double> x = RandomTensor<double>(2, 1, 8, 8, rng);
  const Tensor<double> y = RandomTensor<double>(2, 1, 8, 8, rng);
  auto loss = [&] {
    return AdversarialLosses(d.Forward(x, nullptr).logits, d.Forward(y, nullptr).logits).l_disc;
  };
  for (auto* p : d.Parameters()) p->ZeroGrad();
  typename Discriminator<double>::Trace tr_real, tr_fake;
  const auto real = d.Forward(x, &tr_real);
  const auto fake = d.Forward(y, &tr_fake);
  Tensor<double> dr, df;
  DiscriminatorLossGrad(real.logits, fake.logits, &dr, &df);
  d.Backward(tr_real, dr, nullptr);
  d.Backward(tr_fake, df, nullptr);
  for (auto* p : d.Parameters()) {
    EXPECT_LT(RelativeError(p->grad.vec(), NumericGrad(p->value.vec(), loss)), kTol)
        << p->name;
  }
}

TEST(GradientTest, CommitmentBothSides) {
  std::mt19937_64 rng(5);
  quant::Codebook<double> cb(16, 4, rng);
  Tensor<double> z = RandomTensor<double>(2, 4, 3, 3, rng);
  const auto r = quant::Quantize(z, cb, model::FlattenOrder::kFrameWise);
  // Each side of the commitment loss is half of the reported value; the
  // assignment stays fixed under the probe step.
  auto half = [&] {
    return quant::Quantize(z, cb, model::FlattenOrder::kFrameWise).commitment_loss / 2;
  };
  cb.projection().ZeroGrad();
  const Tensor<double> dz = quant::CommitmentBackward(z, r, cb, 1.0);
  EXPECT_LT(RelativeError(dz.vec(), NumericGrad(z.vec(), half)), kTol);
  EXPECT_LT(RelativeError(cb.projection().grad.vec(),
                          NumericGrad(cb.projection().value.vec(), half)),
            kTol);
  // Weight scales linearly.
  cb.projection().ZeroGrad();
  const Tensor<double> dz3 = quant::CommitmentBackward(z, r, cb, 3.0);
  for (std::size_t i = 0; i < dz.size(); ++i) {
    EXPECT_NEAR(dz3.data()[i], 3 * dz.data()[i], 1e-15);
  }
}

TEST(GradientTest, CodecReconstructionThroughEncoderAndDecoder) {
  model::CodecConfig cfg;
  cfg.variant = model::Variant::kCustom;
  cfg.encoder.channel_schedule = {4, 4};
  cfg.encoder.time_down = {2, 2};
  cfg.encoder.freq_down = {2, 2};
  cfg.encoder.resblocks_per_stage = 1;
  cfg.encoder.groupnorm_groups = 2;
  cfg.encoder.latent_channels = 6;
  cfg.decoder = model::DecoderConfig::MirrorOf(cfg.encoder);
  cfg.decoder.groupnorm_groups = 2;
  cfg.quantizer.codebook_size = 16;
  model::CodecModel<double> m(cfg, 6);
  std::mt19937_64 rng(7);
  Tensor<double> x = RandomTensor<double>(2, 1, 8, 8, rng);
  const LossWeights w;
  auto forward = [&] {
    return m.decoder().Forward(m.encoder().Forward(x, nullptr), nullptr);
  };
  // Target far from any output so |.| never switches sign under the probe.
  Tensor<double> target = forward();
  for (double& v : target.vec()) v += 5.0;
  auto loss = [&] { return SubbandReconLoss(target, forward(), w); };

  for (auto* p : m.Parameters()) p->ZeroGrad();
  typename model::Encoder<double>::Trace et;
  typename model::Decoder<double>::Trace dt;
  const Tensor<double> z = m.encoder().Forward(x, &et);
  const Tensor<double> y = m.decoder().Forward(z, &dt);
  Tensor<double> dy;
  SubbandReconLoss(target, y, w, &dy);
  const Tensor<double> dz = m.decoder().Backward(dt, dy);
  const Tensor<double> dx = m.encoder().Backward(et, dz, true);
  for (auto* p : m.Parameters()) {
    EXPECT_LT(RelativeError(p->grad.vec(), NumericGrad(p->value.vec(), loss)), kTol)
        << p->name;
  }
  EXPECT_LT(RelativeError(dx.vec(), NumericGrad(x.vec(), loss)), kTol);
}

}  // namespace
}  // namespace usrc::train
