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

#include <algorithm>
#include <cmath>
#include <fstream>

#include <nlohmann/json.hpp>

#include "test_util.h"
#include "usrc/dsp/synthetic.h"
#include "usrc/train/checkpoint.h"
#include "usrc/train/trainer.h"
#include "usrc/util/process.h"

namespace usrc::train {
namespace {

using nn::Tensor;
using testing::ThrownClass;
namespace fs = std::filesystem;

model::CodecConfig ToyCodec() {
  model::CodecConfig c;
  c.variant = model::Variant::kCustom;
  c.encoder.channel_schedule = {8, 16};
  c.encoder.time_down = {2, 2};
  c.encoder.freq_down = {2, 2};
  c.encoder.resblocks_per_stage = 1;
  c.encoder.groupnorm_groups = 4;
  c.decoder = model::DecoderConfig::MirrorOf(c.encoder);
  c.quantizer.codebook_size = 16;
  return c;
}

TrainConfig ToyTrain(std::uint64_t seed = 1) {
  TrainConfig t;
  t.seed = seed;
  t.batch_size = 2;
  t.disc.channels = {8, 16};
  t.checkpoint_every = 50;
  return t;
}

std::vector<dsp::Grid> ToyGrids(int count, int frames, std::uint64_t seed) {
  std::vector<dsp::Grid> out;
  for (int k = 0; k < count; ++k) {
    const dsp::AudioClip clip =
        dsp::SpeechLike(static_cast<std::size_t>(frames) * 512, 44100, seed + k);
    dsp::Grid g = dsp::ComputeMelSpectrogram(clip, dsp::SpectralConfig{}).values;
    out.push_back(g);
  }
  return out;
}

Tensor<float> FixedBatch(std::uint64_t seed) {
  GridDataset data(ToyGrids(2, 16, seed));
  std::mt19937_64 rng(seed);
  return data.SampleBatch(2, rng);
}

std::vector<std::vector<float>> Snapshot(const nn::ParameterList<float>& ps) {
  std::vector<std::vector<float>> out;
  for (auto* p : ps) out.emplace_back(p->value.vec().begin(), p->value.vec().end());
  return out;
}

void ExpectBitwise(const LossBreakdown& a, const LossBreakdown& b, bool sr,
                   bool disc, bool cm) {
  if (sr) EXPECT_EQ(a.l_sr, b.l_sr);
  if (disc) {
    EXPECT_EQ(a.l_disc, b.l_disc);
    EXPECT_EQ(a.l_adv, b.l_adv);
    EXPECT_EQ(a.l_fm, b.l_fm);
  }
  if (cm) EXPECT_EQ(a.l_cm, b.l_cm);
}

TEST(TrainerTest, StepsDescendOnFixedBatch) {
  int descended = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Trainer t(ToyCodec(), ToyTrain(seed));
    const Tensor<float> batch = FixedBatch(100 + seed);
    const double first = t.Step(batch).losses.generator;
    const double second = t.Step(batch).losses.generator;
    if (second <= first) ++descended;
  }
  EXPECT_GE(descended, 18);
}

TEST(TrainerTest, ZeroLearningRateChangesNothing) {
  TrainConfig cfg = ToyTrain();
  cfg.lr = 0.0;
  Trainer t(ToyCodec(), cfg);
  const auto g0 = Snapshot(t.GeneratorParameters());
  const auto d0 = Snapshot(t.DiscriminatorParameters());
  const Tensor<float> batch = FixedBatch(3);
  const StepRecord r1 = t.Step(batch);
  const StepRecord r2 = t.Step(batch);
  EXPECT_EQ(Snapshot(t.GeneratorParameters()), g0);
  EXPECT_EQ(Snapshot(t.DiscriminatorParameters()), d0);
  EXPECT_EQ(r1.losses.l_sr, r2.losses.l_sr);
  EXPECT_EQ(t.step(), 2);
}

TEST(TrainerTest, StepKeepsParametersFiniteAndSeparated) {
  Trainer t(ToyCodec(), ToyTrain());
  const Tensor<float> batch = FixedBatch(4);
  const auto g0 = Snapshot(t.GeneratorParameters());
  const auto d0 = Snapshot(t.DiscriminatorParameters());
  const StepRecord r = t.Step(batch);
  EXPECT_EQ(r.step, 1);
  EXPECT_EQ(r.lr, 1e-4);
  EXPECT_GT(r.utilization, 0.0);
  EXPECT_GE(r.perplexity, 1.0);
  EXPECT_NE(Snapshot(t.GeneratorParameters()), g0);
  EXPECT_NE(Snapshot(t.DiscriminatorParameters()), d0);
  for (auto* p : t.GeneratorParameters()) EXPECT_TRUE(nn::AllFinite(p->value));
  for (auto* p : t.DiscriminatorParameters()) EXPECT_TRUE(nn::AllFinite(p->value));
  EXPECT_NEAR(r.losses.total,
              15 * r.losses.l_sr + r.losses.l_disc + r.losses.l_adv +
                  r.losses.l_fm + r.losses.l_cm,
              1e-12);
  // The frozen codebook base is not a parameter and never moves.
  const quant::Matrix<float> base = t.codebook().base();
  t.Step(batch);
  EXPECT_EQ(t.codebook().base(), base);
}

TEST(TrainerTest, WithoutDiscriminatorOnlyGeneratorMoves) {
  TrainConfig cfg = ToyTrain();
  cfg.use_discriminator = false;
  Trainer t(ToyCodec(), cfg);
  const auto d0 = Snapshot(t.DiscriminatorParameters());
  const StepRecord r = t.Step(FixedBatch(5));
  EXPECT_EQ(r.losses.l_disc, 0.0);
  EXPECT_EQ(r.losses.l_adv, 0.0);
  EXPECT_EQ(r.losses.l_fm, 0.0);
  EXPECT_EQ(Snapshot(t.DiscriminatorParameters()), d0);
}

TEST(AblationTest, SubbandToggleOnlyChangesReconstruction) {
  TrainConfig on = ToyTrain(), off = ToyTrain();
  off.use_subband = false;
  Trainer a(ToyCodec(), on), b(ToyCodec(), off);
  const Tensor<float> batch = FixedBatch(6);
  Tensor<float> recon;
  const LossBreakdown la = a.Evaluate(batch, &recon);
  const LossBreakdown lb = b.Evaluate(batch);
  ExpectBitwise(la, lb, false, true, true);
  EXPECT_NE(la.l_sr, lb.l_sr);
  EXPECT_EQ(lb.l_sr, FullReconLoss(batch, recon));
  EXPECT_EQ(la.l_sr, SubbandReconLoss(batch, recon, LossWeights{}));
}

TEST(AblationTest, DiscriminatorToggleOnlyChangesAdversarialTerms) {
  TrainConfig off = ToyTrain();
  off.use_discriminator = false;
  Trainer a(ToyCodec(), ToyTrain()), b(ToyCodec(), off);
  const Tensor<float> batch = FixedBatch(7);
  const LossBreakdown la = a.Evaluate(batch), lb = b.Evaluate(batch);
  ExpectBitwise(la, lb, true, false, true);
  EXPECT_GT(la.l_disc, 0.0);
  EXPECT_EQ(lb.l_disc + lb.l_adv + lb.l_fm, 0.0);
}

TEST(AblationTest, SchedulerToggleOnlyChangesLearningRate) {
  TrainConfig on = ToyTrain();
  on.use_scheduler = true;
  // A coarse rate, so the step-2 change survives float rounding.
  on.scheduler_rate = 0.5;
  Trainer a(ToyCodec(), ToyTrain()), b(ToyCodec(), on);
  const Tensor<float> batch = FixedBatch(8);
  ExpectBitwise(a.Evaluate(batch), b.Evaluate(batch), true, true, true);
  const StepRecord ra = a.Step(batch), rb = b.Step(batch);
  EXPECT_EQ(ra.lr, rb.lr);  // rate^0 on the first step
  ExpectBitwise(ra.losses, rb.losses, true, true, true);
  const StepRecord ra2 = a.Step(batch), rb2 = b.Step(batch);
  EXPECT_EQ(ra2.lr, 1e-4);
  EXPECT_EQ(rb2.lr, 1e-4 * 0.5);
  // The discriminator moves first within a step, at the new rate.
  ExpectBitwise(ra2.losses, rb2.losses, true, false, true);
  EXPECT_NE(ra2.losses.l_fm, rb2.losses.l_fm);
  TrainConfig decay = ToyTrain();
  decay.use_scheduler = true;
  EXPECT_NEAR(decay.LearningRateAt(100000), 1e-5, 1e-5 * 1e-7);
  EXPECT_NEAR(kDefaultSchedulerRate, 0.999976974, 5e-10);
}

TEST(AblationTest, FlattenOrderOnlyReordersTokens) {
  Trainer a(ToyCodec(), ToyTrain()), b(ToyCodec(), ToyTrain());
  b.SetFlattenOrder(model::FlattenOrder::kBandWise);
  const Tensor<float> batch = FixedBatch(9);
  ExpectBitwise(a.Evaluate(batch), b.Evaluate(batch), true, true, true);
  const Tensor<float> z = a.model().encoder().Forward(batch, nullptr);
  const auto qa = quant::Quantize(z, a.codebook(), model::FlattenOrder::kFrameWise);
  const auto qb = quant::Quantize(z, b.codebook(), model::FlattenOrder::kBandWise);
  EXPECT_EQ(qa.quantized.vec(), qb.quantized.vec());
  EXPECT_NE(qa.codes, qb.codes);
  const int f = qa.freq, t = qa.frames;
  for (int fi = 0; fi < f; ++fi) {
    for (int ti = 0; ti < t; ++ti) {
      ASSERT_EQ(qa.codes[ti * f + fi], qb.codes[fi * t + ti]);
    }
  }
}

class TrainLoopTest : public ::testing::Test {
 protected:
  void SetUp() override { dir_ = std::make_unique<util::TempDir>(); }
  fs::path Dir(const std::string& name) const { return dir_->path() / name; }
  std::unique_ptr<util::TempDir> dir_;
};

std::vector<nlohmann::json> ReadMetrics(const fs::path& p) {
  std::ifstream in(p);
  std::vector<nlohmann::json> out;
  std::string line;
  while (std::getline(in, line)) out.push_back(nlohmann::json::parse(line));
  return out;
}

TEST_F(TrainLoopTest, ZeroStepsWritesOnlyInitialCheckpoint) {
  GridDataset data(ToyGrids(2, 16, 1));
  TrainLoopOptions opt;
  opt.out_dir = Dir("zero");
  opt.total_steps = 0;
  const auto written = TrainLoop(data, ToyCodec(), ToyTrain(), opt);
  ASSERT_EQ(written.size(), 1u);
  EXPECT_EQ(written[0].filename(), "step_00000000.ckpt");
  EXPECT_TRUE(fs::exists(written[0]));
  EXPECT_TRUE(ReadMetrics(Dir("zero") / "metrics.jsonl").empty());
}

TEST_F(TrainLoopTest, EmptyDatasetIsConfigError) {
  GridDataset data({});
  TrainLoopOptions opt;
  opt.out_dir = Dir("empty");
  EXPECT_EQ(ThrownClass([&] { TrainLoop(data, ToyCodec(), ToyTrain(), opt); }),
            ErrorClass::kConfig);
}

TEST_F(TrainLoopTest, ResumeMatchesUninterruptedRun) {
  GridDataset data(ToyGrids(4, 16, 2));
  TrainConfig cfg = ToyTrain(5);
  cfg.checkpoint_every = 500;
  TrainLoopOptions full;
  full.out_dir = Dir("full");
  full.total_steps = 600;
  TrainLoop(data, ToyCodec(), cfg, full);

  TrainLoopOptions first = full;
  first.out_dir = Dir("split");
  first.total_steps = 500;
  TrainLoop(data, ToyCodec(), cfg, first);
  TrainLoopOptions second = first;
  second.resume_from = CheckpointPath(Dir("split"), 500);
  second.total_steps = 600;
  TrainLoop(data, ToyCodec(), cfg, second);

  const auto a = ReadMetrics(Dir("full") / "metrics.jsonl");
  const auto b = ReadMetrics(Dir("split") / "metrics.jsonl");
  ASSERT_EQ(a.size(), 600u);
  ASSERT_EQ(b.size(), 600u);
  for (const char* key : {"l_sr", "l_disc", "l_adv", "l_fm", "l_cm", "total"}) {
    EXPECT_NEAR(a.back()[key].get<double>(), b.back()[key].get<double>(), 1e-6)
        << key;
  }
  EXPECT_EQ(b.back()["step"], 600);
  auto ta = Trainer::Load(CheckpointPath(Dir("full"), 600));
  auto tb = Trainer::Load(CheckpointPath(Dir("split"), 600));
  EXPECT_EQ(Snapshot(ta->GeneratorParameters()), Snapshot(tb->GeneratorParameters()));
}

TEST_F(TrainLoopTest, CheckpointRoundTrip) {
  Trainer t(ToyCodec(), ToyTrain());
  const Tensor<float> batch = FixedBatch(10);
  t.Step(batch);
  t.Step(batch);
  const fs::path p = Dir("rt.ckpt");
  t.Save(p);
  auto back = Trainer::Load(p);
  EXPECT_EQ(back->step(), 2);
  EXPECT_EQ(Snapshot(back->GeneratorParameters()), Snapshot(t.GeneratorParameters()));
  EXPECT_EQ(Snapshot(back->DiscriminatorParameters()),
            Snapshot(t.DiscriminatorParameters()));
  EXPECT_EQ(back->codebook().base(), t.codebook().base());
  const LossBreakdown a = t.Evaluate(batch), b = back->Evaluate(batch);
  ExpectBitwise(a, b, true, true, true);
  // One more step from each stays in lockstep.
  ExpectBitwise(t.Step(batch).losses, back->Step(batch).losses, true, true, true);

  const CodecBundle bundle = LoadCodecBundle(p);
  EXPECT_EQ(bundle.step, 2);
  EXPECT_EQ(bundle.config.Fingerprint(), ToyCodec().Fingerprint());
  const model::CodecConfig other = model::CodecConfig::PresetOverfit();
  EXPECT_EQ(ThrownClass([&] { LoadCodecBundle(p, &other); }),
            ErrorClass::kCheckpoint);
}

TEST_F(TrainLoopTest, CorruptCheckpointRejected) {
  Trainer t(ToyCodec(), ToyTrain());
  const fs::path p = Dir("c.ckpt");
  t.Save(p);
  std::vector<std::uint8_t> bytes = dsp::ReadFileBytes(p);
  bytes[bytes.size() / 2] ^= 0x40;
  dsp::WriteFileBytes(Dir("bad.ckpt"), bytes);
  EXPECT_EQ(ThrownClass([&] { Trainer::Load(Dir("bad.ckpt")); }),
            ErrorClass::kCheckpoint);
  bytes = dsp::ReadFileBytes(p);
  bytes.resize(bytes.size() - 9);
  dsp::WriteFileBytes(Dir("short.ckpt"), bytes);
  EXPECT_EQ(ThrownClass([&] { LoadCodecBundle(Dir("short.ckpt")); }),
            ErrorClass::kCheckpoint);
  EXPECT_EQ(ThrownClass([&] { LoadCodecBundle(Dir("missing.ckpt")); }),
            ErrorClass::kIo);
}

TEST(TrainConfigTest, ParsesKeysAndRejectsBadInput) {
  const TrainSetup s = ParseTrainConfig(
      "variant = overfit  # small model\n"
      "lr = 2e-4\nbatch_size = 3\nuse_scheduler = true\n"
      "flatten_order = band_wise\ndisc_channels = [8, 16]\n");
  EXPECT_EQ(s.codec.quantizer.codebook_size, 256);
  EXPECT_EQ(s.train.lr, 2e-4);
  EXPECT_EQ(s.train.batch_size, 3);
  EXPECT_TRUE(s.train.use_scheduler);
  EXPECT_EQ(s.codec.quantizer.order, model::FlattenOrder::kBandWise);
  EXPECT_EQ(s.train.disc.channels, (std::vector<int>{8, 16}));
  const TrainSetup d = ParseTrainConfig("");
  EXPECT_EQ(d.train.batch_size, 20);
  EXPECT_EQ(d.train.lr, 1e-4);
  EXPECT_FALSE(d.train.use_scheduler);
  EXPECT_EQ(d.train.adam.beta1, 0.8);
  EXPECT_EQ(d.train.adam.beta2, 0.99);
  const TrainSetup c = ParseTrainConfig("channels = 16, 32\ntime_down = 2,2\n"
                                        "freq_down = 4,4\ngroupnorm_groups = 8\n");
  EXPECT_EQ(c.codec.variant, model::Variant::kCustom);
  EXPECT_EQ(c.codec.decoder.freq_up, (std::vector<int>{4, 4}));
  for (const char* bad : {"lr = fast\n", "nonsense\n", "colour = red\n",
                          "batch_size = 0\n", "variant = XXL\n",
                          "use_subband = maybe\n"}) {
    EXPECT_EQ(ThrownClass([&] { ParseTrainConfig(bad); }), ErrorClass::kConfig)
        << bad;
  }
}

}  // namespace
}  // namespace usrc::train
