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

#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "usrc/bitstream/codec_io.h"
#include "usrc/bitstream/container.h"
#include "usrc/dsp/spectral.h"
#include "usrc/dsp/synthetic.h"
#include "usrc/quant/quantizer.h"
#include "usrc/train/checkpoint.h"
#include "usrc/train/trainer.h"
#include "usrc/vocoder/vocoder.h"

namespace {

using namespace usrc;

void BM_MelSpectrogram(benchmark::State& state) {
  const dsp::AudioClip clip = dsp::SpeechLike(state.range(0), 44100, 1);
  const dsp::SpectralConfig cfg;
  for (auto _ : state) {
    benchmark::DoNotOptimize(dsp::ComputeMelSpectrogram(clip, cfg));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_MelSpectrogram)->Arg(44100)->Arg(65536)->Unit(benchmark::kMillisecond);

void BM_PackTokens(benchmark::State& state) {
  std::mt19937_64 rng(2);
  std::uniform_int_distribution<std::uint32_t> tok(0, 8191);
  std::vector<std::uint32_t> t(state.range(0));
  for (auto& v : t) v = tok(rng);
  for (auto _ : state) {
    auto bytes = bitstream::PackBits(t, 13);
    benchmark::DoNotOptimize(bitstream::UnpackBits(bytes, t.size(), 13));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_PackTokens)->Arg(64)->Arg(4096);

void BM_Quantize(benchmark::State& state) {
  std::mt19937_64 rng(3);
  quant::Codebook<float> cb(static_cast<int>(state.range(0)), 512, rng);
  nn::Tensor<float> z(1, 512, 8, 8);
  std::normal_distribution<float> n;
  for (float& v : z.vec()) v = n(rng);
  for (auto _ : state) {
    benchmark::DoNotOptimize(quant::Quantize(z, cb, model::FlattenOrder::kFrameWise));
  }
}
BENCHMARK(BM_Quantize)->Arg(1024)->Arg(8192)->Unit(benchmark::kMillisecond);

void BM_EncodeClip(benchmark::State& state) {
  const train::CodecBundle b =
      train::RandomCodecBundle(model::CodecConfig::PresetB(), 4);
  const dsp::AudioClip clip = dsp::SpeechLike(65536, 44100, 4);
  for (auto _ : state) {
    benchmark::DoNotOptimize(bitstream::EncodeClip(b, clip));
  }
}
BENCHMARK(BM_EncodeClip)->Unit(benchmark::kMillisecond);

void BM_GriffinLim(benchmark::State& state) {
  const dsp::SpectralConfig cfg;
  const dsp::MelSpectrogram mel =
      dsp::ComputeMelSpectrogram(dsp::MusicLike(65536, 44100, 5), cfg);
  const dsp::Grid lin = vocoder::MelToLinear(mel);
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        vocoder::GriffinLim(lin, cfg, static_cast<int>(state.range(0))));
  }
}
BENCHMARK(BM_GriffinLim)->Arg(8)->Arg(60)->Unit(benchmark::kMillisecond);

void BM_TrainStepOverfit(benchmark::State& state) {
  const model::CodecConfig codec = model::CodecConfig::PresetOverfit();
  train::TrainConfig cfg;
  cfg.batch_size = 2;
  train::Trainer trainer(codec, cfg);
  std::vector<dsp::Grid> grids;
  for (int k = 0; k < 2; ++k) {
    grids.push_back(
        dsp::ComputeMelSpectrogram(dsp::SpeechLike(65536, 44100, 6 + k), codec.spectral)
            .values);
  }
  train::GridDataset data(grids);
  std::mt19937_64 rng(6);
  const nn::Tensor<float> batch = data.SampleBatch(2, rng);
  for (auto _ : state) {
    benchmark::DoNotOptimize(trainer.Step(batch));
  }
}
BENCHMARK(BM_TrainStepOverfit)->Unit(benchmark::kMillisecond)->Iterations(5);

}  // namespace

BENCHMARK_MAIN();
