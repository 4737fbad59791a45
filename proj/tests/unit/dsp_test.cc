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

#include <cctype>
#include <cmath>
#include <numbers>

#include "test_util.h"
#include "usrc/dsp/audio.h"
#include "usrc/dsp/bandwidth.h"
#include "usrc/dsp/fft.h"
#include "usrc/dsp/resample.h"
#include "usrc/dsp/spectral.h"
#include "usrc/dsp/synthetic.h"

namespace usrc::dsp {
namespace {

using testing::DataPath;
using testing::ThrownClass;

double FixtureValue(int channel, std::size_t i, int sr) {
  const double t = static_cast<double>(i) / sr;
  if (channel == 0) return 0.5 * std::sin(2 * std::numbers::pi * 1000 * t);
  return 0.25 * std::sin(2 * std::numbers::pi * 3000 * t);
}

struct FixtureCase {
  const char* name;
  int sample_rate;
  int channels;
  int bits;
  double tol;
};

void PrintTo(const FixtureCase& fc, std::ostream* os) { *os << fc.name; }

class FixtureTest : public ::testing::TestWithParam<FixtureCase> {};

TEST_P(FixtureTest, DecodesTheKnownSignal) {
  const FixtureCase& fc = GetParam();
  const DecodedAudio d = DecodeAudioFile(DataPath(fc.name));
  EXPECT_EQ(d.sample_rate, fc.sample_rate);
  EXPECT_EQ(d.channels, fc.channels);
  EXPECT_EQ(d.bits_per_sample, fc.bits);
  ASSERT_EQ(d.frames(), static_cast<std::size_t>(fc.sample_rate / 4));
  double worst = 0;
  for (std::size_t i = 0; i < d.frames(); ++i) {
    for (int c = 0; c < fc.channels; ++c) {
      worst = std::max(worst, std::abs(d.interleaved[i * fc.channels + c] -
                                       FixtureValue(c, i, fc.sample_rate)));
    }
  }
  EXPECT_LT(worst, fc.tol);
}

INSTANTIATE_TEST_SUITE_P(
    Files, FixtureTest,
    ::testing::Values(FixtureCase{"mono16.wav", 44100, 1, 16, 1e-4},
                      FixtureCase{"stereo24.wav", 44100, 2, 24, 1e-6},
                      FixtureCase{"mono_float.wav", 44100, 1, 32, 1e-7},
                      FixtureCase{"mono48k16.wav", 48000, 1, 16, 1e-4},
                      FixtureCase{"mono16.flac", 44100, 1, 16, 1e-4},
                      FixtureCase{"stereo16.flac", 44100, 2, 16, 1e-4},
                      FixtureCase{"stereo24.flac", 48000, 2, 24, 1e-6}),
    [](const auto& info) {
      std::string n = info.param.name;
      for (char& ch : n) {
        if (!std::isalnum(static_cast<unsigned char>(ch))) ch = '_';
      }
      return n;
    });

TEST(LoadAudio, StereoFortyEightKilohertzBecomesMonoAtTarget) {
  const AudioClip clip = LoadAudio(DataPath("stereo24.flac"), 44100);
  EXPECT_EQ(clip.sample_rate, 44100);
  EXPECT_EQ(clip.samples.size(), static_cast<std::size_t>(std::llround(12000.0 * 44100 / 48000)));
  // Away from the edges the downmix is the mean of both sines.
  double worst = 0;
  for (std::size_t i = 500; i + 500 < clip.samples.size(); ++i) {
    const double want = 0.5 * (FixtureValue(0, i, 44100) + FixtureValue(1, i, 44100));
    worst = std::max(worst, std::abs(clip.samples[i] - want));
  }
  EXPECT_LT(worst, 2e-3);
}

TEST(LoadAudio, SameRateIsBitIdenticalToDecode) {
  const DecodedAudio d = DecodeAudioFile(DataPath("mono16.wav"));
  const AudioClip clip = LoadAudio(DataPath("mono16.wav"), 44100);
  EXPECT_EQ(clip.samples, d.interleaved);
}

TEST(LoadAudio, ErrorsCarryTheirClass) {
  EXPECT_EQ(ThrownClass([] { LoadAudio("/nonexistent/x.wav", 44100); }),
            ErrorClass::kIo);
  const auto tmp = std::filesystem::temp_directory_path() / "usrc_empty.wav";
  AudioClip empty;
  empty.sample_rate = 44100;
  WriteWav16(tmp, empty);
  EXPECT_EQ(ThrownClass([&] { LoadAudio(tmp, 44100); }), ErrorClass::kEmptyInput);
  std::filesystem::remove(tmp);
  const std::vector<std::uint8_t> junk{'R', 'I', 'F', 'F', 1, 2, 3};
  EXPECT_EQ(ThrownClass([&] { DecodeWav(junk); }), ErrorClass::kIo);
}

TEST(Wav, SixteenBitRoundTrip) {
  const AudioClip tone = SineTone(440, 0.5, 4410, 44100);
  const DecodedAudio d = DecodeWav(EncodeWav16(tone));
  ASSERT_EQ(d.frames(), tone.samples.size());
  for (std::size_t i = 0; i < tone.samples.size(); ++i) {
    EXPECT_NEAR(d.interleaved[i], tone.samples[i], 1.0 / 32767);
  }
}

int PeakBin(const std::vector<double>& x) {
  const int n = static_cast<int>(x.size());
  std::vector<std::complex<double>> spec(n / 2 + 1);
  RealFft(n).Forward(x.data(), spec.data());
  int best = 1;
  for (int k = 1; k <= n / 2; ++k) {
    if (std::abs(spec[k]) > std::abs(spec[best])) best = k;
  }
  return best;
}

TEST(Resample, ToneKeepsItsFrequency) {
  const AudioClip tone = SineTone(440, 0.8, 22050, 22050);
  const AudioClip up = Resample(tone, 44100);
  ASSERT_EQ(up.samples.size(), 44100u);
  std::vector<double> x(up.samples.begin(), up.samples.begin() + 32768);
  const double bin_hz = 44100.0 / 32768;
  EXPECT_NEAR(PeakBin(x) * bin_hz, 440.0, bin_hz);
}

TEST(Resample, LengthIsRoundedRatio) {
  for (std::size_t n : {1u, 7u, 1000u, 4801u}) {
    const AudioClip x = SineTone(100, 0.1, n, 48000);
    EXPECT_EQ(Resample(x, 44100).samples.size(),
              static_cast<std::size_t>(std::llround(n * 44100.0 / 48000)));
  }
}

TEST(Mel, ScaleAnchors) {
  EXPECT_DOUBLE_EQ(HzToMel(1000.0), 15.0);
  EXPECT_NEAR(HzToMel(500.0), 7.5, 1e-12);
  for (double hz : {0.0, 100.0, 999.0, 1000.0, 4000.0, 22050.0}) {
    EXPECT_NEAR(MelToHz(HzToMel(hz)), hz, 1e-9 * std::max(1.0, hz));
  }
}

TEST(Mel, FilterbankIsAreaNormalizedAndNonnegative) {
  const SpectralConfig cfg;
  const Grid fb = MelFilterbank(cfg);
  ASSERT_EQ(fb.rows(), 128);
  ASSERT_EQ(fb.cols(), 1025);
  EXPECT_GE(fb.minCoeff(), 0.0);
  const std::vector<double> centers = MelBandCenters(cfg);
  for (int m = 1; m < 128; ++m) EXPECT_GT(centers[m], centers[m - 1]);
  for (int m = 0; m < 128; ++m) EXPECT_GT(fb.row(m).sum(), 0.0);
}

TEST(Mel, DefaultCropIs128By128) {
  const AudioClip clip = SpeechLike(65536, 44100, 3);
  const MelSpectrogram mel = ComputeMelSpectrogram(clip, SpectralConfig{});
  EXPECT_EQ(mel.n_mels(), 128);
  EXPECT_EQ(mel.n_frames(), 128);
  EXPECT_TRUE(mel.values.allFinite());
  EXPECT_GE(mel.values.minCoeff(), std::log(1e-5));
}

TEST(Mel, SilenceSitsOnTheFloor) {
  const MelSpectrogram mel = ComputeMelSpectrogram(Silence(8192, 44100), {});
  EXPECT_EQ(mel.values.minCoeff(), std::log(1e-5));
  EXPECT_EQ(mel.values.maxCoeff(), std::log(1e-5));
}

TEST(Mel, KilohertzToneLandsOnTheNearestBand) {
  const SpectralConfig cfg;
  const MelSpectrogram mel = ComputeMelSpectrogram(SineTone(1000, 1.0, 44100, 44100), cfg);
  const std::vector<double> centers = MelBandCenters(cfg);
  int nearest = 0;
  for (int m = 0; m < cfg.n_mels; ++m) {
    if (std::abs(centers[m] - 1000) < std::abs(centers[nearest] - 1000)) nearest = m;
  }
  const int t = mel.n_frames() / 2;
  Eigen::Index argmax = 0;
  mel.values.col(t).maxCoeff(&argmax);
  EXPECT_EQ(argmax, nearest);
}

TEST(Mel, ShortClipIsInsufficient) {
  EXPECT_EQ(ThrownClass([] { ComputeMelSpectrogram(Silence(100, 44100), {}); }),
            ErrorClass::kInsufficientInput);
}

TEST(SpectralConfig, RejectsBrokenInvariants) {
  SpectralConfig c;
  c.hop = 4096;
  EXPECT_EQ(ThrownClass([&] { c.Validate(); }), ErrorClass::kConfig);
  c = {};
  c.n_mels = 1;
  EXPECT_EQ(ThrownClass([&] { c.Validate(); }), ErrorClass::kConfig);
  c = {};
  c.fmax = 30000;
  EXPECT_EQ(ThrownClass([&] { c.Validate(); }), ErrorClass::kConfig);
  c = {};
  c.log_floor = 0;
  EXPECT_EQ(ThrownClass([&] { c.Validate(); }), ErrorClass::kConfig);
}

TEST(Stft, InverseReconstructsTheSignal) {
  const AudioClip x = SpeechLike(20000, 44100, 9);
  const ComplexGrid s = Stft(x.samples, 2048, 512, 2048);
  const std::vector<double> y = Istft(s, 2048, 512, 2048, x.samples.size());
  double worst = 0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    worst = std::max(worst, std::abs(y[i] - x.samples[i]));
  }
  EXPECT_LT(worst, 1e-9);
}

TEST(Subbands, SplitAndRestack) {
  Grid g(128, 128);
  for (int r = 0; r < 128; ++r) g.row(r).setConstant(r);
  const SubBandPair p = SplitSubbands(g);
  ASSERT_EQ(p.low.rows(), 64);
  ASSERT_EQ(p.high.rows(), 64);
  ASSERT_EQ(p.low.cols(), 128);
  for (int r = 0; r < 64; ++r) {
    EXPECT_EQ(p.low(r, 5), r);
    EXPECT_EQ(p.high(r, 5), r + 64);
  }
  EXPECT_EQ(MergeSubbands(p), g);
  EXPECT_EQ(ThrownClass([] { SplitSubbands(Grid::Zero(5, 3)); }), ErrorClass::kConfig);
}

TEST(Bandwidth, FullBandNoiseIsKept) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const AudioClip n = WhiteNoise(0.5, 44100, 44100, seed);
    EXPECT_GE(DetectNativeBandwidth(n, -60), 0.9 * 44100);
    EXPECT_TRUE(FilterTrainingClip(n));
  }
}

TEST(Bandwidth, EightKilohertzNoiseIsDropped) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const AudioClip n = LowpassNoise(8000, 0.5, 44100, 44100, seed);
    const double native = DetectNativeBandwidth(n, -60);
    EXPECT_GE(native, 14400);
    EXPECT_LE(native, 17600);
    EXPECT_FALSE(FilterTrainingClip(n));
  }
}

TEST(Bandwidth, SilenceAndUpsampledSpeechAreDropped) {
  EXPECT_EQ(DetectNativeBandwidth(Silence(44100, 44100), -60), 0.0);
  EXPECT_FALSE(FilterTrainingClip(Silence(44100, 44100)));
  const AudioClip speech16 = SpeechLike(32000, 16000, 4);
  EXPECT_FALSE(FilterTrainingClip(Resample(speech16, 44100)));
}

}  // namespace
}  // namespace usrc::dsp
