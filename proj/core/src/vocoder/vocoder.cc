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

#include "usrc/vocoder/vocoder.h"

#include <algorithm>
#include <cmath>
#include <cstring>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "usrc/error.h"
#include "usrc/util/process.h"

namespace usrc::vocoder {
namespace {

constexpr int kMaxNnlsIters = 400;
constexpr double kNnlsTolerance = 1e-7;

// Weighted squared norm of a half spectrum as the full Hermitian spectrum.
double FullSpectrumSquaredNorm(const dsp::ComplexGrid& x, int n_fft) {
  double total = 0;
  const Eigen::Index bins = x.rows();
  for (Eigen::Index k = 0; k < bins; ++k) {
    const bool edge = k == 0 || (n_fft % 2 == 0 && k == bins - 1);
    total += (edge ? 1.0 : 2.0) * x.row(k).squaredNorm();
  }
  return total;
}

void PutLe32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t GetLe32(const std::uint8_t* p) {
  return std::uint32_t(p[0]) | (std::uint32_t(p[1]) << 8) |
         (std::uint32_t(p[2]) << 16) | (std::uint32_t(p[3]) << 24);
}

}  // namespace

VocoderSpec VocoderSpec::GriffinLim(const dsp::SpectralConfig& cfg, int iters) {
  VocoderSpec s;
  s.kind = VocoderKind::kGriffinLim;
  s.sample_rate = cfg.sample_rate;
  s.expects = cfg;
  s.griffin_lim_iters = iters;
  return s;
}

VocoderSpec VocoderSpec::External(const dsp::SpectralConfig& cfg,
                                  const std::string& command) {
  VocoderSpec s;
  s.kind = VocoderKind::kExternal;
  s.sample_rate = cfg.sample_rate;
  s.expects = cfg;
  s.adapter.command = command;
  return s;
}

dsp::Grid MelToLinear(const dsp::MelSpectrogram& mel,
                      const dsp::SpectralConfig& expected) {
  if (!(mel.config == expected)) {
    Fail(ErrorClass::kConfig, "mel was made with " + mel.config.ToString() +
                                  " but the vocoder expects " +
                                  expected.ToString());
  }
  return MelToLinear(mel);
}

dsp::Grid MelToLinear(const dsp::MelSpectrogram& mel) {
  const dsp::SpectralConfig& cfg = mel.config;
  if (mel.n_mels() != cfg.n_mels) {
    Fail(ErrorClass::kShape, "mel grid rows do not match its config");
  }
  using Mat = Eigen::MatrixXd;
  const Mat fb = dsp::MelFilterbank(cfg);
  const Mat target = mel.values.array().exp().matrix();

  // Clamped pseudo-inverse: fb^T (fb fb^T + eps I)^-1 target.
  const Mat gram = fb * fb.transpose();
  const double ridge = 1e-10 * gram.diagonal().maxCoeff();
  const Eigen::LDLT<Mat> ldlt(gram + ridge * Mat::Identity(gram.rows(), gram.cols()));
  Mat x = (fb.transpose() * ldlt.solve(target)).cwiseMax(0.0);

  // Projected accelerated gradient on 0.5 |fb x - target|^2 subject to x >= 0;
  // columns are independent problems solved together.
  const Eigen::SelfAdjointEigenSolver<Mat> eig(gram, Eigen::EigenvaluesOnly);
  const double lipschitz = eig.eigenvalues().maxCoeff();
  const double step = 1.0 / lipschitz;
  const Mat fbt_target = fb.transpose() * target;
  Mat y = x, x_prev = x;
  double t = 1.0;
  const double scale = std::max(target.norm(), 1e-30);
  for (int it = 0; it < kMaxNnlsIters; ++it) {
    const Mat grad = fb.transpose() * (fb * y) - fbt_target;
    x_prev.swap(x);
    x = (y - step * grad).cwiseMax(0.0);
    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    y = x + ((t - 1.0) / t_next) * (x - x_prev);
    t = t_next;
    if ((x - x_prev).norm() * std::sqrt(lipschitz) < kNnlsTolerance * scale) break;
  }
  return x;
}

dsp::AudioClip GriffinLim(const dsp::Grid& magnitude,
                          const dsp::SpectralConfig& cfg, int n_iters,
                          std::vector<double>* consistency) {
  if (n_iters < 1) Fail(ErrorClass::kConfig, "griffin-lim needs >= 1 iteration");
  if (magnitude.rows() != cfg.n_fft / 2 + 1) {
    Fail(ErrorClass::kShape, "magnitude grid has " +
                                 std::to_string(magnitude.rows()) +
                                 " bins, expected " +
                                 std::to_string(cfg.n_fft / 2 + 1));
  }
  if ((magnitude.array() < 0).any() || !magnitude.allFinite()) {
    Fail(ErrorClass::kNumeric, "magnitude must be finite and non-negative");
  }
  const std::size_t length =
      static_cast<std::size_t>(magnitude.cols()) * cfg.hop;
  dsp::ComplexGrid x = magnitude.cast<std::complex<double>>();
  if (consistency) consistency->clear();
  std::vector<double> signal;
  for (int it = 0; it < n_iters; ++it) {
    signal = dsp::Istft(x, cfg.n_fft, cfg.hop, cfg.win_length, length);
    const dsp::ComplexGrid s = dsp::Stft(signal, cfg.n_fft, cfg.hop, cfg.win_length);
    if (consistency) {
      consistency->push_back(
          std::sqrt(FullSpectrumSquaredNorm(s - x, cfg.n_fft)));
    }
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      const double a = std::abs(s.data()[i]);
      const std::complex<double> phase =
          a > 0 ? s.data()[i] / a : std::complex<double>(1.0, 0.0);
      x.data()[i] = magnitude.data()[i] * phase;
    }
  }
  signal = dsp::Istft(x, cfg.n_fft, cfg.hop, cfg.win_length, length);
  dsp::AudioClip out;
  out.sample_rate = cfg.sample_rate;
  out.samples = std::move(signal);
  for (double& v : out.samples) v = std::clamp(v, -1.0, 1.0);
  return out;
}

std::vector<std::uint8_t> EncodeMelx(const dsp::Grid& values,
                                     std::uint32_t sample_rate,
                                     std::uint32_t hop) {
  std::vector<std::uint8_t> out = {'M', 'E', 'L', 'X'};
  PutLe32(out, static_cast<std::uint32_t>(values.rows()));
  PutLe32(out, static_cast<std::uint32_t>(values.cols()));
  PutLe32(out, sample_rate);
  PutLe32(out, hop);
  out.reserve(out.size() + 4 * values.size());
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    const float f = static_cast<float>(values.data()[i]);
    std::uint32_t u;
    std::memcpy(&u, &f, 4);
    PutLe32(out, u);
  }
  return out;
}

MelxData DecodeMelx(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 20 || std::memcmp(bytes.data(), "MELX", 4) != 0) {
    Fail(ErrorClass::kCorruptStream, "not a MELX container");
  }
  const std::uint32_t rows = GetLe32(&bytes[4]);
  const std::uint32_t cols = GetLe32(&bytes[8]);
  MelxData d;
  d.sample_rate = GetLe32(&bytes[12]);
  d.hop = GetLe32(&bytes[16]);
  const std::size_t n = static_cast<std::size_t>(rows) * cols;
  if (bytes.size() != 20 + 4 * n) {
    Fail(ErrorClass::kCorruptStream, "MELX payload length mismatch");
  }
  d.values.resize(rows, cols);
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint32_t u = GetLe32(&bytes[20 + 4 * i]);
    float f;
    std::memcpy(&f, &u, 4);
    d.values.data()[i] = f;
  }
  return d;
}

namespace {

dsp::AudioClip RunExternal(const dsp::MelSpectrogram& mel, const VocoderSpec& spec) {
  if (spec.adapter.command.empty()) {
    Fail(ErrorClass::kVocoder, "external vocoder selected but no adapter command set");
  }
  util::TempDir tmp;
  const auto in = tmp.path() / "mel.melx";
  const auto out = tmp.path() / "audio.wav";
  dsp::WriteFileBytes(in, EncodeMelx(mel.values, mel.config.sample_rate,
                                     mel.config.hop));
  const std::string cmd = util::SubstituteTemplate(
      spec.adapter.command, {{"in", in.string()},
                             {"out", out.string()},
                             {"sr", std::to_string(mel.config.sample_rate)},
                             {"hop", std::to_string(mel.config.hop)},
                             {"n_mels", std::to_string(mel.config.n_mels)}});
  const util::ProcessResult r = util::RunCommand(cmd, spec.adapter.timeout_seconds);
  if (r.timed_out) {
    Fail(ErrorClass::kVocoder, "adapter timed out after " +
                                   std::to_string(spec.adapter.timeout_seconds) +
                                   " s: " + r.output);
  }
  if (r.exit_code != 0) {
    Fail(ErrorClass::kVocoder, "adapter exited with status " +
                                   std::to_string(r.exit_code) + ": " + r.output);
  }
  dsp::DecodedAudio audio;
  try {
    audio = dsp::DecodeAudioFile(out);
  } catch (const Error& e) {
    Fail(ErrorClass::kVocoder, std::string("adapter output unreadable: ") + e.what() +
                                   (r.output.empty() ? "" : " | " + r.output));
  }
  const int expected_sr = spec.adapter.declared_sample_rate > 0
                              ? spec.adapter.declared_sample_rate
                              : spec.sample_rate;
  if (audio.sample_rate != expected_sr || audio.sample_rate != spec.sample_rate) {
    Fail(ErrorClass::kVocoder, "adapter returned " +
                                   std::to_string(audio.sample_rate) +
                                   " Hz audio, expected " +
                                   std::to_string(spec.sample_rate));
  }
  dsp::AudioClip clip;
  clip.sample_rate = audio.sample_rate;
  const std::size_t frames = audio.frames();
  clip.samples.resize(frames);
  for (std::size_t i = 0; i < frames; ++i) {
    double acc = 0;
    for (int c = 0; c < audio.channels; ++c) {
      acc += audio.interleaved[i * audio.channels + c];
    }
    clip.samples[i] = acc / audio.channels;
  }
  return clip;
}

}  // namespace

dsp::AudioClip Synthesize(const dsp::MelSpectrogram& mel, const VocoderSpec& spec) {
  if (!(spec.expects == mel.config)) {
    Fail(ErrorClass::kConfig, "vocoder expects " + spec.expects.ToString() +
                                  " but the mel uses " + mel.config.ToString());
  }
  if (spec.sample_rate != mel.config.sample_rate) {
    Fail(ErrorClass::kConfig, "vocoder sample rate differs from the mel config");
  }
  if (spec.kind == VocoderKind::kExternal) return RunExternal(mel, spec);
  return GriffinLim(MelToLinear(mel), mel.config, spec.griffin_lim_iters);
}

}  // namespace usrc::vocoder
