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

#ifndef USRC_EVAL_METRICS_H_
#define USRC_EVAL_METRICS_H_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "usrc/dsp/audio.h"
#include "usrc/dsp/spectral.h"
#include "usrc/model/codec_config.h"

namespace usrc::eval {

// Spectral settings used for scoring. 44100 Hz: n_fft 2048, hop 512, 128 Mel
// bins. 16000 Hz: n_fft 1024, hop 256, 80 Mel bins. Other rates are refused.
dsp::SpectralConfig EvalSpectralConfig(int eval_sr);

struct DistanceOptions {
  // Averages the distance over n_fft / 2, n_fft and 2 * n_fft (hop scaled
  // alike) instead of the single evaluation resolution.
  bool multi_scale = false;
};

// Brings est to ref's rate, then trims both to the shorter length. A length
// gap above max_gap samples raises kAlignment.
std::pair<dsp::AudioClip, dsp::AudioClip> AlignPair(const dsp::AudioClip& ref,
                                                    const dsp::AudioClip& est,
                                                    std::size_t max_gap);

// Mean |log-Mel(ref) - log-Mel(est)| after resampling both to eval_sr.
double MelDistance(const dsp::AudioClip& ref, const dsp::AudioClip& est,
                   int eval_sr, const DistanceOptions& opt = {});

// Same on linear-frequency log magnitudes.
double StftDistance(const dsp::AudioClip& ref, const dsp::AudioClip& est,
                    int eval_sr, const DistanceOptions& opt = {});

// Polyphase resampler matching Octave's resample() (Kaiser window, 60 dB
// rejection). Output length is ceil(n * p / q) after reducing p / q.
std::vector<double> ResampleOctave(std::span<const double> x, int p, int q);

// Short-time objective intelligibility. Both clips are taken to 10 kHz,
// silent frames are dropped and 384 ms segments of one-third-octave band
// envelopes are correlated. Needs at least 0.5 s of audio. The result is
// clamped to [0, 1]; only unrelated signals score below zero.
double Stoi(const dsp::AudioClip& ref, const dsp::AudioClip& est);

// Raw STOI on equal-length signals at sample_rate, no alignment or length
// checks beyond the algorithm's own fallback of 1e-5.
double StoiRaw(std::span<const double> x, std::span<const double> y,
               int sample_rate);

struct PesqAdapter {
  // Shell template with {ref}, {deg} and {sr}. Empty means unconfigured.
  std::string command;
  double timeout_seconds = 120;

  bool configured() const { return !command.empty(); }
};

// Runs the adapter on 16 kHz WAV copies of both clips and parses the last
// number it prints. nullopt when unconfigured or when the tool fails; the
// reason goes to *note when given.
std::optional<double> Pesq(const dsp::AudioClip& ref, const dsp::AudioClip& est,
                           const PesqAdapter& adapter,
                           std::string* note = nullptr);

struct RateReport {
  double tps = 0;   // measured from the frame arithmetic
  double kbps = 0;
  int bits_per_token = 0;
  std::string label;  // preset name
  std::optional<double> nominal_tps;
  std::optional<double> nominal_kbps;
};

// tps = sample_rate / hop / time_factor * n_mels / freq_factor,
// kbps = tps * log2(K) / 1000. Presets B and L also carry their nominal
// figures (40 / 0.52 and 176 / 2.29).
RateReport ComputeRateReport(const model::CodecConfig& cfg);

// Same arithmetic from the raw stream parameters, with 2^bits codes.
RateReport ComputeRateReport(int sample_rate, int hop, int n_mels,
                             int time_factor, int freq_factor,
                             int codebook_bits, model::Variant variant);

struct FileMetrics {
  std::string path;
  double mel_44 = 0;
  double stft_44 = 0;
  double mel_16 = 0;
  double stft_16 = 0;
  std::optional<double> stoi;
  std::optional<double> pesq;
};

struct FileFailure {
  std::string path;
  std::string error_class;
  std::string message;
};

struct MetricReport {
  std::string config_fingerprint;
  std::vector<FileMetrics> per_file;
  FileMetrics aggregate;  // means over per_file; path is empty
  RateReport rate;
  std::vector<FileFailure> failure_list;

  int failures() const { return static_cast<int>(failure_list.size()); }
  std::string ToJson(int indent = 2) const;
};

// Scores a reference clip against its reconstruction.
FileMetrics ScorePair(const dsp::AudioClip& ref, const dsp::AudioClip& est,
                      const PesqAdapter& pesq, bool with_stoi = true);

struct CorpusOptions {
  int load_sample_rate = 44100;
  bool with_stoi = true;
  PesqAdapter pesq;
};

using Reconstructor = std::function<dsp::AudioClip(const dsp::AudioClip&)>;

// Every .wav / .flac below dir in sorted order goes through reconstruct and
// is scored. usrc::Error from one file is recorded as a failure and the run
// goes on. No audio files at all raises kEmptyCorpus.
MetricReport EvaluateCorpus(const std::filesystem::path& dir,
                            const Reconstructor& reconstruct,
                            const model::CodecConfig& cfg,
                            const CorpusOptions& opt = {});

}  // namespace usrc::eval

#endif  // USRC_EVAL_METRICS_H_
