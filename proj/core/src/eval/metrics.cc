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

#include "usrc/eval/metrics.h"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <numbers>
#include <numeric>
#include <sstream>

#include "json.hpp"
#include "usrc/dsp/fft.h"
#include "usrc/dsp/resample.h"
#include "usrc/error.h"
#include "usrc/util/process.h"

namespace usrc::eval {
namespace {

constexpr int kStoiRate = 10000;
constexpr int kStoiFrame = 256;
constexpr int kStoiHop = 128;
constexpr int kStoiFft = 512;
constexpr int kStoiBands = 15;
constexpr double kStoiMinFreq = 150.0;
constexpr int kStoiSegment = 30;
constexpr double kStoiBeta = -15.0;
constexpr double kStoiDynRange = 40.0;
constexpr double kEps = std::numeric_limits<double>::epsilon();
constexpr double kMinStoiSeconds = 0.5;

dsp::AudioClip ToRate(const dsp::AudioClip& clip, int sr) {
  if (clip.sample_rate <= 0) Fail(ErrorClass::kConfig, "clip has no sample rate");
  return dsp::Resample(clip, sr);
}

// Hann of length n without the zero end points, as MATLAB hanning(n).
std::vector<double> MatlabHanning(int n) {
  std::vector<double> w(n);
  for (int i = 0; i < n; ++i) {
    w[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * (i + 1) / (n + 1));
  }
  return w;
}

std::vector<double> Kaiser(int m, double beta) {
  std::vector<double> w(m);
  const double alpha = (m - 1) / 2.0;
  const double norm = std::cyl_bessel_i(0.0, beta);
  for (int n = 0; n < m; ++n) {
    const double r = (n - alpha) / alpha;
    w[n] = std::cyl_bessel_i(0.0, beta * std::sqrt(std::max(0.0, 1.0 - r * r))) /
           norm;
  }
  return w;
}

double Sinc(double x) {
  if (x == 0.0) return 1.0;
  const double px = std::numbers::pi * x;
  return std::sin(px) / px;
}

int FrameCount(std::size_t len) {
  if (len <= static_cast<std::size_t>(kStoiFrame)) return 0;
  return static_cast<int>((len - kStoiFrame + kStoiHop - 1) / kStoiHop);
}

void RemoveSilentFrames(std::vector<double>& x, std::vector<double>& y) {
  const int frames = FrameCount(x.size());
  if (frames == 0) {
    x.clear();
    y.clear();
    return;
  }
  const std::vector<double> w = MatlabHanning(kStoiFrame);
  std::vector<double> energy(frames);
  for (int f = 0; f < frames; ++f) {
    double acc = 0;
    for (int i = 0; i < kStoiFrame; ++i) {
      const double v = w[i] * x[f * kStoiHop + i];
      acc += v * v;
    }
    energy[f] = 20.0 * std::log10(std::sqrt(acc) + kEps);
  }
  const double top = *std::max_element(energy.begin(), energy.end());
  std::vector<int> keep;
  for (int f = 0; f < frames; ++f) {
    if (top - kStoiDynRange - energy[f] < 0) keep.push_back(f);
  }
  const std::size_t out_len =
      (keep.size() - 1) * kStoiHop + static_cast<std::size_t>(kStoiFrame);
  std::vector<double> xs(out_len, 0.0), ys(out_len, 0.0);
  for (std::size_t k = 0; k < keep.size(); ++k) {
    const std::size_t src = static_cast<std::size_t>(keep[k]) * kStoiHop;
    const std::size_t dst = k * kStoiHop;
    for (int i = 0; i < kStoiFrame; ++i) {
      xs[dst + i] += w[i] * x[src + i];
      ys[dst + i] += w[i] * y[src + i];
    }
  }
  x.swap(xs);
  y.swap(ys);
}

// One-third-octave band envelopes, [bands x frames].
dsp::Grid ThirdOctaveEnvelopes(const std::vector<double>& x) {
  static const dsp::Grid obm = [] {
    const int bins = kStoiFft / 2 + 1;
    std::vector<double> f(bins);
    for (int k = 0; k < bins; ++k) {
      f[k] = static_cast<double>(kStoiRate) * k / kStoiFft;
    }
    auto nearest = [&](double hz) {
      int best = 0;
      for (int k = 1; k < bins; ++k) {
        if ((f[k] - hz) * (f[k] - hz) < (f[best] - hz) * (f[best] - hz)) best = k;
      }
      return best;
    };
    dsp::Grid m = dsp::Grid::Zero(kStoiBands, bins);
    for (int b = 0; b < kStoiBands; ++b) {
      const int lo = nearest(kStoiMinFreq * std::pow(2.0, (2.0 * b - 1) / 6.0));
      const int hi = nearest(kStoiMinFreq * std::pow(2.0, (2.0 * b + 1) / 6.0));
      for (int k = lo; k < hi; ++k) m(b, k) = 1.0;
    }
    return m;
  }();
  const int frames = FrameCount(x.size());
  const int bins = kStoiFft / 2 + 1;
  const std::vector<double> w = MatlabHanning(kStoiFrame);
  dsp::Grid power(bins, frames);
  std::vector<double> buf(kStoiFft, 0.0);
  std::vector<std::complex<double>> spec(bins);
  dsp::RealFft& fft = dsp::RealFft::ForSize(kStoiFft);
  for (int t = 0; t < frames; ++t) {
    std::fill(buf.begin(), buf.end(), 0.0);
    for (int i = 0; i < kStoiFrame; ++i) buf[i] = w[i] * x[t * kStoiHop + i];
    fft.Forward(buf.data(), spec.data());
    for (int k = 0; k < bins; ++k) power(k, t) = std::norm(spec[k]);
  }
  return (obm * power).cwiseSqrt();
}

double SpectralDistance(const dsp::AudioClip& ref, const dsp::AudioClip& est,
                        int eval_sr, const DistanceOptions& opt, bool mel) {
  const dsp::SpectralConfig base = EvalSpectralConfig(eval_sr);
  const auto [a, b] =
      AlignPair(ToRate(ref, eval_sr), ToRate(est, eval_sr), base.hop);
  std::vector<double> scales{1.0};
  if (opt.multi_scale) scales = {0.5, 1.0, 2.0};
  double total = 0;
  for (double s : scales) {
    dsp::SpectralConfig cfg = base;
    cfg.n_fft = static_cast<int>(base.n_fft * s);
    cfg.win_length = static_cast<int>(base.win_length * s);
    cfg.hop = static_cast<int>(base.hop * s);
    const dsp::Grid ga = mel ? dsp::ComputeMelSpectrogram(a, cfg).values
                             : dsp::LogMagnitudeSpectrogram(a, cfg);
    const dsp::Grid gb = mel ? dsp::ComputeMelSpectrogram(b, cfg).values
                             : dsp::LogMagnitudeSpectrogram(b, cfg);
    total += (ga - gb).cwiseAbs().mean();
  }
  return total / static_cast<double>(scales.size());
}

std::optional<double> LastNumber(const std::string& text) {
  std::istringstream in(text);
  std::string tok;
  std::optional<double> last;
  while (in >> tok) {
    const char* s = tok.c_str();
    char* end = nullptr;
    const double v = std::strtod(s, &end);
    if (end != s && *end == '\0' && std::isfinite(v)) last = v;
  }
  return last;
}

nlohmann::ordered_json MetricsJson(const FileMetrics& m, bool with_path) {
  nlohmann::ordered_json j;
  if (with_path) j["path"] = m.path;
  j["mel_44"] = m.mel_44;
  j["stft_44"] = m.stft_44;
  j["mel_16"] = m.mel_16;
  j["stft_16"] = m.stft_16;
  if (m.stoi) j["stoi"] = *m.stoi;
  if (m.pesq) j["pesq"] = *m.pesq;
  return j;
}

}  // namespace

dsp::SpectralConfig EvalSpectralConfig(int eval_sr) {
  dsp::SpectralConfig cfg;
  if (eval_sr == 44100) return cfg;
  if (eval_sr == 16000) {
    cfg.sample_rate = 16000;
    cfg.n_fft = 1024;
    cfg.win_length = 1024;
    cfg.hop = 256;
    cfg.n_mels = 80;
    return cfg;
  }
  Fail(ErrorClass::kConfig,
       "evaluation rate must be 44100 or 16000, got " + std::to_string(eval_sr));
}

std::pair<dsp::AudioClip, dsp::AudioClip> AlignPair(const dsp::AudioClip& ref,
                                                    const dsp::AudioClip& est,
                                                    std::size_t max_gap) {
  dsp::AudioClip a = ref;
  dsp::AudioClip b = ToRate(est, ref.sample_rate);
  const std::size_t na = a.samples.size(), nb = b.samples.size();
  const std::size_t gap = na > nb ? na - nb : nb - na;
  if (gap > max_gap) {
    Fail(ErrorClass::kAlignment,
         "lengths differ by " + std::to_string(gap) + " samples (" +
             std::to_string(na) + " vs " + std::to_string(nb) +
             "), more than the allowed " + std::to_string(max_gap));
  }
  const std::size_t n = std::min(na, nb);
  a.samples.resize(n);
  b.samples.resize(n);
  return {std::move(a), std::move(b)};
}

double MelDistance(const dsp::AudioClip& ref, const dsp::AudioClip& est,
                   int eval_sr, const DistanceOptions& opt) {
  return SpectralDistance(ref, est, eval_sr, opt, true);
}

double StftDistance(const dsp::AudioClip& ref, const dsp::AudioClip& est,
                    int eval_sr, const DistanceOptions& opt) {
  return SpectralDistance(ref, est, eval_sr, opt, false);
}

std::vector<double> ResampleOctave(std::span<const double> x, int p, int q) {
  if (p <= 0 || q <= 0) Fail(ErrorClass::kConfig, "resampling ratio must be positive");
  const int g = std::gcd(p, q);
  p /= g;
  q /= g;
  if (p == 1 && q == 1) return {x.begin(), x.end()};

  const double rejection_db = 60.0;
  const double stopband = 1.0 / (2.0 * std::max(p, q));
  const double roll_off = stopband / 10.0;
  const long long half =
      static_cast<long long>(std::ceil((rejection_db - 8.0) / (28.714 * roll_off)));
  const int taps = static_cast<int>(2 * half + 1);
  const std::vector<double> win = Kaiser(taps, 0.1102 * (rejection_db - 8.7));
  std::vector<double> h(taps);
  double sum = 0;
  for (int i = 0; i < taps; ++i) {
    const double t = static_cast<double>(i - half);
    h[i] = win[i] * 2.0 * p * stopband * Sinc(2.0 * stopband * t);
    sum += h[i];
  }
  for (double& v : h) v = v / sum * p;

  const long long n_in = static_cast<long long>(x.size());
  const long long n_out = (n_in * p + q - 1) / q;
  const long long pre_pad = q - half % q;
  const long long pre_remove = (half + pre_pad) / q;
  std::vector<double> y(static_cast<std::size_t>(n_out), 0.0);
  for (long long i = 0; i < n_out; ++i) {
    // Upsampled position m0 minus filter tap j lands on input r * p.
    const long long m0 = (i + pre_remove) * q - pre_pad;
    long long r_lo = m0 - (taps - 1);
    r_lo = r_lo <= 0 ? 0 : (r_lo + p - 1) / p;
    const long long r_hi = std::min(n_in - 1, m0 >= 0 ? m0 / p : -1);
    double acc = 0;
    for (long long r = r_lo; r <= r_hi; ++r) acc += h[m0 - r * p] * x[r];
    y[i] = acc;
  }
  return y;
}

double StoiRaw(std::span<const double> x_in, std::span<const double> y_in,
               int sample_rate) {
  if (x_in.size() != y_in.size()) {
    Fail(ErrorClass::kAlignment, "STOI inputs must have equal length");
  }
  std::vector<double> x, y;
  if (sample_rate != kStoiRate) {
    x = ResampleOctave(x_in, kStoiRate, sample_rate);
    y = ResampleOctave(y_in, kStoiRate, sample_rate);
  } else {
    x.assign(x_in.begin(), x_in.end());
    y.assign(y_in.begin(), y_in.end());
  }
  RemoveSilentFrames(x, y);
  if (FrameCount(x.size()) < kStoiSegment) return 1e-5;
  const dsp::Grid xt = ThirdOctaveEnvelopes(x);
  const dsp::Grid yt = ThirdOctaveEnvelopes(y);
  const int frames = static_cast<int>(xt.cols());
  const double clip = 1.0 + std::pow(10.0, -kStoiBeta / 20.0);
  double total = 0;
  int segments = 0;
  Eigen::VectorXd xs(kStoiSegment), ys(kStoiSegment);
  for (int m = kStoiSegment; m <= frames; ++m, ++segments) {
    for (int b = 0; b < kStoiBands; ++b) {
      xs = xt.row(b).segment(m - kStoiSegment, kStoiSegment).transpose();
      ys = yt.row(b).segment(m - kStoiSegment, kStoiSegment).transpose();
      const double scale = xs.norm() / (ys.norm() + kEps);
      ys = (ys * scale).cwiseMin(xs * clip);
      ys.array() -= ys.mean();
      xs.array() -= xs.mean();
      ys /= ys.norm() + kEps;
      xs /= xs.norm() + kEps;
      total += xs.dot(ys);
    }
  }
  return total / (static_cast<double>(segments) * kStoiBands);
}

double Stoi(const dsp::AudioClip& ref, const dsp::AudioClip& est) {
  if (ref.sample_rate <= 0) Fail(ErrorClass::kConfig, "clip has no sample rate");
  const std::size_t gap = static_cast<std::size_t>(
      std::ceil(static_cast<double>(kStoiHop) * ref.sample_rate / kStoiRate));
  const auto [a, b] = AlignPair(ref, est, gap);
  if (a.duration_seconds() < kMinStoiSeconds) {
    Fail(ErrorClass::kInsufficientInput,
         "STOI needs at least 0.5 s of audio, got " +
             std::to_string(a.duration_seconds()) + " s");
  }
  return std::clamp(StoiRaw(a.samples, b.samples, a.sample_rate), 0.0, 1.0);
}

std::optional<double> Pesq(const dsp::AudioClip& ref, const dsp::AudioClip& est,
                           const PesqAdapter& adapter, std::string* note) {
  auto fail = [&](const std::string& why) -> std::optional<double> {
    if (note) *note = why;
    return std::nullopt;
  };
  if (!adapter.configured()) return fail("no PESQ adapter configured");
  constexpr int kPesqRate = 16000;
  const auto [a, b] = AlignPair(ToRate(ref, kPesqRate), ToRate(est, kPesqRate),
                                EvalSpectralConfig(kPesqRate).hop);
  util::TempDir tmp;
  const auto ref_path = tmp.path() / "ref.wav";
  const auto deg_path = tmp.path() / "deg.wav";
  dsp::WriteWav16(ref_path, a);
  dsp::WriteWav16(deg_path, b);
  const std::string cmd = util::SubstituteTemplate(
      adapter.command, {{"ref", ref_path.string()},
                        {"deg", deg_path.string()},
                        {"sr", std::to_string(kPesqRate)}});
  const util::ProcessResult r = util::RunCommand(cmd, adapter.timeout_seconds);
  if (r.timed_out) return fail("PESQ adapter timed out");
  if (r.exit_code != 0) {
    return fail("PESQ adapter exited with " + std::to_string(r.exit_code));
  }
  const std::optional<double> v = LastNumber(r.output);
  if (!v) return fail("PESQ adapter printed no number");
  if (*v < -0.5 || *v > 4.64) {
    return fail("PESQ adapter value " + std::to_string(*v) + " outside [-0.5, 4.64]");
  }
  return v;
}

RateReport ComputeRateReport(int sample_rate, int hop, int n_mels,
                             int time_factor, int freq_factor,
                             int codebook_bits, model::Variant variant) {
  if (sample_rate <= 0 || hop <= 0 || n_mels <= 0 || time_factor <= 0 ||
      freq_factor <= 0 || codebook_bits <= 0) {
    Fail(ErrorClass::kConfig, "rate parameters must be positive");
  }
  RateReport r;
  r.bits_per_token = codebook_bits;
  r.tps = static_cast<double>(sample_rate) / hop / time_factor *
          (static_cast<double>(n_mels) / freq_factor);
  r.kbps = r.tps * codebook_bits / 1000.0;
  r.label = model::VariantName(variant);
  if (variant == model::Variant::kB) {
    r.nominal_tps = 40.0;
    r.nominal_kbps = 0.52;
  } else if (variant == model::Variant::kL) {
    r.nominal_tps = 176.0;
    r.nominal_kbps = 2.29;
  }
  return r;
}

RateReport ComputeRateReport(const model::CodecConfig& cfg) {
  RateReport r = ComputeRateReport(
      cfg.spectral.sample_rate, cfg.spectral.hop, cfg.spectral.n_mels,
      cfg.encoder.TimeFactor(), cfg.encoder.FreqFactor(),
      cfg.quantizer.CodebookBits(), cfg.variant);
  r.kbps = r.tps * std::log2(static_cast<double>(cfg.quantizer.codebook_size)) /
           1000.0;
  return r;
}

FileMetrics ScorePair(const dsp::AudioClip& ref, const dsp::AudioClip& est,
                      const PesqAdapter& pesq, bool with_stoi) {
  FileMetrics m;
  m.mel_44 = MelDistance(ref, est, 44100);
  m.stft_44 = StftDistance(ref, est, 44100);
  m.mel_16 = MelDistance(ref, est, 16000);
  m.stft_16 = StftDistance(ref, est, 16000);
  if (with_stoi) {
    const dsp::AudioClip a = ToRate(ref, 16000);
    if (a.duration_seconds() >= kMinStoiSeconds) {
      m.stoi = Stoi(a, ToRate(est, 16000));
    }
  }
  if (pesq.configured()) m.pesq = Pesq(ref, est, pesq);
  return m;
}

std::string MetricReport::ToJson(int indent) const {
  nlohmann::ordered_json j;
  j["config_fingerprint"] = config_fingerprint;
  nlohmann::ordered_json files = nlohmann::ordered_json::array();
  for (const FileMetrics& m : per_file) files.push_back(MetricsJson(m, true));
  j["per_file"] = files;
  if (per_file.empty()) {
    j["aggregate"] = nullptr;
  } else {
    nlohmann::ordered_json agg = MetricsJson(aggregate, false);
    agg["files"] = per_file.size();
    j["aggregate"] = agg;
  }
  nlohmann::ordered_json rj;
  rj["tps"] = rate.tps;
  rj["kbps"] = rate.kbps;
  rj["bits_per_token"] = rate.bits_per_token;
  rj["label"] = rate.label;
  if (rate.nominal_tps) rj["nominal_tps"] = *rate.nominal_tps;
  if (rate.nominal_kbps) rj["nominal_kbps"] = *rate.nominal_kbps;
  j["rate"] = rj;
  j["failures"] = failures();
  nlohmann::ordered_json fl = nlohmann::ordered_json::array();
  for (const FileFailure& f : failure_list) {
    fl.push_back({{"path", f.path}, {"error", f.error_class}, {"message", f.message}});
  }
  j["failure_details"] = fl;
  return j.dump(indent);
}

MetricReport EvaluateCorpus(const std::filesystem::path& dir,
                            const Reconstructor& reconstruct,
                            const model::CodecConfig& cfg,
                            const CorpusOptions& opt) {
  const std::vector<std::filesystem::path> files = dsp::ListAudioFiles(dir);
  if (files.empty()) {
    Fail(ErrorClass::kEmptyCorpus, dir.string() + ": no .wav or .flac files");
  }
  MetricReport report;
  report.config_fingerprint = cfg.FingerprintHex();
  report.rate = ComputeRateReport(cfg);
  for (const auto& path : files) {
    const std::string rel = path.lexically_relative(dir).generic_string();
    try {
      const dsp::AudioClip ref = dsp::LoadAudio(path, opt.load_sample_rate);
      const dsp::AudioClip est = reconstruct(ref);
      FileMetrics m = ScorePair(ref, est, opt.pesq, opt.with_stoi);
      m.path = rel;
      report.per_file.push_back(std::move(m));
    } catch (const Error& e) {
      report.failure_list.push_back(
          {rel, std::string(ErrorClassName(e.error_class())), e.what()});
    }
  }
  const double n = static_cast<double>(report.per_file.size());
  FileMetrics& agg = report.aggregate;
  int n_stoi = 0, n_pesq = 0;
  double stoi_sum = 0, pesq_sum = 0;
  for (const FileMetrics& m : report.per_file) {
    agg.mel_44 += m.mel_44 / n;
    agg.stft_44 += m.stft_44 / n;
    agg.mel_16 += m.mel_16 / n;
    agg.stft_16 += m.stft_16 / n;
    if (m.stoi) stoi_sum += *m.stoi, ++n_stoi;
    if (m.pesq) pesq_sum += *m.pesq, ++n_pesq;
  }
  if (n_stoi > 0) agg.stoi = stoi_sum / n_stoi;
  if (n_pesq > 0) agg.pesq = pesq_sum / n_pesq;
  return report;
}

}  // namespace usrc::eval
