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

// usrc: train, encode, decode, eval, scan-bandwidth, inspect and
// export-embeddings. Failures print "<error_class>: <detail>" on one line of
// stderr and exit with status 1.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "usrc/bitstream/codec_io.h"
#include "usrc/bitstream/container.h"
#include "usrc/dsp/bandwidth.h"
#include "usrc/error.h"
#include "usrc/eval/metrics.h"
#include "usrc/train/checkpoint.h"
#include "usrc/train/train_config.h"
#include "usrc/train/trainer.h"
#include "usrc/vocoder/vocoder.h"

namespace fs = std::filesystem;
using namespace usrc;

namespace {

struct VocoderArgs {
  std::string kind = "griffinlim";
  std::string adapter;
  int gl_iters = 60;

  void Add(CLI::App* cmd) {
    cmd->add_option("--vocoder", kind, "griffinlim or external")
        ->check(CLI::IsMember({"griffinlim", "external"}));
    cmd->add_option("--adapter", adapter,
                    "external vocoder command template ({in} {out} {sr} {hop} "
                    "{n_mels}); defaults to $USRC_ADAPTER");
    cmd->add_option("--gl-iters", gl_iters, "Griffin-Lim iterations")
        ->check(CLI::PositiveNumber);
  }

  vocoder::VocoderSpec Spec(const dsp::SpectralConfig& cfg) const {
    if (kind == "griffinlim") return vocoder::VocoderSpec::GriffinLim(cfg, gl_iters);
    std::string cmd = adapter;
    if (cmd.empty()) {
      if (const char* env = std::getenv("USRC_ADAPTER")) cmd = env;
    }
    if (cmd.empty()) {
      Fail(ErrorClass::kConfig,
           "--vocoder external needs --adapter or USRC_ADAPTER");
    }
    return vocoder::VocoderSpec::External(cfg, cmd);
  }
};

struct CkptArgs {
  std::string path;
  bool force = false;

  void Add(CLI::App* cmd) {
    cmd->add_option("--ckpt", path, "checkpoint file")->required();
    cmd->add_flag("--force", force, "accept a checkpoint whose fingerprint differs");
  }

  train::CodecBundle Load() const {
    return train::LoadCodecBundle(path, nullptr, force);
  }
};

void WriteText(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) Fail(ErrorClass::kIo, path.string() + ": cannot open for writing");
  out << text;
  if (!out) Fail(ErrorClass::kIo, path.string() + ": write failed");
}

int RunTrain(const std::string& config, const std::string& data,
             const std::string& out, const std::string& resume, long long steps,
             bool quiet) {
  train::TrainSetup setup = train::LoadTrainConfig(config);
  if (!data.empty()) setup.data_dir = data;
  if (!out.empty()) setup.out_dir = out;
  if (setup.data_dir.empty()) Fail(ErrorClass::kConfig, "no data directory given");
  if (setup.out_dir.empty()) Fail(ErrorClass::kConfig, "no output directory given");
  std::vector<std::string> dropped;
  const auto dataset =
      train::LoadClipDataset(setup.data_dir, setup.codec, setup.train, &dropped);
  for (const std::string& d : dropped) std::cerr << "skipped " << d << "\n";
  train::TrainLoopOptions opt;
  opt.out_dir = setup.out_dir;
  opt.resume_from = resume;
  opt.total_steps = steps;
  opt.quiet = quiet;
  const auto written = train::TrainLoop(*dataset, setup.codec, setup.train, opt);
  if (!written.empty()) std::cout << written.back().string() << "\n";
  return 0;
}

int RunEncode(const CkptArgs& ck, const std::string& in, const std::string& out) {
  const train::CodecBundle codec = ck.Load();
  const dsp::AudioClip clip = dsp::LoadAudio(in, codec.config.spectral.sample_rate);
  const std::vector<std::uint8_t> bytes = bitstream::EncodeToStream(codec, clip);
  dsp::WriteFileBytes(out, bytes);
  return 0;
}

int RunDecode(const CkptArgs& ck, const std::string& in, const std::string& out,
              const VocoderArgs& va) {
  const train::CodecBundle codec = ck.Load();
  const std::vector<std::uint8_t> bytes = dsp::ReadFileBytes(in);
  const dsp::AudioClip audio =
      bitstream::DecodeStream(codec, bytes, va.Spec(codec.config.spectral));
  dsp::WriteWav16(out, audio);
  return 0;
}

int RunEval(const CkptArgs& ck, const std::string& ref, const std::string& report,
            const VocoderArgs& va, const std::string& pesq, bool no_stoi) {
  const train::CodecBundle codec = ck.Load();
  const vocoder::VocoderSpec voc = va.Spec(codec.config.spectral);
  eval::CorpusOptions opt;
  opt.load_sample_rate = codec.config.spectral.sample_rate;
  opt.with_stoi = !no_stoi;
  opt.pesq.command = pesq;
  const eval::MetricReport r = eval::EvaluateCorpus(
      ref,
      [&](const dsp::AudioClip& clip) {
        return bitstream::Reconstruct(codec, clip, voc);
      },
      codec.config, opt);
  WriteText(report, r.ToJson() + "\n");
  for (const eval::FileFailure& f : r.failure_list) {
    std::cerr << "failed " << f.path << ": " << f.error_class << ": " << f.message
              << "\n";
  }
  std::printf("files=%zu failures=%d mel_44=%.4f stft_44=%.4f mel_16=%.4f "
              "stft_16=%.4f\n",
              r.per_file.size(), r.failures(), r.aggregate.mel_44,
              r.aggregate.stft_44, r.aggregate.mel_16, r.aggregate.stft_16);
  return 0;
}

int RunScan(const std::string& in, double threshold_db) {
  for (const fs::path& p : dsp::ListAudioFiles(in)) {
    try {
      const dsp::AudioClip clip = dsp::LoadAudio(p, dsp::kTrainingSampleRate);
      const double native = dsp::DetectNativeBandwidth(clip, threshold_db);
      const bool keep = dsp::FilterTrainingClip(clip, threshold_db);
      std::printf("%s\t%.0f\t%s\n", p.string().c_str(), native,
                  keep ? "keep" : "drop");
    } catch (const Error& e) {
      std::printf("%s\t0\tdrop\n", p.string().c_str());
      std::cerr << "skipped " << p.string() << ": "
                << ErrorClassName(e.error_class()) << ": " << e.what() << "\n";
    }
  }
  return 0;
}

int RunInspect(const std::string& in) {
  const std::vector<std::uint8_t> bytes = dsp::ReadFileBytes(in);
  const bitstream::Inspection ins = bitstream::Inspect(bytes);
  const bitstream::Header& h = ins.header;
  const eval::RateReport rate = eval::ComputeRateReport(
      h.sample_rate, h.hop, h.n_mels, h.time_down, h.freq_down, h.codebook_bits,
      h.variant);
  std::printf("version        %u\n", h.version);
  std::printf("variant        %s\n", model::VariantName(h.variant).c_str());
  std::printf("sample_rate    %u\n", h.sample_rate);
  std::printf("hop            %u\n", h.hop);
  std::printf("n_mels         %u\n", h.n_mels);
  std::printf("time_down      %u\n", h.time_down);
  std::printf("freq_down      %u\n", h.freq_down);
  std::printf("codebook_bits  %u\n", h.codebook_bits);
  std::printf("flatten_order  %s\n", model::FlattenOrderName(h.order).c_str());
  std::printf("pad_frames     %u\n", h.pad_frames);
  std::printf("n_tokens       %llu\n", static_cast<unsigned long long>(h.n_tokens));
  std::printf("latent_grid    %d x %llu\n", h.LatentFreq(),
              static_cast<unsigned long long>(h.LatentFrames()));
  std::printf("duration_s     %.4f\n",
              static_cast<double>(h.MelFrames()) * h.hop / h.sample_rate);
  std::printf("tps            %.2f\n", rate.tps);
  std::printf("kbps           %.3f\n", rate.kbps);
  if (rate.nominal_tps) {
    std::printf("nominal_tps    %.0f\n", *rate.nominal_tps);
    std::printf("nominal_kbps   %.2f\n", *rate.nominal_kbps);
  }
  std::printf("stream_bytes   %zu of %zu\n", ins.actual_bytes, ins.expected_bytes);
  if (!ins.warning.empty()) std::cerr << "warning: " << ins.warning << "\n";
  return 0;
}

int RunExport(const CkptArgs& ck, const std::string& in, const std::string& out) {
  const train::CodecBundle codec = ck.Load();
  const dsp::AudioClip clip = dsp::LoadAudio(in, codec.config.spectral.sample_rate);
  const quant::Matrix<float> emb = bitstream::ExtractEmbeddings(codec, clip);
  const dsp::Grid rows = emb.transpose().cast<double>();
  dsp::WriteFileBytes(out, vocoder::EncodeMelx(
                               rows, codec.config.spectral.sample_rate,
                               codec.config.spectral.hop));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"usrc: Mel-domain single-codebook audio codec"};
  app.require_subcommand(1);

  std::string config, data, out_dir, resume;
  long long steps = -1;
  bool quiet = false;
  auto* train_cmd = app.add_subcommand("train", "train a codec");
  train_cmd->add_option("--config", config, "key = value config file")->required();
  train_cmd->add_option("--data", data, "directory of training audio");
  train_cmd->add_option("--out", out_dir, "checkpoint directory");
  train_cmd->add_option("--resume", resume, "checkpoint to continue from");
  train_cmd->add_option("--steps", steps, "override total_steps");
  train_cmd->add_flag("--quiet", quiet, "no per-step log lines");

  CkptArgs ck;
  VocoderArgs va;
  std::string in, out, ref, report, pesq;
  bool no_stoi = false;
  double threshold_db = dsp::kDefaultBandwidthThresholdDb;

  auto* enc = app.add_subcommand("encode", "audio to a .usrc token stream");
  ck.Add(enc);
  enc->add_option("--in", in, "input audio")->required();
  enc->add_option("--out", out, "output .usrc")->required();

  auto* dec = app.add_subcommand("decode", ".usrc token stream to WAV");
  ck.Add(dec);
  dec->add_option("--in", in, "input .usrc")->required();
  dec->add_option("--out", out, "output WAV")->required();
  va.Add(dec);

  auto* ev = app.add_subcommand("eval", "score a reference corpus");
  ck.Add(ev);
  ev->add_option("--ref", ref, "directory of reference audio")->required();
  ev->add_option("--report", report, "JSON report path")->required();
  ev->add_option("--pesq-adapter", pesq, "PESQ command template ({ref} {deg} {sr})");
  ev->add_flag("--no-stoi", no_stoi, "skip STOI");
  va.Add(ev);

  auto* scan = app.add_subcommand("scan-bandwidth", "list native bandwidth per file");
  scan->add_option("--in", in, "directory of audio")->required();
  scan->add_option("--threshold-db", threshold_db, "band power threshold in dB");

  auto* insp = app.add_subcommand("inspect", "print a .usrc header");
  insp->add_option("--in", in, "input .usrc")->required();

  auto* exp = app.add_subcommand("export-embeddings",
                                 "post-quantizer vectors as a MELX file");
  ck.Add(exp);
  exp->add_option("--in", in, "input audio")->required();
  exp->add_option("--out", out, "output file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*train_cmd) return RunTrain(config, data, out_dir, resume, steps, quiet);
    if (*enc) return RunEncode(ck, in, out);
    if (*dec) return RunDecode(ck, in, out, va);
    if (*ev) return RunEval(ck, ref, report, va, pesq, no_stoi);
    if (*scan) return RunScan(in, threshold_db);
    if (*insp) return RunInspect(in);
    if (*exp) return RunExport(ck, in, out);
  } catch (const Error& e) {
    std::cerr << ErrorClassName(e.error_class()) << ": " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "internal_error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
