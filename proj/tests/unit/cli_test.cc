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

#include <filesystem>
#include <fstream>
#include <sstream>

#include "test_util.h"
#include "usrc/bitstream/container.h"
#include "usrc/dsp/audio.h"
#include "usrc/dsp/synthetic.h"
#include "usrc/train/checkpoint.h"
#include "usrc/train/trainer.h"
#include "usrc/util/process.h"
#include "usrc/vocoder/vocoder.h"

#ifdef USRC_CLI_PATH

namespace usrc {
namespace {

namespace fs = std::filesystem;
using util::RunCommand;
using util::ShellQuote;

class CliTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = new util::TempDir();
    fs::create_directories(Path("audio"));
    for (int k = 0; k < 2; ++k) {
      dsp::WriteWav16(Path("audio") / ("clip" + std::to_string(k) + ".wav"),
                      dsp::SpeechLike(65536, 44100, 20 + k));
    }
    std::ofstream(Path("tiny.cfg"))
        << "# small custom codec\n"
           "channels = 8, 16\ntime_down = 4, 4\nfreq_down = 4, 4\n"
           "groupnorm_groups = 4\ncodebook_size = 64\n"
           "batch_size = 1\ncrop_samples = 32768\ndisc_channels = 8\n"
           "filter_bandwidth = false\n";
    const auto r = Run("train --config " + Q(Path("tiny.cfg")) + " --data " +
                       Q(Path("audio")) + " --out " + Q(Path("ckpt")) +
                       " --steps 2 --quiet");
    ASSERT_EQ(r.exit_code, 0) << r.output;
    ckpt_ = train::CheckpointPath(Path("ckpt"), 2);
    ASSERT_TRUE(fs::exists(ckpt_)) << r.output;
  }
  static void TearDownTestSuite() { delete dir_; }

  static fs::path Path(const std::string& name) { return dir_->path() / name; }
  static std::string Q(const fs::path& p) { return ShellQuote(p.string()); }
  static util::ProcessResult Run(const std::string& args) {
    return RunCommand(ShellQuote(USRC_CLI_PATH) + " " + args, 300);
  }
  static std::string Ckpt() { return " --ckpt " + Q(ckpt_); }

  static util::TempDir* dir_;
  static fs::path ckpt_;
};
util::TempDir* CliTest::dir_ = nullptr;
fs::path CliTest::ckpt_;

TEST_F(CliTest, EncodeInspectDecode) {
  const fs::path in = Path("audio") / "clip0.wav";
  auto r = Run("encode" + Ckpt() + " --in " + Q(in) + " --out " + Q(Path("a.usrc")));
  ASSERT_EQ(r.exit_code, 0) << r.output;
  const auto bytes = dsp::ReadFileBytes(Path("a.usrc"));
  // 128 Mel frames -> 8 x 8 latent at factor 16, 6 bits each.
  EXPECT_EQ(bytes.size(), bitstream::kHeaderSize + 48 + bitstream::kTrailerSize);
  const bitstream::Unpacked u = bitstream::UnpackTokens(bytes, 64);
  EXPECT_EQ(u.header.variant, model::Variant::kCustom);
  EXPECT_EQ(u.tokens.size(), 64u);

  r = Run("inspect --in " + Q(Path("a.usrc")));
  ASSERT_EQ(r.exit_code, 0) << r.output;
  EXPECT_NE(r.output.find("n_tokens       64"), std::string::npos) << r.output;
  EXPECT_NE(r.output.find("codebook_bits  6"), std::string::npos);
  EXPECT_NE(r.output.find("variant        custom"), std::string::npos) << r.output;

  r = Run("decode" + Ckpt() + " --gl-iters 4 --in " + Q(Path("a.usrc")) +
          " --out " + Q(Path("a.wav")));
  ASSERT_EQ(r.exit_code, 0) << r.output;
  const dsp::AudioClip y = dsp::LoadAudio(Path("a.wav"), 44100);
  EXPECT_EQ(y.samples.size(), 65536u);
}

TEST_F(CliTest, ExportEmbeddings) {
  const auto r = Run("export-embeddings" + Ckpt() + " --in " +
                     Q(Path("audio") / "clip1.wav") + " --out " + Q(Path("e.melx")));
  ASSERT_EQ(r.exit_code, 0) << r.output;
  const auto m = vocoder::DecodeMelx(dsp::ReadFileBytes(Path("e.melx")));
  EXPECT_EQ(m.values.rows(), 16);
  EXPECT_EQ(m.values.cols(), 64);
}

TEST_F(CliTest, FailuresPrintErrorClass) {
  const fs::path in = Path("audio") / "clip0.wav";
  ASSERT_EQ(Run("encode" + Ckpt() + " --in " + Q(in) + " --out " + Q(Path("b.usrc")))
                .exit_code,
            0);
  auto bytes = dsp::ReadFileBytes(Path("b.usrc"));
  bytes[bitstream::kHeaderSize + 2] ^= 0x40;
  dsp::WriteFileBytes(Path("bad.usrc"), bytes);
  auto r = Run("decode" + Ckpt() + " --gl-iters 2 --in " + Q(Path("bad.usrc")) +
               " --out " + Q(Path("bad.wav")));
  EXPECT_EQ(r.exit_code, 1);
  EXPECT_NE(r.output.find("corrupt_stream: "), std::string::npos) << r.output;
  EXPECT_FALSE(fs::exists(Path("bad.wav")));

  r = Run("encode" + Ckpt() + " --in " + Q(Path("nope.wav")) + " --out " +
          Q(Path("c.usrc")));
  EXPECT_EQ(r.exit_code, 1);
  EXPECT_NE(r.output.find("io_error: "), std::string::npos) << r.output;

  r = Run("encode --ckpt " + Q(Path("missing.ckpt")) + " --in " + Q(in) +
          " --out " + Q(Path("c.usrc")));
  EXPECT_EQ(r.exit_code, 1);
  EXPECT_NE(r.output.find("io_error: "), std::string::npos) << r.output;

  r = Run("decode" + Ckpt() + " --vocoder external --in " + Q(Path("b.usrc")) +
          " --out " + Q(Path("d.wav")) + " --adapter 'exit 4'");
  EXPECT_EQ(r.exit_code, 1);
  EXPECT_NE(r.output.find("vocoder_error: "), std::string::npos) << r.output;
}

TEST_F(CliTest, InspectWarnsOnTruncatedStream) {
  ASSERT_EQ(Run("encode" + Ckpt() + " --in " + Q(Path("audio") / "clip1.wav") +
                " --out " + Q(Path("t.usrc")))
                .exit_code,
            0);
  auto bytes = dsp::ReadFileBytes(Path("t.usrc"));
  bytes.resize(bitstream::kHeaderSize);
  dsp::WriteFileBytes(Path("head.usrc"), bytes);
  const auto r = Run("inspect --in " + Q(Path("head.usrc")));
  EXPECT_EQ(r.exit_code, 0);
  EXPECT_NE(r.output.find("warning: "), std::string::npos) << r.output;
}

TEST_F(CliTest, EvalWritesReport) {
  const auto r = Run("eval" + Ckpt() + " --gl-iters 2 --no-stoi --ref " +
                     Q(Path("audio")) + " --report " + Q(Path("r.json")));
  ASSERT_EQ(r.exit_code, 0) << r.output;
  std::stringstream s;
  s << std::ifstream(Path("r.json")).rdbuf();
  EXPECT_NE(s.str().find("\"mel_44\""), std::string::npos);
  EXPECT_NE(r.output.find("files=2 failures=0"), std::string::npos) << r.output;
}

TEST_F(CliTest, UnknownSubcommandFails) {
  EXPECT_NE(Run("frobnicate").exit_code, 0);
  EXPECT_NE(Run("").exit_code, 0);
}

}  // namespace
}  // namespace usrc

#endif  // USRC_CLI_PATH
