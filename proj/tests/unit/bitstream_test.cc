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

#include <cstring>
#include <random>

#include <zlib.h>

#include "test_util.h"
#include "usrc/bitstream/codec_io.h"
#include "usrc/bitstream/container.h"
#include "usrc/dsp/synthetic.h"

namespace usrc::bitstream {
namespace {

using testing::ThrownClass;

// One bit at a time, most significant first.
std::vector<std::uint8_t> ReferencePack(const std::vector<std::uint32_t>& tokens,
                                        int bits) {
  std::vector<bool> stream;
  for (std::uint32_t t : tokens) {
    for (int b = bits - 1; b >= 0; --b) stream.push_back((t >> b) & 1u);
  }
  std::vector<std::uint8_t> out((stream.size() + 7) / 8, 0);
  for (std::size_t i = 0; i < stream.size(); ++i) {
    if (stream[i]) out[i / 8] |= static_cast<std::uint8_t>(0x80u >> (i % 8));
  }
  return out;
}

Header SmallHeader() {
  model::CodecConfig c = model::CodecConfig::PresetB();
  return Header::ForConfig(c, 0, 64);
}

std::vector<std::uint8_t> ValidStream(std::vector<std::uint32_t>* tokens = nullptr) {
  std::vector<std::uint32_t> t(64);
  for (int i = 0; i < 64; ++i) t[i] = static_cast<std::uint32_t>(i * 97 % 8192);
  if (tokens) *tokens = t;
  return PackTokens(SmallHeader(), t);
}

TEST(PackTest, SixtyFourThirteenBitTokens) {
  const std::vector<std::uint32_t> t(64, 5);
  EXPECT_EQ(PackBits(t, 13).size(), 104u);
  const auto zero = PackBits(std::vector<std::uint32_t>(64, 0), 13);
  for (auto b : zero) EXPECT_EQ(b, 0);
}

TEST(PackTest, AllOnesMatchesReference) {
  const std::vector<std::uint32_t> t(8, 0x1FFF);
  const auto p = PackBits(t, 13);
  ASSERT_EQ(p.size(), 13u);  // 104 bits fill the bytes exactly
  for (auto b : p) EXPECT_EQ(b, 0xFF);
  EXPECT_EQ(p, ReferencePack(t, 13));
  const std::vector<std::uint32_t> seven(7, 0x1FFF);
  const auto q = PackBits(seven, 13);
  ASSERT_EQ(q.size(), 12u);
  EXPECT_EQ(q.back(), 0xE0);  // 91 bits: five zero pad bits
  EXPECT_EQ(q, ReferencePack(seven, 13));
}

TEST(PackTest, BitOrderIsMsbFirst) {
  EXPECT_EQ(PackBits(std::vector<std::uint32_t>{1, 0, 1}, 3),
            (std::vector<std::uint8_t>{0x20, 0x80}));
  EXPECT_EQ(PackBits(std::vector<std::uint32_t>{0xABCDEF}, 24),
            (std::vector<std::uint8_t>{0xAB, 0xCD, 0xEF}));
}

TEST(PackTest, RandomRoundTripsAcrossWidths) {
  std::mt19937_64 rng(1);
  std::uniform_int_distribution<int> width(1, 24), len(0, 200);
  for (int i = 0; i < 10000; ++i) {
    const int bits = width(rng);
    std::uniform_int_distribution<std::uint32_t> tok(0, (1u << bits) - 1);
    std::vector<std::uint32_t> t(len(rng));
    for (auto& v : t) v = tok(rng);
    const auto payload = PackBits(t, bits);
    ASSERT_EQ(payload.size(), (t.size() * bits + 7) / 8);
    if (i % 50 == 0) ASSERT_EQ(payload, ReferencePack(t, bits));
    ASSERT_EQ(UnpackBits(payload, t.size(), bits), t);
  }
}

TEST(PackTest, OverflowAndPadErrors) {
  EXPECT_EQ(ThrownClass([] { PackBits(std::vector<std::uint32_t>{8}, 3); }),
            ErrorClass::kEncode);
  auto p = PackBits(std::vector<std::uint32_t>{1, 2, 3}, 3);
  p.back() |= 0x01;
  EXPECT_EQ(ThrownClass([&] { UnpackBits(p, 3, 3); }), ErrorClass::kCorruptStream);
  p = PackBits(std::vector<std::uint32_t>{1, 2, 3}, 3);
  EXPECT_EQ(ThrownClass([&] { UnpackBits(p, 9, 3); }), ErrorClass::kCorruptStream);
}

TEST(HeaderTest, SerializedLayout) {
  Header h = SmallHeader();
  h.pad_frames = 0x0102;
  h.n_tokens = 0x1122334455667788ULL;
  const auto b = SerializeHeader(h);
  ASSERT_EQ(b.size(), kHeaderSize);
  EXPECT_EQ(std::memcmp(b.data(), "USRC", 4), 0);
  EXPECT_EQ(b[4], 1);
  EXPECT_EQ(b[5], 0);
  EXPECT_EQ(b[6] | b[7] << 8 | b[8] << 16 | b[9] << 24, 44100);
  EXPECT_EQ(b[10] | b[11] << 8, 512);
  EXPECT_EQ(b[12], 128);
  EXPECT_EQ(b[13], 16);
  EXPECT_EQ(b[14], 16);
  EXPECT_EQ(b[15], 13);
  EXPECT_EQ(b[16], 0);
  EXPECT_EQ(b[17], 0x02);
  EXPECT_EQ(b[18], 0x01);
  EXPECT_EQ(b[19], 0x88);
  EXPECT_EQ(b[26], 0x11);
}

TEST(HeaderTest, PresetGeometry) {
  const Header b = Header::ForConfig(model::CodecConfig::PresetB(), 0, 64);
  EXPECT_EQ(b.time_down, 16);
  EXPECT_EQ(b.freq_down, 16);
  EXPECT_EQ(b.LatentFreq(), 8);
  EXPECT_EQ(b.LatentFrames(), 8u);
  const Header l = Header::ForConfig(model::CodecConfig::PresetL(), 0, 256);
  EXPECT_EQ(l.variant, model::Variant::kL);
  EXPECT_EQ(l.time_down, 4);
  EXPECT_EQ(l.freq_down, 16);
  EXPECT_EQ(l.sample_rate, 44100u);
  EXPECT_EQ(l.LatentFrames(), 32u);
  EXPECT_EQ(l.MelFrames(), 128u);
}

TEST(StreamTest, RoundTripWithTrailer) {
  std::vector<std::uint32_t> t;
  const auto s = ValidStream(&t);
  EXPECT_EQ(s.size(), kHeaderSize + 104 + kTrailerSize);
  const Unpacked u = UnpackTokens(s, 8192);
  EXPECT_EQ(u.tokens, t);
  EXPECT_EQ(u.header, SmallHeader());
}

TEST(StreamTest, EmptyTokenStreamIsValid) {
  Header h = SmallHeader();
  h.n_tokens = 0;
  const auto s = PackTokens(h, {});
  EXPECT_EQ(s.size(), kHeaderSize + kTrailerSize);
  const Unpacked u = UnpackTokens(s);
  EXPECT_TRUE(u.tokens.empty());
  EXPECT_EQ(u.header.n_tokens, 0u);
}

TEST(StreamTest, EveryCorruptionClassRejected) {
  const auto good = ValidStream();
  auto expect_corrupt = [](std::vector<std::uint8_t> s, int k = 0) {
    EXPECT_EQ(ThrownClass([&] { UnpackTokens(s, k); }), ErrorClass::kCorruptStream);
  };
  auto s = good;
  s[0] = 'X';
  expect_corrupt(s);  // magic
  s = good;
  s[4] = 2;
  expect_corrupt(s);  // version
  s = good;
  s[5] = 7;
  expect_corrupt(s);  // variant
  s = good;
  s[15] = 25;
  expect_corrupt(s);  // codebook bits
  s = good;
  s[16] = 9;
  expect_corrupt(s);  // flatten order
  s = good;
  s.resize(s.size() - 10);
  expect_corrupt(s);  // truncated payload
  s = good;
  s.push_back(0);
  expect_corrupt(s);  // trailing bytes
  s = good;
  s[kHeaderSize + 3] ^= 0x10;
  expect_corrupt(s);  // checksum
  s = good;
  s.resize(10);
  expect_corrupt(s);  // header truncated
  expect_corrupt({});
  // Overflow token: K = 4096 but the stream carries 13-bit values.
  expect_corrupt(good, 4096);
  // Nonzero pad bits under a valid trailer. 16 Mel bins give one latent row.
  model::CodecConfig c = model::CodecConfig::PresetB();
  c.spectral.n_mels = 16;
  const Header h1 = Header::ForConfig(c, 0, 7);
  ASSERT_EQ(h1.LatentFreq(), 1);
  auto p = PackTokens(h1, std::vector<std::uint32_t>(7, 1));
  p[kHeaderSize + 11] |= 0x01;
  const std::size_t body = p.size() - kTrailerSize;
  const std::uint32_t crc = static_cast<std::uint32_t>(
      crc32(crc32(0L, Z_NULL, 0), p.data(), static_cast<uInt>(body)));
  for (int i = 0; i < 4; ++i) p[body + i] = static_cast<std::uint8_t>(crc >> (8 * i));
  expect_corrupt(p);
}

TEST(StreamTest, TokenCountMustTileLatentGrid) {
  Header h = SmallHeader();
  EXPECT_EQ(ThrownClass([&] { PackTokens(h, std::vector<std::uint32_t>(60, 0)); }),
            ErrorClass::kEncode);
}

TEST(InspectTest, HeaderOnlyAndTruncated) {
  const auto good = ValidStream();
  Inspection i = Inspect(good);
  EXPECT_TRUE(i.warning.empty());
  EXPECT_EQ(i.header.n_tokens, 64u);
  EXPECT_EQ(i.expected_bytes, good.size());
  const std::vector<std::uint8_t> head(good.begin(), good.begin() + kHeaderSize);
  i = Inspect(head);
  EXPECT_FALSE(i.warning.empty());
  EXPECT_EQ(i.header.n_tokens, 64u);
  EXPECT_EQ(i.actual_bytes, kHeaderSize);
  EXPECT_EQ(ThrownClass([&] { Inspect(std::vector<std::uint8_t>(good.begin(), good.begin() + 5)); }),
            ErrorClass::kCorruptStream);
}

TEST(HeaderTest, CheckMatchesNamesField) {
  const Header b = SmallHeader();
  EXPECT_NO_THROW(b.CheckMatches(model::CodecConfig::PresetB()));
  EXPECT_EQ(ThrownClass([&] { b.CheckMatches(model::CodecConfig::PresetL()); }),
            ErrorClass::kConfig);
  model::CodecConfig big = model::CodecConfig::PresetB();
  big.quantizer.codebook_size = 1 << 25;
  EXPECT_EQ(ThrownClass([&] { Header::ForConfig(big, 0, 64); }), ErrorClass::kEncode);
}

class CodecIoTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    bundle_ = new train::CodecBundle(
        train::RandomCodecBundle(model::CodecConfig::PresetB(), 3));
  }
  static void TearDownTestSuite() { delete bundle_; }
  static train::CodecBundle* bundle_;
};
train::CodecBundle* CodecIoTest::bundle_ = nullptr;

TEST_F(CodecIoTest, ShapePipelineExact) {
  const dsp::AudioClip clip = dsp::SpeechLike(65536, 44100, 4);
  const EncodedClip e = EncodeClip(*bundle_, clip);
  EXPECT_EQ(e.latent.channels(), 512);
  EXPECT_EQ(e.latent.freq(), 8);
  EXPECT_EQ(e.latent.frames(), 8);
  EXPECT_EQ(e.tokens.size(), 64u);
  EXPECT_EQ(e.header.n_tokens, 64u);
  EXPECT_EQ(e.header.pad_frames, 0);
  const dsp::MelSpectrogram mel = DecodeToMel(*bundle_, e.header, e.tokens);
  EXPECT_EQ(mel.n_mels(), 128);
  EXPECT_EQ(mel.n_frames(), 128);
  const auto stream = EncodeToStream(*bundle_, clip);
  EXPECT_EQ(stream.size(), kHeaderSize + 104 + kTrailerSize);
  EXPECT_EQ(UnpackTokens(stream, 8192).tokens, e.tokens);
}

TEST_F(CodecIoTest, DecodeRejectsMismatchedStreams) {
  const dsp::AudioClip clip = dsp::SpeechLike(65536, 44100, 5);
  const EncodedClip e = EncodeClip(*bundle_, clip);
  std::vector<std::uint32_t> fewer(e.tokens.begin(), e.tokens.end() - 8);
  EXPECT_EQ(ThrownClass([&] { DecodeToMel(*bundle_, e.header, fewer); }),
            ErrorClass::kShape);
  Header l = e.header;
  l.variant = model::Variant::kL;
  l.time_down = 4;
  EXPECT_EQ(ThrownClass([&] { DecodeToMel(*bundle_, l, e.tokens); }),
            ErrorClass::kConfig);
}

TEST_F(CodecIoTest, EmbeddingsAreSelectedCodebookRows) {
  const dsp::AudioClip clip = dsp::SpeechLike(65536, 44100, 6);
  const quant::Matrix<float> emb = ExtractEmbeddings(*bundle_, clip);
  ASSERT_EQ(emb.rows(), 64);
  ASSERT_EQ(emb.cols(), 512);
  const EncodedClip e = EncodeClip(*bundle_, clip);
  const quant::Matrix<float> codes = bundle_->codebook.Effective();
  for (int p = 0; p < 64; ++p) {
    ASSERT_EQ(quant::Matrix<float>(emb.row(p)), quant::Matrix<float>(codes.row(e.tokens[p])));
  }
  EXPECT_EQ(ExtractEmbeddings(*bundle_, clip), emb);
}

TEST_F(CodecIoTest, RaggedClipDecodesToMatchingDuration) {
  const dsp::AudioClip clip = dsp::SpeechLike(70000, 44100, 7);
  const auto stream = EncodeToStream(*bundle_, clip);
  const Header h = Inspect(stream).header;
  EXPECT_EQ(h.pad_frames, 144 - 137);
  const dsp::AudioClip y = DecodeStream(
      *bundle_, stream, vocoder::VocoderSpec::GriffinLim(bundle_->config.spectral, 4));
  EXPECT_EQ(y.sample_rate, 44100);
  EXPECT_LE(std::abs(static_cast<long>(y.samples.size()) - 70000), 512);
}

}  // namespace
}  // namespace usrc::bitstream
