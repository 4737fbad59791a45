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

#include "usrc/train/checkpoint.h"

#include <cstring>

#include <nlohmann/json.hpp>
#include <zlib.h>

#include "usrc/dsp/audio.h"
#include "usrc/error.h"
#include "train/internal.h"

namespace usrc::train {
namespace {

using nlohmann::json;

constexpr char kMagic[4] = {'U', 'S', 'C', 'K'};
constexpr std::uint32_t kVersion = 1;

class Writer {
 public:
  void Bytes(const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    out_.insert(out_.end(), b, b + n);
  }
  template <typename U>
  void Le(U v) {
    for (std::size_t i = 0; i < sizeof(U); ++i) {
      out_.push_back(static_cast<std::uint8_t>(
          static_cast<std::uint64_t>(v) >> (8 * i)));
    }
  }
  void F32(float f) {
    std::uint32_t u;
    std::memcpy(&u, &f, 4);
    Le(u);
  }
  std::vector<std::uint8_t>& out() { return out_; }

 private:
  std::vector<std::uint8_t> out_;
};

class Reader {
 public:
  Reader(const std::uint8_t* p, std::size_t n) : p_(p), n_(n) {}
  void Need(std::size_t k, const char* what) {
    if (n_ - pos_ < k) {
      Fail(ErrorClass::kCheckpoint, std::string("checkpoint truncated in ") + what);
    }
  }
  template <typename U>
  U Le(const char* what) {
    Need(sizeof(U), what);
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) {
      v |= static_cast<std::uint64_t>(p_[pos_ + i]) << (8 * i);
    }
    pos_ += sizeof(U);
    return static_cast<U>(v);
  }
  std::string Str(std::size_t k, const char* what) {
    Need(k, what);
    std::string s(reinterpret_cast<const char*>(p_ + pos_), k);
    pos_ += k;
    return s;
  }
  float F32(const char* what) {
    const std::uint32_t u = Le<std::uint32_t>(what);
    float f;
    std::memcpy(&f, &u, 4);
    return f;
  }
  std::size_t pos() const { return pos_; }

 private:
  const std::uint8_t* p_;
  std::size_t n_;
  std::size_t pos_ = 0;
};

json IntList(const std::vector<int>& v) { return json(v); }

}  // namespace

const TensorRecord* CheckpointFile::Find(const std::string& name) const {
  for (const auto& t : tensors) {
    if (t.name == name) return &t;
  }
  return nullptr;
}

const TensorRecord& CheckpointFile::Get(const std::string& name) const {
  const TensorRecord* t = Find(name);
  if (!t) Fail(ErrorClass::kCheckpoint, "checkpoint lacks tensor '" + name + "'");
  return *t;
}

std::vector<std::uint8_t> SerializeCheckpoint(const CheckpointFile& f) {
  Writer w;
  w.Bytes(kMagic, 4);
  w.Le<std::uint32_t>(kVersion);
  w.Le<std::uint64_t>(f.meta_json.size());
  w.Bytes(f.meta_json.data(), f.meta_json.size());
  w.Le<std::uint32_t>(static_cast<std::uint32_t>(f.tensors.size()));
  for (const TensorRecord& t : f.tensors) {
    w.Le<std::uint16_t>(static_cast<std::uint16_t>(t.name.size()));
    w.Bytes(t.name.data(), t.name.size());
    std::size_t count = 1;
    for (int d : t.shape) {
      w.Le<std::int32_t>(d);
      count *= static_cast<std::size_t>(d);
    }
    if (count != t.data.size()) {
      Fail(ErrorClass::kCheckpoint, "tensor '" + t.name + "' data/shape mismatch");
    }
    for (float x : t.data) w.F32(x);
  }
  const uLong crc = crc32(0L, w.out().data(), static_cast<uInt>(w.out().size()));
  w.Le<std::uint32_t>(static_cast<std::uint32_t>(crc));
  return std::move(w.out());
}

CheckpointFile ParseCheckpoint(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 24 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    Fail(ErrorClass::kCheckpoint, "not a checkpoint (bad magic)");
  }
  const std::size_t body = bytes.size() - 4;
  std::uint32_t stored = 0;
  for (int i = 0; i < 4; ++i) stored |= std::uint32_t(bytes[body + i]) << (8 * i);
  const uLong crc = crc32(0L, bytes.data(), static_cast<uInt>(body));
  if (static_cast<std::uint32_t>(crc) != stored) {
    Fail(ErrorClass::kCheckpoint, "checkpoint checksum mismatch");
  }
  Reader r(bytes.data(), body);
  r.Str(4, "magic");
  const auto version = r.Le<std::uint32_t>("version");
  if (version != kVersion) {
    Fail(ErrorClass::kCheckpoint,
         "unsupported checkpoint version " + std::to_string(version));
  }
  CheckpointFile f;
  const auto meta_len = r.Le<std::uint64_t>("meta length");
  f.meta_json = r.Str(static_cast<std::size_t>(meta_len), "meta");
  const auto count = r.Le<std::uint32_t>("tensor count");
  for (std::uint32_t k = 0; k < count; ++k) {
    TensorRecord t;
    t.name = r.Str(r.Le<std::uint16_t>("name length"), "name");
    std::size_t n = 1;
    for (int& d : t.shape) {
      d = r.Le<std::int32_t>("shape");
      if (d < 0) Fail(ErrorClass::kCheckpoint, "negative tensor dimension");
      n *= static_cast<std::size_t>(d);
    }
    r.Need(n * 4, "tensor data");
    t.data.resize(n);
    for (float& x : t.data) x = r.F32("tensor data");
    f.tensors.push_back(std::move(t));
  }
  if (r.pos() != body) Fail(ErrorClass::kCheckpoint, "trailing bytes in checkpoint");
  return f;
}

void WriteCheckpointFile(const std::filesystem::path& path,
                         const CheckpointFile& f) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  dsp::WriteFileBytes(tmp, SerializeCheckpoint(f));
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) Fail(ErrorClass::kIo, path.string() + ": " + ec.message());
}

CheckpointFile ReadCheckpointFile(const std::filesystem::path& path) {
  try {
    return ParseCheckpoint(dsp::ReadFileBytes(path));
  } catch (const Error& e) {
    if (e.error_class() == ErrorClass::kIo) throw;
    Fail(e.error_class(), path.string() + ": " + e.what());
  }
}

std::string CodecConfigToJson(const model::CodecConfig& c) {
  json j;
  j["variant"] = static_cast<int>(c.variant);
  j["spectral"] = {{"sample_rate", c.spectral.sample_rate},
                   {"n_fft", c.spectral.n_fft},
                   {"hop", c.spectral.hop},
                   {"win_length", c.spectral.win_length},
                   {"n_mels", c.spectral.n_mels},
                   {"fmin", c.spectral.fmin},
                   {"fmax", c.spectral.fmax},
                   {"log_floor", c.spectral.log_floor}};
  j["encoder"] = {{"in_channels", c.encoder.in_channels},
                  {"channel_schedule", IntList(c.encoder.channel_schedule)},
                  {"time_down", IntList(c.encoder.time_down)},
                  {"freq_down", IntList(c.encoder.freq_down)},
                  {"resblocks_per_stage", c.encoder.resblocks_per_stage},
                  {"groupnorm_groups", c.encoder.groupnorm_groups},
                  {"latent_channels", c.encoder.latent_channels}};
  j["decoder"] = {{"out_channels", c.decoder.out_channels},
                  {"channel_schedule", IntList(c.decoder.channel_schedule)},
                  {"time_up", IntList(c.decoder.time_up)},
                  {"freq_up", IntList(c.decoder.freq_up)},
                  {"resblocks_per_stage", c.decoder.resblocks_per_stage},
                  {"groupnorm_groups", c.decoder.groupnorm_groups}};
  j["quantizer"] = {{"codebook_size", c.quantizer.codebook_size},
                    {"order", static_cast<int>(c.quantizer.order)}};
  return j.dump();
}

model::CodecConfig CodecConfigFromJson(const std::string& text) {
  try {
    const json j = json::parse(text);
    model::CodecConfig c;
    c.variant = static_cast<model::Variant>(j.at("variant").get<int>());
    const json& s = j.at("spectral");
    c.spectral.sample_rate = s.at("sample_rate");
    c.spectral.n_fft = s.at("n_fft");
    c.spectral.hop = s.at("hop");
    c.spectral.win_length = s.at("win_length");
    c.spectral.n_mels = s.at("n_mels");
    c.spectral.fmin = s.at("fmin");
    c.spectral.fmax = s.at("fmax");
    c.spectral.log_floor = s.at("log_floor");
    const json& e = j.at("encoder");
    c.encoder.in_channels = e.at("in_channels");
    c.encoder.channel_schedule = e.at("channel_schedule").get<std::vector<int>>();
    c.encoder.time_down = e.at("time_down").get<std::vector<int>>();
    c.encoder.freq_down = e.at("freq_down").get<std::vector<int>>();
    c.encoder.resblocks_per_stage = e.at("resblocks_per_stage");
    c.encoder.groupnorm_groups = e.at("groupnorm_groups");
    c.encoder.latent_channels = e.at("latent_channels");
    const json& d = j.at("decoder");
    c.decoder.out_channels = d.at("out_channels");
    c.decoder.channel_schedule = d.at("channel_schedule").get<std::vector<int>>();
    c.decoder.time_up = d.at("time_up").get<std::vector<int>>();
    c.decoder.freq_up = d.at("freq_up").get<std::vector<int>>();
    c.decoder.resblocks_per_stage = d.at("resblocks_per_stage");
    c.decoder.groupnorm_groups = d.at("groupnorm_groups");
    const json& q = j.at("quantizer");
    c.quantizer.codebook_size = q.at("codebook_size");
    c.quantizer.order = static_cast<model::FlattenOrder>(q.at("order").get<int>());
    c.Validate();
    return c;
  } catch (const json::exception& ex) {
    Fail(ErrorClass::kCheckpoint, std::string("bad codec config: ") + ex.what());
  }
}

void LoadParameters(const CheckpointFile& f, const nn::ParameterList<float>& params) {
  for (nn::Parameter<float>* p : params) {
    const TensorRecord& t = f.Get(p->name);
    if (t.shape != p->value.shape()) {
      Fail(ErrorClass::kCheckpoint, "tensor '" + p->name + "' has shape " +
                                        nn::ShapeString(t.shape) + ", expected " +
                                        nn::ShapeString(p->value.shape()));
    }
    std::copy(t.data.begin(), t.data.end(), p->value.data());
  }
}

void AppendParameters(const nn::ParameterList<float>& params,
                      std::vector<TensorRecord>& out) {
  for (const nn::Parameter<float>* p : params) {
    out.push_back({p->name, p->value.shape(),
                   std::vector<float>(p->value.vec().begin(), p->value.vec().end())});
  }
}

void LoadCodebookBase(const CheckpointFile& f, quant::Codebook<float>& cb) {
  const TensorRecord& t = f.Get("quantizer.base");
  if (t.shape != std::array<int, 4>{1, 1, cb.size(), cb.dim()}) {
    Fail(ErrorClass::kCheckpoint, "codebook base has the wrong shape");
  }
  std::copy(t.data.begin(), t.data.end(), cb.mutable_base().data());
}

CodecBundle RandomCodecBundle(const model::CodecConfig& cfg, std::uint64_t seed) {
  const SeedPlan seeds(seed);
  CodecBundle b;
  b.config = cfg;
  b.model = model::CodecModel<float>(cfg, seeds.model);
  std::mt19937_64 rng(seeds.codebook);
  b.codebook = quant::Codebook<float>(cfg.quantizer.codebook_size,
                                      cfg.encoder.LatentChannels(), rng);
  return b;
}

CodecBundle LoadCodecBundle(const std::filesystem::path& path,
                            const model::CodecConfig* expected, bool force) {
  const CheckpointFile f = ReadCheckpointFile(path);
  json meta;
  try {
    meta = json::parse(f.meta_json);
  } catch (const json::exception& ex) {
    Fail(ErrorClass::kCheckpoint, path.string() + ": bad metadata: " + ex.what());
  }
  const model::CodecConfig cfg =
      CodecConfigFromJson(meta.at("codec").dump());
  if (meta.value("fingerprint", std::string()) != cfg.FingerprintHex()) {
    Fail(ErrorClass::kCheckpoint,
         path.string() + ": stored fingerprint does not match its config");
  }
  if (expected && expected->Fingerprint() != cfg.Fingerprint() && !force) {
    Fail(ErrorClass::kCheckpoint,
         path.string() + ": fingerprint " + cfg.FingerprintHex() +
             " does not match the requested config " +
             expected->FingerprintHex() + " (use --force to override)");
  }
  CodecBundle b;
  b.config = cfg;
  b.model = model::CodecModel<float>(cfg, 0);
  LoadParameters(f, b.model.Parameters());
  std::mt19937_64 rng(0);
  b.codebook = quant::Codebook<float>(cfg.quantizer.codebook_size,
                                      cfg.encoder.LatentChannels(), rng);
  LoadCodebookBase(f, b.codebook);
  nn::ParameterList<float> proj;
  b.codebook.CollectParameters(proj);
  LoadParameters(f, proj);
  b.step = meta.value("step", 0LL);
  return b;
}

}  // namespace usrc::train
