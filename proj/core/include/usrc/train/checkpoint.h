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

#ifndef USRC_TRAIN_CHECKPOINT_H_
#define USRC_TRAIN_CHECKPOINT_H_

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "usrc/model/codec_config.h"
#include "usrc/model/codec_model.h"
#include "usrc/quant/quantizer.h"

namespace usrc::train {

struct TensorRecord {
  std::string name;
  std::array<int, 4> shape{0, 0, 0, 0};
  std::vector<float> data;
};

// "USCK" | u32 version | u64 meta length | meta JSON | u32 tensor count |
// tensors (u16 name length, name, 4 x i32 shape, f32 data) | u32 CRC-32 of
// everything before it. All integers little-endian.
struct CheckpointFile {
  std::string meta_json;
  std::vector<TensorRecord> tensors;

  const TensorRecord* Find(const std::string& name) const;
  const TensorRecord& Get(const std::string& name) const;
};

std::vector<std::uint8_t> SerializeCheckpoint(const CheckpointFile& f);
CheckpointFile ParseCheckpoint(const std::vector<std::uint8_t>& bytes);
void WriteCheckpointFile(const std::filesystem::path& path,
                         const CheckpointFile& f);
CheckpointFile ReadCheckpointFile(const std::filesystem::path& path);

std::string CodecConfigToJson(const model::CodecConfig& c);
model::CodecConfig CodecConfigFromJson(const std::string& json);

// Inference-side view of a checkpoint: the codec and its codebook.
struct CodecBundle {
  model::CodecConfig config;
  model::CodecModel<float> model;
  quant::Codebook<float> codebook;
  long long step = 0;
};

// Refuses a checkpoint whose fingerprint differs from expected unless force.
CodecBundle LoadCodecBundle(const std::filesystem::path& path,
                            const model::CodecConfig* expected = nullptr,
                            bool force = false);

CodecBundle RandomCodecBundle(const model::CodecConfig& cfg, std::uint64_t seed);

}  // namespace usrc::train

#endif  // USRC_TRAIN_CHECKPOINT_H_
