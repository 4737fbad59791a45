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

#ifndef USRC_TRAIN_TRAINER_H_
#define USRC_TRAIN_TRAINER_H_

#include <cstdint>
#include <filesystem>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "usrc/dsp/spectral.h"
#include "usrc/model/codec_model.h"
#include "usrc/nn/tensor.h"
#include "usrc/quant/quantizer.h"
#include "usrc/train/discriminator.h"
#include "usrc/train/losses.h"
#include "usrc/train/optimizer.h"
#include "usrc/train/train_config.h"

namespace usrc::train {

struct StepRecord {
  long long step = 0;  // 1-based index of the step just taken
  LossBreakdown losses;
  double lr = 0;
  double utilization = 0;
  double perplexity = 0;
};

struct EmaCurves {
  bool initialized = false;
  LossBreakdown value;

  void Update(const LossBreakdown& b, double decay);
};

// Source of [N, 1, n_mels, frames] training batches.
class MelDataset {
 public:
  virtual ~MelDataset() = default;
  virtual std::size_t size() const = 0;
  virtual nn::Tensor<float> SampleBatch(int batch, std::mt19937_64& rng) const = 0;
};

// Fixed set of equally sized grids; batches draw items with replacement.
class GridDataset : public MelDataset {
 public:
  explicit GridDataset(std::vector<dsp::Grid> grids);
  std::size_t size() const override { return grids_.size(); }
  nn::Tensor<float> SampleBatch(int batch, std::mt19937_64& rng) const override;

 private:
  std::vector<dsp::Grid> grids_;
};

// Random fixed-length crops of audio clips, analyzed on the fly.
class ClipDataset : public MelDataset {
 public:
  ClipDataset(std::vector<dsp::AudioClip> clips, const dsp::SpectralConfig& cfg,
              int crop_samples);
  std::size_t size() const override { return clips_.size(); }
  nn::Tensor<float> SampleBatch(int batch, std::mt19937_64& rng) const override;

 private:
  std::vector<dsp::AudioClip> clips_;
  dsp::SpectralConfig cfg_;
  int crop_;
};

// Loads every decodable audio file under dir (sorted), applying the
// bandwidth filter when enabled. Rejected or unreadable paths go to dropped.
std::unique_ptr<ClipDataset> LoadClipDataset(
    const std::filesystem::path& dir, const model::CodecConfig& codec,
    const TrainConfig& cfg, std::vector<std::string>* dropped);

class Trainer {
 public:
  Trainer(const model::CodecConfig& codec, const TrainConfig& cfg);
  Trainer(const Trainer&) = delete;
  Trainer& operator=(const Trainer&) = delete;

  // One discriminator update (when enabled) then one generator update.
  StepRecord Step(const nn::Tensor<float>& batch);

  // Loss breakdown on a batch without touching any parameter.
  LossBreakdown Evaluate(const nn::Tensor<float>& batch,
                         nn::Tensor<float>* reconstruction = nullptr) const;

  long long step() const { return step_; }
  double CurrentLr() const { return cfg_.LearningRateAt(step_); }
  const TrainConfig& config() const { return cfg_; }
  TrainConfig& mutable_config() { return cfg_; }
  const model::CodecConfig& codec_config() const { return codec_cfg_; }
  void SetFlattenOrder(model::FlattenOrder order);

  model::CodecModel<float>& model() { return model_; }
  quant::Codebook<float>& codebook() { return codebook_; }
  Discriminator<float>& discriminator() { return disc_; }
  std::mt19937_64& rng() { return rng_; }
  const EmaCurves& ema() const { return ema_; }
  const std::vector<std::pair<long long, LossBreakdown>>& ema_history() const {
    return ema_history_;
  }
  void RecordEmaSnapshot() { ema_history_.emplace_back(step_, ema_.value); }

  nn::ParameterList<float> GeneratorParameters();
  nn::ParameterList<float> DiscriminatorParameters();

  void Save(const std::filesystem::path& path);
  static std::unique_ptr<Trainer> Load(const std::filesystem::path& path);

 private:
  model::CodecConfig codec_cfg_;
  TrainConfig cfg_;
  model::CodecModel<float> model_;
  quant::Codebook<float> codebook_;
  Discriminator<float> disc_;
  AdamW gen_opt_;
  AdamW disc_opt_;
  std::mt19937_64 rng_;
  long long step_ = 0;
  EmaCurves ema_;
  std::vector<std::pair<long long, LossBreakdown>> ema_history_;
};

struct TrainLoopOptions {
  std::filesystem::path out_dir;
  // Continue from this checkpoint instead of a fresh initialization.
  std::filesystem::path resume_from;
  // Overrides the configured step budget when >= 0.
  long long total_steps = -1;
  bool quiet = true;
};

// Writes step_<n>.ckpt at step 0, every checkpoint_every steps and at the end,
// and appends one JSON record per step to metrics.jsonl. Returns the paths.
std::vector<std::filesystem::path> TrainLoop(const MelDataset& data,
                                             const model::CodecConfig& codec,
                                             const TrainConfig& cfg,
                                             const TrainLoopOptions& opt);

std::filesystem::path CheckpointPath(const std::filesystem::path& dir,
                                     long long step);

}  // namespace usrc::train

#endif  // USRC_TRAIN_TRAINER_H_
