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

#ifndef USRC_TRAIN_TRAIN_CONFIG_H_
#define USRC_TRAIN_TRAIN_CONFIG_H_

#include <cmath>
#include <cstdint>
#include <string>

#include "usrc/model/codec_config.h"
#include "usrc/train/discriminator.h"
#include "usrc/train/losses.h"
#include "usrc/train/optimizer.h"

namespace usrc::train {

// lr multiplier per step; 100000 steps take 1e-4 to 1e-5.
inline const double kDefaultSchedulerRate = std::pow(0.1, 1.0 / 100000.0);

struct TrainConfig {
  double lr = 1e-4;
  AdamWOptions adam;
  int batch_size = 20;
  long long total_steps = 100000;
  std::uint64_t seed = 0;
  bool use_subband = true;
  bool use_discriminator = true;
  bool use_scheduler = false;
  double scheduler_rate = kDefaultSchedulerRate;
  long long checkpoint_every = 1000;
  double ema_decay = 0.99;
  int crop_samples = 65536;
  bool filter_bandwidth = true;
  double bandwidth_threshold_db = -60.0;
  LossWeights weights;
  DiscriminatorConfig disc;

  double LearningRateAt(long long step) const;
  void Validate() const;
};

struct TrainSetup {
  model::CodecConfig codec = model::CodecConfig::PresetB();
  TrainConfig train;
  std::string data_dir;
  std::string out_dir;
};

// Parses "key = value" lines; '#' starts a comment. See README for the keys.
TrainSetup ParseTrainConfig(const std::string& text);
TrainSetup LoadTrainConfig(const std::string& path);

}  // namespace usrc::train

#endif  // USRC_TRAIN_TRAIN_CONFIG_H_
