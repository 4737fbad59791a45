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

#ifndef USRC_TRAIN_INTERNAL_H_
#define USRC_TRAIN_INTERNAL_H_

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "usrc/nn/layers.h"
#include "usrc/quant/quantizer.h"
#include "usrc/train/checkpoint.h"

namespace usrc::train {

// Independent sub-seeds drawn from one run seed.
struct SeedPlan {
  explicit SeedPlan(std::uint64_t seed) {
    std::mt19937_64 master(seed);
    model = master();
    codebook = master();
    discriminator = master();
    data = master();
  }
  std::uint64_t model, codebook, discriminator, data;
};

void LoadParameters(const CheckpointFile& f,
                    const nn::ParameterList<float>& params);
void LoadCodebookBase(const CheckpointFile& f, quant::Codebook<float>& cb);
void AppendParameters(const nn::ParameterList<float>& params,
                      std::vector<TensorRecord>& out);

}  // namespace usrc::train

#endif  // USRC_TRAIN_INTERNAL_H_
