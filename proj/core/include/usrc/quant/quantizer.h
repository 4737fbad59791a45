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

#ifndef USRC_QUANT_QUANTIZER_H_
#define USRC_QUANT_QUANTIZER_H_

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "usrc/model/codec_config.h"
#include "usrc/nn/layers.h"
#include "usrc/nn/tensor.h"

namespace usrc::quant {

using model::FlattenOrder;

template <typename T>
using Matrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Position p of sample n's [C x F x T] grid in flattened order.
// frame_wise: p = t * F + f. band_wise: p = f * T + t.
inline int FlatIndex(int f, int t, int freq, int frames, FlattenOrder o) {
  return o == FlattenOrder::kFrameWise ? t * freq + f : f * frames + t;
}

// [F*T x C] rows in flattened order, for sample n of an NCHW tensor.
template <typename T>
Matrix<T> Flatten(const nn::Tensor<T>& latent, FlattenOrder order, int n = 0);

// Inverse of Flatten into a [1, C, F, T] tensor.
template <typename T>
nn::Tensor<T> Unflatten(const Matrix<T>& rows, int freq, int frames,
                        FlattenOrder order);

struct TokenSequence {
  std::vector<std::uint32_t> tokens;
  int freq = 0;
  int frames = 0;
  FlattenOrder order = FlattenOrder::kFrameWise;
};

// Single codebook: effective codes are the rows of base * projection. base is
// fixed at construction; only the projection is a trainable parameter.
template <typename T>
class Codebook {
 public:
  Codebook() = default;
  Codebook(int size, int dim, std::mt19937_64& rng);

  int size() const { return size_; }
  int dim() const { return dim_; }

  Matrix<T> Effective() const;
  const Matrix<T>& base() const { return base_; }
  Matrix<T>& mutable_base() { return base_; }
  nn::Parameter<T>& projection() { return projection_; }
  const nn::Parameter<T>& projection() const { return projection_; }
  Eigen::Map<const Matrix<T>> ProjectionMatrix() const;
  Eigen::Map<Matrix<T>> ProjectionMatrix();

  void CollectParameters(nn::ParameterList<T>& out) { out.push_back(&projection_); }

 private:
  int size_ = 0;
  int dim_ = 0;
  Matrix<T> base_;
  nn::Parameter<T> projection_;
};

struct CodebookStats {
  double utilization = 0;
  double perplexity = 0;
};

template <typename T>
struct QuantizeResult {
  // Codes for every position of every sample, sample-major, flattened order.
  std::vector<std::uint32_t> codes;
  int batch = 0;
  int freq = 0;
  int frames = 0;
  FlattenOrder order = FlattenOrder::kFrameWise;
  nn::Tensor<T> quantized;
  T commitment_loss = T(0);
  CodebookStats stats;

  TokenSequence Sequence(int n = 0) const;
};

// Nearest effective code per position, lowest index on ties. Also reports the
// commitment loss mean|z - sg(e)|^2 + mean|sg(z) - e|^2 over positions.
template <typename T>
QuantizeResult<T> Quantize(const nn::Tensor<T>& latent,
                           const Codebook<T>& codebook, FlattenOrder order);

// Looks the tokens up and rebuilds a [1, d, F, T] grid.
template <typename T>
nn::Tensor<T> Dequantize(const TokenSequence& seq, const Codebook<T>& codebook);

// Straight-through: dL/dz along the pass-through path is dL/dq.
template <typename T>
nn::Tensor<T> StraightThroughBackward(const nn::Tensor<T>& dquantized);

// Gradient of weight * commitment_loss. Returns dL/dz and accumulates the
// codebook-side term into the projection gradient.
template <typename T>
nn::Tensor<T> CommitmentBackward(const nn::Tensor<T>& latent,
                                 const QuantizeResult<T>& result,
                                 Codebook<T>& codebook, T weight);

CodebookStats ComputeCodebookStats(std::span<const std::uint32_t> history,
                                   int codebook_size);

}  // namespace usrc::quant

#endif  // USRC_QUANT_QUANTIZER_H_
