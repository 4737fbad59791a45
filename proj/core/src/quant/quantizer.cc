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

#include "usrc/quant/quantizer.h"

#include <cmath>
#include <unordered_map>

#include "usrc/error.h"

namespace usrc::quant {

using nn::Tensor;

template <typename T>
Matrix<T> Flatten(const Tensor<T>& latent, FlattenOrder order, int n) {
  const int c = latent.c(), f = latent.h(), t = latent.w();
  Matrix<T> rows(static_cast<Eigen::Index>(f) * t, c);
  for (int ch = 0; ch < c; ++ch) {
    const T* plane = latent.plane(n, ch);
    for (int fi = 0; fi < f; ++fi) {
      for (int ti = 0; ti < t; ++ti) {
        rows(FlatIndex(fi, ti, f, t, order), ch) = plane[fi * t + ti];
      }
    }
  }
  return rows;
}

template <typename T>
Tensor<T> Unflatten(const Matrix<T>& rows, int freq, int frames,
                    FlattenOrder order) {
  if (rows.rows() != static_cast<Eigen::Index>(freq) * frames) {
    Fail(ErrorClass::kShape, "unflatten: row count does not match grid");
  }
  const int c = static_cast<int>(rows.cols());
  Tensor<T> out(1, c, freq, frames);
  for (int ch = 0; ch < c; ++ch) {
    T* plane = out.plane(0, ch);
    for (int fi = 0; fi < freq; ++fi) {
      for (int ti = 0; ti < frames; ++ti) {
        plane[fi * frames + ti] = rows(FlatIndex(fi, ti, freq, frames, order), ch);
      }
    }
  }
  return out;
}

template <typename T>
Codebook<T>::Codebook(int size, int dim, std::mt19937_64& rng)
    : size_(size),
      dim_(dim),
      base_(size, dim),
      projection_("quantizer.projection", {1, 1, dim, dim}) {
  if (size < 1 || dim < 1) {
    Fail(ErrorClass::kConfig, "codebook size and dim must be positive");
  }
  std::normal_distribution<double> normal(0.0, 1.0);
  const double scale = 1.0 / std::sqrt(static_cast<double>(dim));
  for (Eigen::Index i = 0; i < base_.size(); ++i) {
    base_.data()[i] = static_cast<T>(normal(rng) * scale);
  }
  nn::UniformFanInInit(projection_.value, dim, rng);
}

template <typename T>
Eigen::Map<const Matrix<T>> Codebook<T>::ProjectionMatrix() const {
  return {projection_.value.data(), dim_, dim_};
}

template <typename T>
Eigen::Map<Matrix<T>> Codebook<T>::ProjectionMatrix() {
  return {projection_.value.data(), dim_, dim_};
}

template <typename T>
Matrix<T> Codebook<T>::Effective() const {
  return base_ * ProjectionMatrix();
}

namespace {
TokenSequence SequenceFrom(const std::vector<std::uint32_t>& codes, int n,
                           int freq, int frames, FlattenOrder order) {
  TokenSequence s;
  const std::size_t p = static_cast<std::size_t>(freq) * frames;
  s.tokens.assign(codes.begin() + n * p, codes.begin() + (n + 1) * p);
  s.freq = freq;
  s.frames = frames;
  s.order = order;
  return s;
}
}  // namespace

template <typename T>
TokenSequence QuantizeResult<T>::Sequence(int n) const {
  return SequenceFrom(codes, n, freq, frames, order);
}

template <typename T>
QuantizeResult<T> Quantize(const Tensor<T>& latent, const Codebook<T>& codebook,
                           FlattenOrder order) {
  if (latent.c() != codebook.dim()) {
    Fail(ErrorClass::kShape, "latent has " + std::to_string(latent.c()) +
                                 " channels, codebook dim is " +
                                 std::to_string(codebook.dim()));
  }
  if (!nn::AllFinite(latent)) {
    Fail(ErrorClass::kNumeric, "latent contains non-finite values");
  }
  const Matrix<T> codes = codebook.Effective();
  QuantizeResult<T> r;
  r.batch = latent.n();
  r.freq = latent.h();
  r.frames = latent.w();
  r.order = order;
  r.quantized = Tensor<T>(latent.shape());
  const int positions = r.freq * r.frames;
  r.codes.reserve(static_cast<std::size_t>(r.batch) * positions);
  double sq = 0;
  Eigen::Matrix<T, Eigen::Dynamic, 1> dist(codebook.size());
  for (int n = 0; n < r.batch; ++n) {
    const Matrix<T> z = Flatten(latent, order, n);
    Matrix<T> q(positions, codebook.dim());
    for (int p = 0; p < positions; ++p) {
      dist = (codes.rowwise() - z.row(p)).rowwise().squaredNorm();
      int best = 0;
      for (int k = 1; k < codebook.size(); ++k) {
        if (dist[k] < dist[best]) best = k;
      }
      r.codes.push_back(static_cast<std::uint32_t>(best));
      q.row(p) = codes.row(best);
      sq += static_cast<double>(dist[best]);
    }
    const Tensor<T> grid = Unflatten(q, r.freq, r.frames, order);
    std::copy(grid.data(), grid.data() + grid.size(), r.quantized.sample(n));
  }
  const double total = static_cast<double>(r.batch) * positions;
  // Encoder-side and codebook-side terms share the same value.
  r.commitment_loss = static_cast<T>(2.0 * sq / total);
  r.stats = ComputeCodebookStats(r.codes, codebook.size());
  return r;
}

template <typename T>
Tensor<T> Dequantize(const TokenSequence& seq, const Codebook<T>& codebook) {
  if (seq.tokens.size() != static_cast<std::size_t>(seq.freq) * seq.frames) {
    Fail(ErrorClass::kShape, "token count does not match grid shape");
  }
  const Matrix<T> codes = codebook.Effective();
  Matrix<T> rows(static_cast<Eigen::Index>(seq.tokens.size()), codebook.dim());
  for (std::size_t i = 0; i < seq.tokens.size(); ++i) {
    if (seq.tokens[i] >= static_cast<std::uint32_t>(codebook.size())) {
      Fail(ErrorClass::kCorruptStream,
           "token " + std::to_string(seq.tokens[i]) + " at position " +
               std::to_string(i) + " exceeds codebook size " +
               std::to_string(codebook.size()));
    }
    rows.row(static_cast<Eigen::Index>(i)) = codes.row(seq.tokens[i]);
  }
  return Unflatten(rows, seq.freq, seq.frames, seq.order);
}

template <typename T>
Tensor<T> StraightThroughBackward(const Tensor<T>& dquantized) {
  return dquantized;
}

template <typename T>
Tensor<T> CommitmentBackward(const Tensor<T>& latent,
                             const QuantizeResult<T>& result,
                             Codebook<T>& codebook, T weight) {
  nn::RequireSameShape(latent, result.quantized, "commitment backward");
  const int positions = result.freq * result.frames;
  const T scale = T(2) * weight / static_cast<T>(result.batch * positions);
  Tensor<T> dz(latent.shape());
  for (std::size_t i = 0; i < dz.size(); ++i) {
    dz.data()[i] = scale * (latent.data()[i] - result.quantized.data()[i]);
  }
  // e_k = base_k * P, so dL/dP = sum_p base_k(p)^T (dL/de)_p.
  Eigen::Map<Matrix<T>> dproj(codebook.projection().grad.data(), codebook.dim(),
                              codebook.dim());
  Matrix<T> picked_base(positions, codebook.dim());
  for (int n = 0; n < result.batch; ++n) {
    const Matrix<T> z = Flatten(latent, result.order, n);
    const Matrix<T> q = Flatten(result.quantized, result.order, n);
    for (int p = 0; p < positions; ++p) {
      picked_base.row(p) = codebook.base().row(result.codes[n * positions + p]);
    }
    dproj.noalias() += picked_base.transpose() * ((q - z) * scale);
  }
  return dz;
}

CodebookStats ComputeCodebookStats(std::span<const std::uint32_t> history,
                                   int codebook_size) {
  if (history.empty()) {
    Fail(ErrorClass::kEmptyInput, "codebook stats need at least one token");
  }
  std::unordered_map<std::uint32_t, std::size_t> counts;
  for (std::uint32_t t : history) ++counts[t];
  double entropy = 0;
  const double total = static_cast<double>(history.size());
  for (const auto& [code, c] : counts) {
    const double p = c / total;
    entropy -= p * std::log(p);
  }
  CodebookStats s;
  s.utilization = static_cast<double>(counts.size()) / codebook_size;
  s.perplexity = std::exp(entropy);
  return s;
}

#define USRC_INSTANTIATE_QUANT(T)                                            \
  template Matrix<T> Flatten(const Tensor<T>&, FlattenOrder, int);           \
  template Tensor<T> Unflatten(const Matrix<T>&, int, int, FlattenOrder);    \
  template class Codebook<T>;                                                \
  template struct QuantizeResult<T>;                                         \
  template QuantizeResult<T> Quantize(const Tensor<T>&, const Codebook<T>&,  \
                                      FlattenOrder);                         \
  template Tensor<T> Dequantize(const TokenSequence&, const Codebook<T>&);   \
  template Tensor<T> StraightThroughBackward(const Tensor<T>&);              \
  template Tensor<T> CommitmentBackward(const Tensor<T>&,                    \
                                        const QuantizeResult<T>&,            \
                                        Codebook<T>&, T);

USRC_INSTANTIATE_QUANT(float)
USRC_INSTANTIATE_QUANT(double)

}  // namespace usrc::quant
