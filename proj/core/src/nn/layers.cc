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

#include "usrc/nn/layers.h"

#include <algorithm>
#include <cmath>
#include <cstring>

#include <Eigen/Core>

namespace usrc::nn {
namespace {

template <typename T>
using MatRM = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Range of output columns ox for which ox * stride + offset lands in [0, len).
inline void ValidRange(int len, int stride, int offset, int out_len, int* lo,
                       int* hi) {
  // ox * stride + offset >= 0
  int l = offset >= 0 ? 0 : (-offset + stride - 1) / stride;
  // ox * stride + offset <= len - 1
  int h = (len - 1 - offset) < 0 ? 0 : (len - 1 - offset) / stride + 1;
  *lo = std::min(l, out_len);
  *hi = std::clamp(h, *lo, out_len);
}

template <typename T>
void Im2Col(const T* x, int channels, int height, int width,
            const ConvGeometry& g, int out_h, int out_w, T* col) {
  const std::size_t plane = static_cast<std::size_t>(out_h) * out_w;
  for (int c = 0; c < channels; ++c) {
    for (int ky = 0; ky < g.kernel_h; ++ky) {
      for (int kx = 0; kx < g.kernel_w; ++kx) {
        T* dst = col + ((static_cast<std::size_t>(c) * g.kernel_h + ky) *
                            g.kernel_w +
                        kx) *
                           plane;
        int x_lo, x_hi;
        ValidRange(width, g.stride_w, kx - g.pad_w, out_w, &x_lo, &x_hi);
        for (int oy = 0; oy < out_h; ++oy) {
          T* row = dst + static_cast<std::size_t>(oy) * out_w;
          const int iy = oy * g.stride_h - g.pad_h + ky;
          if (iy < 0 || iy >= height) {
            std::fill(row, row + out_w, T(0));
            continue;
          }
          const T* src = x + (static_cast<std::size_t>(c) * height + iy) * width;
          std::fill(row, row + x_lo, T(0));
          if (g.stride_w == 1) {
            const int ix0 = x_lo - g.pad_w + kx;
            if (x_hi > x_lo) {
              std::memcpy(row + x_lo, src + ix0, sizeof(T) * (x_hi - x_lo));
            }
          } else {
            for (int ox = x_lo; ox < x_hi; ++ox) {
              row[ox] = src[ox * g.stride_w - g.pad_w + kx];
            }
          }
          std::fill(row + x_hi, row + out_w, T(0));
        }
      }
    }
  }
}

template <typename T>
void Col2Im(const T* col, int channels, int height, int width,
            const ConvGeometry& g, int out_h, int out_w, T* dx) {
  const std::size_t plane = static_cast<std::size_t>(out_h) * out_w;
  for (int c = 0; c < channels; ++c) {
    for (int ky = 0; ky < g.kernel_h; ++ky) {
      for (int kx = 0; kx < g.kernel_w; ++kx) {
        const T* src = col + ((static_cast<std::size_t>(c) * g.kernel_h + ky) *
                                  g.kernel_w +
                              kx) *
                                 plane;
        int x_lo, x_hi;
        ValidRange(width, g.stride_w, kx - g.pad_w, out_w, &x_lo, &x_hi);
        for (int oy = 0; oy < out_h; ++oy) {
          const int iy = oy * g.stride_h - g.pad_h + ky;
          if (iy < 0 || iy >= height) continue;
          const T* row = src + static_cast<std::size_t>(oy) * out_w;
          T* dst = dx + (static_cast<std::size_t>(c) * height + iy) * width;
          for (int ox = x_lo; ox < x_hi; ++ox) {
            dst[ox * g.stride_w - g.pad_w + kx] += row[ox];
          }
        }
      }
    }
  }
}

bool IsPlainPointwise(const ConvGeometry& g) {
  return g.kernel_h == 1 && g.kernel_w == 1 && g.stride_h == 1 &&
         g.stride_w == 1 && g.pad_h == 0 && g.pad_w == 0;
}

void RequireConvInput(const std::array<int, 4>& s, const ConvGeometry& g) {
  if (s[1] != g.in_channels) {
    Fail(ErrorClass::kShape, "conv expects " + std::to_string(g.in_channels) +
                                 " input channels, got " + ShapeString(s));
  }
  if (g.OutH(s[2]) < 1 || g.OutW(s[3]) < 1) {
    Fail(ErrorClass::kShape, "conv input too small: " + ShapeString(s));
  }
}

}  // namespace

ConvGeometry ConvGeometry::Downsample(int in, int out, int factor_h,
                                      int factor_w) {
  auto kernel = [](int f) { return std::max(3, 2 * (f / 2) + 1); };
  ConvGeometry g;
  g.in_channels = in;
  g.out_channels = out;
  g.kernel_h = kernel(factor_h);
  g.kernel_w = kernel(factor_w);
  g.stride_h = factor_h;
  g.stride_w = factor_w;
  g.pad_h = (g.kernel_h - 1) / 2;
  g.pad_w = (g.kernel_w - 1) / 2;
  return g;
}

template <typename T>
Tensor<T> ConvForward(const Tensor<T>& x, const Tensor<T>& weight,
                      const T* bias, const ConvGeometry& g) {
  RequireConvInput(x.shape(), g);
  const int oh = g.OutH(x.h());
  const int ow = g.OutW(x.w());
  const int k = g.in_channels * g.kernel_h * g.kernel_w;
  const int hw = oh * ow;
  Tensor<T> y(x.n(), g.out_channels, oh, ow);
  const bool pointwise = IsPlainPointwise(g);
  std::vector<T> col(pointwise ? 0 : static_cast<std::size_t>(k) * hw);
  Eigen::Map<const MatRM<T>> wm(weight.data(), g.out_channels, k);
  for (int n = 0; n < x.n(); ++n) {
    const T* src = x.sample(n);
    if (!pointwise) {
      Im2Col(src, x.c(), x.h(), x.w(), g, oh, ow, col.data());
      src = col.data();
    }
    Eigen::Map<const MatRM<T>> cm(src, k, hw);
    Eigen::Map<MatRM<T>> ym(y.sample(n), g.out_channels, hw);
    ym.noalias() = wm * cm;
    if (bias != nullptr) {
      Eigen::Map<const Eigen::Matrix<T, Eigen::Dynamic, 1>> bv(bias,
                                                              g.out_channels);
      ym.colwise() += bv;
    }
  }
  return y;
}

template <typename T>
Tensor<T> ConvBackward(const Tensor<T>& x, const Tensor<T>& weight,
                       const Tensor<T>& dy, const ConvGeometry& g,
                       Tensor<T>* dweight, Tensor<T>* dbias, bool need_dx) {
  const int oh = g.OutH(x.h());
  const int ow = g.OutW(x.w());
  if (dy.n() != x.n() || dy.c() != g.out_channels || dy.h() != oh ||
      dy.w() != ow) {
    Fail(ErrorClass::kShape, "conv backward: gradient shape " +
                                 ShapeString(dy.shape()) + " for input " +
                                 ShapeString(x.shape()));
  }
  const int k = g.in_channels * g.kernel_h * g.kernel_w;
  const int hw = oh * ow;
  const bool pointwise = IsPlainPointwise(g);
  std::vector<T> col(pointwise ? 0 : static_cast<std::size_t>(k) * hw);
  std::vector<T> dcol(pointwise ? 0 : static_cast<std::size_t>(k) * hw);
  Tensor<T> dx;
  if (need_dx) dx = Tensor<T>(x.shape());
  Eigen::Map<const MatRM<T>> wm(weight.data(), g.out_channels, k);
  for (int n = 0; n < x.n(); ++n) {
    Eigen::Map<const MatRM<T>> dym(dy.sample(n), g.out_channels, hw);
    if (dbias != nullptr) {
      Eigen::Map<Eigen::Matrix<T, Eigen::Dynamic, 1>> db(dbias->data(),
                                                         g.out_channels);
      db += dym.rowwise().sum();
    }
    const T* src = x.sample(n);
    if (dweight != nullptr) {
      if (!pointwise) {
        Im2Col(src, x.c(), x.h(), x.w(), g, oh, ow, col.data());
        src = col.data();
      }
      Eigen::Map<const MatRM<T>> cm(src, k, hw);
      Eigen::Map<MatRM<T>> dwm(dweight->data(), g.out_channels, k);
      dwm.noalias() += dym * cm.transpose();
    }
    if (need_dx) {
      if (pointwise) {
        Eigen::Map<MatRM<T>> dxm(dx.sample(n), k, hw);
        dxm.noalias() = wm.transpose() * dym;
      } else {
        Eigen::Map<MatRM<T>> dcm(dcol.data(), k, hw);
        dcm.noalias() = wm.transpose() * dym;
        Col2Im(dcol.data(), x.c(), x.h(), x.w(), g, oh, ow, dx.sample(n));
      }
    }
  }
  return dx;
}

template <typename T>
void UniformFanInInit(Tensor<T>& t, int fan_in, std::mt19937_64& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (T& v : t.vec()) v = static_cast<T>(dist(rng));
}

template <typename T>
long long CountScalars(const ParameterList<T>& params) {
  long long total = 0;
  for (const Parameter<T>* p : params) {
    total += static_cast<long long>(p->value.size());
  }
  return total;
}

// ---------------------------------------------------------------- Conv2d

template <typename T>
Conv2d<T>::Conv2d(const std::string& name, const ConvGeometry& g,
                  std::mt19937_64& rng)
    : geom_(g),
      weight_(name + ".weight",
              {g.out_channels, g.in_channels, g.kernel_h, g.kernel_w}),
      bias_(name + ".bias", {1, 1, 1, g.out_channels}) {
  const int fan_in = g.in_channels * g.kernel_h * g.kernel_w;
  UniformFanInInit(weight_.value, fan_in, rng);
  UniformFanInInit(bias_.value, fan_in, rng);
}

template <typename T>
Tensor<T> Conv2d<T>::Forward(const Tensor<T>& x) const {
  return ConvForward(x, weight_.value, bias_.value.data(), geom_);
}

template <typename T>
Tensor<T> Conv2d<T>::Backward(const Tensor<T>& x, const Tensor<T>& dy,
                              bool need_dx) {
  return ConvBackward(x, weight_.value, dy, geom_, &weight_.grad, &bias_.grad,
                      need_dx);
}

template <typename T>
void Conv2d<T>::CollectParameters(ParameterList<T>& out) {
  out.push_back(&weight_);
  out.push_back(&bias_);
}

// ------------------------------------------------------ WeightNormConv2d

template <typename T>
WeightNormConv2d<T>::WeightNormConv2d(const std::string& name,
                                      const ConvGeometry& g,
                                      std::mt19937_64& rng)
    : geom_(g),
      v_(name + ".weight_v",
         {g.out_channels, g.in_channels, g.kernel_h, g.kernel_w}),
      g_(name + ".weight_g", {1, 1, 1, g.out_channels}),
      bias_(name + ".bias", {1, 1, 1, g.out_channels}) {
  const int fan_in = g.in_channels * g.kernel_h * g.kernel_w;
  UniformFanInInit(v_.value, fan_in, rng);
  UniformFanInInit(bias_.value, fan_in, rng);
  // Start from w == v, as torch's weight_norm does.
  for (int o = 0; o < g.out_channels; ++o) {
    double ss = 0;
    const T* row = v_.value.data() + static_cast<std::size_t>(o) * fan_in;
    for (int i = 0; i < fan_in; ++i) ss += double(row[i]) * row[i];
    g_.value.data()[o] = static_cast<T>(std::sqrt(ss));
  }
}

template <typename T>
Tensor<T> WeightNormConv2d<T>::EffectiveWeight() const {
  Tensor<T> w(v_.value.shape());
  const int fan_in = geom_.in_channels * geom_.kernel_h * geom_.kernel_w;
  for (int o = 0; o < geom_.out_channels; ++o) {
    const T* row = v_.value.data() + static_cast<std::size_t>(o) * fan_in;
    double ss = 0;
    for (int i = 0; i < fan_in; ++i) ss += double(row[i]) * row[i];
    const double norm = std::sqrt(ss);
    const double scale = norm > 0 ? double(g_.value.data()[o]) / norm : 0.0;
    T* dst = w.data() + static_cast<std::size_t>(o) * fan_in;
    for (int i = 0; i < fan_in; ++i) dst[i] = static_cast<T>(row[i] * scale);
  }
  return w;
}

template <typename T>
Tensor<T> WeightNormConv2d<T>::Forward(const Tensor<T>& x) const {
  const Tensor<T> w = EffectiveWeight();
  return ConvForward(x, w, bias_.value.data(), geom_);
}

template <typename T>
Tensor<T> WeightNormConv2d<T>::Backward(const Tensor<T>& x,
                                        const Tensor<T>& dy, bool need_dx) {
  const Tensor<T> w = EffectiveWeight();
  Tensor<T> dw(w.shape());
  Tensor<T> dx = ConvBackward(x, w, dy, geom_, &dw, &bias_.grad, need_dx);
  // dg = <dw, v>/|v|;  dv = g/|v| * dw - g * dg / |v|^2 * v
  const int fan_in = geom_.in_channels * geom_.kernel_h * geom_.kernel_w;
  for (int o = 0; o < geom_.out_channels; ++o) {
    const T* v = v_.value.data() + static_cast<std::size_t>(o) * fan_in;
    const T* d = dw.data() + static_cast<std::size_t>(o) * fan_in;
    double ss = 0, dot = 0;
    for (int i = 0; i < fan_in; ++i) {
      ss += double(v[i]) * v[i];
      dot += double(d[i]) * v[i];
    }
    const double norm = std::sqrt(ss);
    if (norm == 0) continue;
    const double gval = g_.value.data()[o];
    const double dg = dot / norm;
    g_.grad.data()[o] += static_cast<T>(dg);
    T* dv = v_.grad.data() + static_cast<std::size_t>(o) * fan_in;
    for (int i = 0; i < fan_in; ++i) {
      dv[i] += static_cast<T>(gval / norm * d[i] - gval * dg / ss * v[i]);
    }
  }
  return dx;
}

template <typename T>
void WeightNormConv2d<T>::CollectParameters(ParameterList<T>& out) {
  out.push_back(&v_);
  out.push_back(&g_);
  out.push_back(&bias_);
}

// ------------------------------------------------------------- GroupNorm

template <typename T>
GroupNorm<T>::GroupNorm(const std::string& name, int groups, int channels,
                        T eps)
    : groups_(groups),
      channels_(channels),
      eps_(eps),
      gamma_(name + ".gamma", {1, 1, 1, channels}),
      beta_(name + ".beta", {1, 1, 1, channels}) {
  if (groups <= 0 || channels % groups != 0) {
    Fail(ErrorClass::kConfig, "GroupNorm: " + std::to_string(groups) +
                                  " groups do not divide " +
                                  std::to_string(channels) + " channels");
  }
  gamma_.value.Fill(T(1));
}

template <typename T>
Tensor<T> GroupNorm<T>::Forward(const Tensor<T>& x, Trace* trace) const {
  if (x.c() != channels_) {
    Fail(ErrorClass::kShape, "GroupNorm expects " + std::to_string(channels_) +
                                 " channels, got " + ShapeString(x.shape()));
  }
  const int cpg = channels_ / groups_;
  const std::size_t hw = static_cast<std::size_t>(x.h()) * x.w();
  const std::size_t m = cpg * hw;
  Tensor<T> y(x.shape());
  if (trace != nullptr) {
    trace->mean.assign(static_cast<std::size_t>(x.n()) * groups_, T(0));
    trace->rstd.assign(static_cast<std::size_t>(x.n()) * groups_, T(0));
  }
  for (int n = 0; n < x.n(); ++n) {
    for (int gi = 0; gi < groups_; ++gi) {
      const T* src = x.plane(n, gi * cpg);
      double sum = 0, sq = 0;
      for (std::size_t i = 0; i < m; ++i) sum += src[i];
      const double mean = sum / static_cast<double>(m);
      for (std::size_t i = 0; i < m; ++i) {
        const double d = src[i] - mean;
        sq += d * d;
      }
      const double rstd = 1.0 / std::sqrt(sq / static_cast<double>(m) + eps_);
      if (trace != nullptr) {
        trace->mean[n * groups_ + gi] = static_cast<T>(mean);
        trace->rstd[n * groups_ + gi] = static_cast<T>(rstd);
      }
      for (int ci = 0; ci < cpg; ++ci) {
        const int c = gi * cpg + ci;
        const T scale = static_cast<T>(rstd * gamma_.value.data()[c]);
        const T shift = static_cast<T>(beta_.value.data()[c] -
                                       mean * rstd * gamma_.value.data()[c]);
        const T* s = x.plane(n, c);
        T* d = y.plane(n, c);
        for (std::size_t i = 0; i < hw; ++i) d[i] = s[i] * scale + shift;
      }
    }
  }
  return y;
}

template <typename T>
Tensor<T> GroupNorm<T>::Backward(const Tensor<T>& x, const Trace& trace,
                                 const Tensor<T>& dy) {
  RequireSameShape(x, dy, "GroupNorm backward");
  const int cpg = channels_ / groups_;
  const std::size_t hw = static_cast<std::size_t>(x.h()) * x.w();
  const double m = static_cast<double>(cpg * hw);
  Tensor<T> dx(x.shape());
  for (int n = 0; n < x.n(); ++n) {
    for (int gi = 0; gi < groups_; ++gi) {
      const double mean = trace.mean[n * groups_ + gi];
      const double rstd = trace.rstd[n * groups_ + gi];
      double sum_dxhat = 0, sum_dxhat_xhat = 0;
      for (int ci = 0; ci < cpg; ++ci) {
        const int c = gi * cpg + ci;
        const double gamma = gamma_.value.data()[c];
        const T* xs = x.plane(n, c);
        const T* ds = dy.plane(n, c);
        double dgamma = 0, dbeta = 0;
        for (std::size_t i = 0; i < hw; ++i) {
          const double xhat = (xs[i] - mean) * rstd;
          dgamma += ds[i] * xhat;
          dbeta += ds[i];
          const double dxhat = ds[i] * gamma;
          sum_dxhat += dxhat;
          sum_dxhat_xhat += dxhat * xhat;
        }
        gamma_.grad.data()[c] += static_cast<T>(dgamma);
        beta_.grad.data()[c] += static_cast<T>(dbeta);
      }
      for (int ci = 0; ci < cpg; ++ci) {
        const int c = gi * cpg + ci;
        const double gamma = gamma_.value.data()[c];
        const T* xs = x.plane(n, c);
        const T* ds = dy.plane(n, c);
        T* out = dx.plane(n, c);
        for (std::size_t i = 0; i < hw; ++i) {
          const double xhat = (xs[i] - mean) * rstd;
          const double dxhat = ds[i] * gamma;
          out[i] = static_cast<T>(rstd / m *
                                  (m * dxhat - sum_dxhat - xhat * sum_dxhat_xhat));
        }
      }
    }
  }
  return dx;
}

template <typename T>
void GroupNorm<T>::CollectParameters(ParameterList<T>& out) {
  out.push_back(&gamma_);
  out.push_back(&beta_);
}

// ------------------------------------------------------- pointwise ops

template <typename T>
Tensor<T> SiluForward(const Tensor<T>& x) {
  Tensor<T> y(x.shape());
  const T* s = x.data();
  T* d = y.data();
  for (std::size_t i = 0; i < x.size(); ++i) {
    d[i] = s[i] / (T(1) + std::exp(-s[i]));
  }
  return y;
}

template <typename T>
Tensor<T> SiluBackward(const Tensor<T>& x, const Tensor<T>& dy) {
  RequireSameShape(x, dy, "SiLU backward");
  Tensor<T> dx(x.shape());
  const T* s = x.data();
  const T* g = dy.data();
  T* d = dx.data();
  for (std::size_t i = 0; i < x.size(); ++i) {
    const T sig = T(1) / (T(1) + std::exp(-s[i]));
    d[i] = g[i] * sig * (T(1) + s[i] * (T(1) - sig));
  }
  return dx;
}

template <typename T>
Tensor<T> LeakyReluForward(const Tensor<T>& x, T slope) {
  Tensor<T> y(x.shape());
  const T* s = x.data();
  T* d = y.data();
  for (std::size_t i = 0; i < x.size(); ++i) {
    d[i] = s[i] > T(0) ? s[i] : slope * s[i];
  }
  return y;
}

template <typename T>
Tensor<T> LeakyReluBackward(const Tensor<T>& x, const Tensor<T>& dy, T slope) {
  RequireSameShape(x, dy, "LeakyReLU backward");
  Tensor<T> dx(x.shape());
  const T* s = x.data();
  const T* g = dy.data();
  T* d = dx.data();
  for (std::size_t i = 0; i < x.size(); ++i) {
    d[i] = s[i] > T(0) ? g[i] : slope * g[i];
  }
  return dx;
}

template <typename T>
Tensor<T> UpsampleNearest(const Tensor<T>& x, int factor_h, int factor_w) {
  Tensor<T> y(x.n(), x.c(), x.h() * factor_h, x.w() * factor_w);
  for (int n = 0; n < x.n(); ++n) {
    for (int c = 0; c < x.c(); ++c) {
      const T* s = x.plane(n, c);
      T* d = y.plane(n, c);
      for (int oy = 0; oy < y.h(); ++oy) {
        const T* srow = s + static_cast<std::size_t>(oy / factor_h) * x.w();
        T* drow = d + static_cast<std::size_t>(oy) * y.w();
        for (int ox = 0; ox < y.w(); ++ox) drow[ox] = srow[ox / factor_w];
      }
    }
  }
  return y;
}

template <typename T>
Tensor<T> UpsampleNearestBackward(const Tensor<T>& dy, int factor_h,
                                  int factor_w) {
  Tensor<T> dx(dy.n(), dy.c(), dy.h() / factor_h, dy.w() / factor_w);
  for (int n = 0; n < dy.n(); ++n) {
    for (int c = 0; c < dy.c(); ++c) {
      const T* s = dy.plane(n, c);
      T* d = dx.plane(n, c);
      for (int oy = 0; oy < dy.h(); ++oy) {
        const T* srow = s + static_cast<std::size_t>(oy) * dy.w();
        T* drow = d + static_cast<std::size_t>(oy / factor_h) * dx.w();
        for (int ox = 0; ox < dy.w(); ++ox) drow[ox / factor_w] += srow[ox];
      }
    }
  }
  return dx;
}

#define USRC_INSTANTIATE_LAYERS(T)                                           \
  template class Conv2d<T>;                                                  \
  template class WeightNormConv2d<T>;                                        \
  template class GroupNorm<T>;                                               \
  template Tensor<T> ConvForward(const Tensor<T>&, const Tensor<T>&,         \
                                 const T*, const ConvGeometry&);             \
  template Tensor<T> ConvBackward(const Tensor<T>&, const Tensor<T>&,        \
                                  const Tensor<T>&, const ConvGeometry&,     \
                                  Tensor<T>*, Tensor<T>*, bool);             \
  template Tensor<T> SiluForward(const Tensor<T>&);                          \
  template Tensor<T> SiluBackward(const Tensor<T>&, const Tensor<T>&);       \
  template Tensor<T> LeakyReluForward(const Tensor<T>&, T);                  \
  template Tensor<T> LeakyReluBackward(const Tensor<T>&, const Tensor<T>&,   \
                                       T);                                   \
  template Tensor<T> UpsampleNearest(const Tensor<T>&, int, int);            \
  template Tensor<T> UpsampleNearestBackward(const Tensor<T>&, int, int);    \
  template void UniformFanInInit(Tensor<T>&, int, std::mt19937_64&);         \
  template long long CountScalars(const ParameterList<T>&);

USRC_INSTANTIATE_LAYERS(float)
USRC_INSTANTIATE_LAYERS(double)

#undef USRC_INSTANTIATE_LAYERS

}  // namespace usrc::nn
