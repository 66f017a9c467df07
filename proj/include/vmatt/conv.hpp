// Copyright (c) 2026 vmatt contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "vmatt/gemm.hpp"
#include "vmatt/ops.hpp"
#include "vmatt/tensor.hpp"

namespace vmatt {

namespace detail {

struct ConvGeom {
  int ci, h, w, co, kh, kw, stride, pad, dil, oh, ow;
};

inline ConvGeom conv_geom(const Shape& x, const Shape& wgt, int stride, int pad, int dil) {
  require_dims(x.size() == 3, "conv2d: input must be [C,H,W]");
  require_dims(wgt.size() == 4, "conv2d: weight must be [Co,Ci,Kh,Kw]");
  require(stride >= 1 && dil >= 1 && pad >= 0, "conv2d: bad stride/pad/dilation");
  ConvGeom g{x[0], x[1], x[2], wgt[0], wgt[2], wgt[3], stride, pad, dil, 0, 0};
  require_dims(wgt[1] == g.ci, "conv2d: channel mismatch between input and weight");
  const int eff_kh = g.dil * (g.kh - 1) + 1;
  const int eff_kw = g.dil * (g.kw - 1) + 1;
  g.oh = (g.h + 2 * g.pad - eff_kh) / g.stride + 1;
  g.ow = (g.w + 2 * g.pad - eff_kw) / g.stride + 1;
  require_dims(g.oh >= 1 && g.ow >= 1, "conv2d: kernel larger than padded input");
  return g;
}

// Unfold x into [Ci*Kh*Kw, Oh*Ow]; out-of-bounds taps contribute zeros.
template <class T>
inline void im2col(const T* x, const ConvGeom& g, T* cols) {
  const int64_t n = static_cast<int64_t>(g.oh) * g.ow;
  int64_t row = 0;
  for (int c = 0; c < g.ci; ++c) {
    const T* xc = x + static_cast<int64_t>(c) * g.h * g.w;
    for (int ky = 0; ky < g.kh; ++ky)
      for (int kx = 0; kx < g.kw; ++kx, ++row) {
        T* dst = cols + row * n;
        const int dy = ky * g.dil - g.pad;
        const int dx = kx * g.dil - g.pad;
        for (int oy = 0; oy < g.oh; ++oy) {
          const int iy = oy * g.stride + dy;
          T* drow = dst + static_cast<int64_t>(oy) * g.ow;
          if (iy < 0 || iy >= g.h) {
            std::fill(drow, drow + g.ow, T(0));
            continue;
          }
          const T* xrow = xc + static_cast<int64_t>(iy) * g.w;
          for (int ox = 0; ox < g.ow; ++ox) {
            const int ix = ox * g.stride + dx;
            drow[ox] = (ix >= 0 && ix < g.w) ? xrow[ix] : T(0);
          }
        }
      }
  }
}

// Transpose of im2col: accumulate column gradients back into image layout.
template <class T>
inline void col2im_acc(const T* cols, const ConvGeom& g, T* gx) {
  const int64_t n = static_cast<int64_t>(g.oh) * g.ow;
  int64_t row = 0;
  for (int c = 0; c < g.ci; ++c) {
    T* xc = gx + static_cast<int64_t>(c) * g.h * g.w;
    for (int ky = 0; ky < g.kh; ++ky)
      for (int kx = 0; kx < g.kw; ++kx, ++row) {
        const T* src = cols + row * n;
        const int dy = ky * g.dil - g.pad;
        const int dx = kx * g.dil - g.pad;
        for (int oy = 0; oy < g.oh; ++oy) {
          const int iy = oy * g.stride + dy;
          if (iy < 0 || iy >= g.h) continue;
          const T* srow = src + static_cast<int64_t>(oy) * g.ow;
          T* xrow = xc + static_cast<int64_t>(iy) * g.w;
          for (int ox = 0; ox < g.ow; ++ox) {
            const int ix = ox * g.stride + dx;
            if (ix >= 0 && ix < g.w) xrow[ix] += srow[ox];
          }
        }
      }
  }
}

// Half-pixel-centre interpolation table for one axis.
inline void lerp_axis(int in, int out, std::vector<int>& i0, std::vector<int>& i1,
                      std::vector<double>& w1) {
  i0.resize(static_cast<size_t>(out));
  i1.resize(static_cast<size_t>(out));
  w1.resize(static_cast<size_t>(out));
  const double scale = static_cast<double>(in) / out;
  for (int o = 0; o < out; ++o) {
    double src = (o + 0.5) * scale - 0.5;
    src = std::min(std::max(src, 0.0), static_cast<double>(in - 1));
    int lo = static_cast<int>(std::floor(src));
    int hi = std::min(lo + 1, in - 1);
    i0[static_cast<size_t>(o)] = lo;
    i1[static_cast<size_t>(o)] = hi;
    w1[static_cast<size_t>(o)] = src - lo;
  }
}

}  // namespace detail

// 2-D cross-correlation with zero padding, shared stride/dilation on both
// axes, optional bias. x:[Ci,H,W], w:[Co,Ci,Kh,Kw], bias:[Co] or empty.
template <class T>
Ten<T> conv2d(const Ten<T>& x, const Ten<T>& w, const Ten<T>& bias, int stride = 1,
              int pad = 0, int dil = 1) {
  const detail::ConvGeom g = detail::conv_geom(x.shape(), w.shape(), stride, pad, dil);
  const bool has_bias = !bias.empty();
  if (has_bias)
    require_dims(bias.ndim() == 1 && bias.dim(0) == g.co, "conv2d: bias must be [Co]");

  const int64_t k = static_cast<int64_t>(g.ci) * g.kh * g.kw;
  const int64_t n = static_cast<int64_t>(g.oh) * g.ow;
  std::vector<T> cols(static_cast<size_t>(k * n));
  detail::im2col(x.data().data(), g, cols.data());

  std::vector<T> out(static_cast<size_t>(g.co) * n, T(0));
  detail::gemm_nn(w.data().data(), cols.data(), out.data(), g.co, static_cast<int>(k),
                  static_cast<int>(n));
  if (has_bias)
    for (int co = 0; co < g.co; ++co) {
      const T b = bias.data()[static_cast<size_t>(co)];
      T* row = out.data() + static_cast<int64_t>(co) * n;
      for (int64_t i = 0; i < n; ++i) row[i] += b;
    }

  auto bw = [g, k, n, has_bias](Node<T>& self) {
    const auto& xv = detail::pval(self, 0);
    const auto& wv = detail::pval(self, 1);
    auto* gx = detail::pgrad(self, 0);
    auto* gw = detail::pgrad(self, 1);
    if (gw) {
      // dW = dOut * cols^T; columns are recomputed rather than stored so the
      // tape holds activations only.
      std::vector<T> cols(static_cast<size_t>(k * n));
      detail::im2col(xv.data(), g, cols.data());
      detail::gemm_nt(self.grad.data(), cols.data(), gw->data(), g.co, static_cast<int>(n),
                      static_cast<int>(k));
    }
    if (gx) {
      std::vector<T> gcols(static_cast<size_t>(k * n), T(0));
      detail::gemm_tn(wv.data(), self.grad.data(), gcols.data(), g.co, static_cast<int>(k),
                      static_cast<int>(n));
      detail::col2im_acc(gcols.data(), g, gx->data());
    }
    if (has_bias) {
      if (auto* gb = detail::pgrad(self, 2))
        for (int co = 0; co < g.co; ++co) {
          T acc = T(0);
          const T* row = self.grad.data() + static_cast<int64_t>(co) * n;
          for (int64_t i = 0; i < n; ++i) acc += row[i];
          (*gb)[static_cast<size_t>(co)] += acc;
        }
    }
  };

  std::vector<Ten<T>> parents{x, w};
  if (has_bias) parents.push_back(bias);
  return Ten<T>::make({g.co, g.oh, g.ow}, std::move(out), "conv2d", std::move(parents),
                      std::move(bw));
}

template <class T>
Ten<T> conv2d(const Ten<T>& x, const Ten<T>& w, int stride = 1, int pad = 0, int dil = 1) {
  Ten<T> no_bias = Ten<T>::from({0}, {});
  // Represent "no bias" as an empty tensor with shape [0].
  return conv2d(x, w, no_bias, stride, pad, dil);
}

// Bilinear resampling with half-pixel centres and edge clamping. Identity
// when the output size equals the input size.
template <class T>
Ten<T> bilinear_resize(const Ten<T>& x, int oh, int ow) {
  require_dims(x.ndim() == 3, "bilinear_resize: input must be [C,H,W]");
  require(oh >= 1 && ow >= 1, "bilinear_resize: output dims must be positive");
  const int c = x.dim(0), h = x.dim(1), w = x.dim(2);
  std::vector<int> y0, y1, x0, x1;
  std::vector<double> wy, wx;
  detail::lerp_axis(h, oh, y0, y1, wy);
  detail::lerp_axis(w, ow, x0, x1, wx);

  std::vector<T> out(static_cast<size_t>(c) * oh * ow);
  for (int ch = 0; ch < c; ++ch) {
    const T* src = x.data().data() + static_cast<int64_t>(ch) * h * w;
    T* dst = out.data() + static_cast<int64_t>(ch) * oh * ow;
    for (int oy = 0; oy < oh; ++oy) {
      const T* r0 = src + static_cast<int64_t>(y0[oy]) * w;
      const T* r1 = src + static_cast<int64_t>(y1[oy]) * w;
      const double fy = wy[oy];
      for (int ox = 0; ox < ow; ++ox) {
        const double fx = wx[ox];
        const double top = (1.0 - fx) * r0[x0[ox]] + fx * r0[x1[ox]];
        const double bot = (1.0 - fx) * r1[x0[ox]] + fx * r1[x1[ox]];
        dst[static_cast<int64_t>(oy) * ow + ox] = static_cast<T>((1.0 - fy) * top + fy * bot);
      }
    }
  }

  return Ten<T>::make({c, oh, ow}, std::move(out), "bilinear_resize", {x},
                      [c, h, w, oh, ow, y0, y1, x0, x1, wy, wx](Node<T>& self) {
                        if (auto* gx = detail::pgrad(self, 0)) {
                          for (int ch = 0; ch < c; ++ch) {
                            T* dst = gx->data() + static_cast<int64_t>(ch) * h * w;
                            const T* g = self.grad.data() + static_cast<int64_t>(ch) * oh * ow;
                            for (int oy = 0; oy < oh; ++oy) {
                              const double fy = wy[oy];
                              for (int ox = 0; ox < ow; ++ox) {
                                const double fx = wx[ox];
                                const T gv = g[static_cast<int64_t>(oy) * ow + ox];
                                dst[static_cast<int64_t>(y0[oy]) * w + x0[ox]] += static_cast<T>((1 - fy) * (1 - fx)) * gv;
                                dst[static_cast<int64_t>(y0[oy]) * w + x1[ox]] += static_cast<T>((1 - fy) * fx) * gv;
                                dst[static_cast<int64_t>(y1[oy]) * w + x0[ox]] += static_cast<T>(fy * (1 - fx)) * gv;
                                dst[static_cast<int64_t>(y1[oy]) * w + x1[ox]] += static_cast<T>(fy * fx) * gv;
                              }
                            }
                          }
                        }
                      });
}

// Non-overlapping k x k mean pooling; exact area average, so it doubles as
// the coarse-scale downsampler. Spatial dims must divide by k.
template <class T>
Ten<T> avg_pool(const Ten<T>& x, int k) {
  require_dims(x.ndim() == 3, "avg_pool: input must be [C,H,W]");
  require(k >= 1, "avg_pool: k must be >= 1");
  const int c = x.dim(0), h = x.dim(1), w = x.dim(2);
  require_dims(h % k == 0 && w % k == 0, "avg_pool: dims must be divisible by k");
  const int oh = h / k, ow = w / k;
  const T inv = T(1) / static_cast<T>(k * k);

  std::vector<T> out(static_cast<size_t>(c) * oh * ow, T(0));
  for (int ch = 0; ch < c; ++ch)
    for (int oy = 0; oy < oh; ++oy)
      for (int ox = 0; ox < ow; ++ox) {
        T acc = T(0);
        for (int dy = 0; dy < k; ++dy) {
          const T* row = x.data().data() + ((static_cast<int64_t>(ch) * h + oy * k + dy) * w + ox * k);
          for (int dx = 0; dx < k; ++dx) acc += row[dx];
        }
        out[(static_cast<int64_t>(ch) * oh + oy) * ow + ox] = acc * inv;
      }

  return Ten<T>::make({c, oh, ow}, std::move(out), "avg_pool", {x}, [c, h, w, k, oh, ow, inv](Node<T>& self) {
    if (auto* gx = detail::pgrad(self, 0)) {
      for (int ch = 0; ch < c; ++ch)
        for (int oy = 0; oy < oh; ++oy)
          for (int ox = 0; ox < ow; ++ox) {
            const T g = self.grad[(static_cast<int64_t>(ch) * oh + oy) * ow + ox] * inv;
            for (int dy = 0; dy < k; ++dy) {
              T* row = gx->data() + ((static_cast<int64_t>(ch) * h + oy * k + dy) * w + ox * k);
              for (int dx = 0; dx < k; ++dx) row[dx] += g;
            }
          }
    }
  });
}

// Keep every second sample starting at (0,0); ceil semantics on odd sizes.
template <class T>
Ten<T> subsample2(const Ten<T>& x) {
  require_dims(x.ndim() == 3, "subsample2: input must be [C,H,W]");
  const int c = x.dim(0), h = x.dim(1), w = x.dim(2);
  const int oh = (h + 1) / 2, ow = (w + 1) / 2;
  std::vector<T> out(static_cast<size_t>(c) * oh * ow);
  for (int ch = 0; ch < c; ++ch)
    for (int oy = 0; oy < oh; ++oy)
      for (int ox = 0; ox < ow; ++ox)
        out[(static_cast<int64_t>(ch) * oh + oy) * ow + ox] =
            x.data()[(static_cast<int64_t>(ch) * h + 2 * oy) * w + 2 * ox];
  return Ten<T>::make({c, oh, ow}, std::move(out), "subsample2", {x}, [c, h, w, oh, ow](Node<T>& self) {
    if (auto* gx = detail::pgrad(self, 0)) {
      for (int ch = 0; ch < c; ++ch)
        for (int oy = 0; oy < oh; ++oy)
          for (int ox = 0; ox < ow; ++ox)
            (*gx)[(static_cast<int64_t>(ch) * h + 2 * oy) * w + 2 * ox] +=
                self.grad[(static_cast<int64_t>(ch) * oh + oy) * ow + ox];
    }
  });
}

}  // namespace vmatt
