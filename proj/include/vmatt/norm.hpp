// Copyright (c) 2026 vmatt contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <vector>

#include "vmatt/ops.hpp"
#include "vmatt/tensor.hpp"

namespace vmatt {

// Layer normalisation along one feature axis with affine parameters.
// gamma/beta are length dim(axis); statistics are per remaining-index slice.
template <class T>
Ten<T> layer_norm(const Ten<T>& x, int axis, const Ten<T>& gamma, const Ten<T>& beta,
                  T eps = T(1e-5)) {
  require_dims(axis >= 0 && axis < x.ndim(), "layer_norm: axis out of range");
  const int64_t ax = x.dim(axis);
  require_dims(gamma.ndim() == 1 && gamma.dim(0) == ax && beta.ndim() == 1 && beta.dim(0) == ax,
               "layer_norm: affine params must have the feature length");
  int64_t outer = 1, inner = 1;
  for (int d = 0; d < axis; ++d) outer *= x.dim(d);
  for (int d = axis + 1; d < x.ndim(); ++d) inner *= x.dim(d);

  std::vector<T> out(x.data().size());
  std::vector<T> xhat(x.data().size());
  std::vector<T> inv_sd(static_cast<size_t>(outer * inner));
  const T* xd = x.data().data();
  const T* gm = gamma.data().data();
  const T* bt = beta.data().data();
  for (int64_t o = 0; o < outer; ++o)
    for (int64_t i = 0; i < inner; ++i) {
      const int64_t base = o * ax * inner + i;
      double mu = 0;
      for (int64_t k = 0; k < ax; ++k) mu += xd[base + k * inner];
      mu /= static_cast<double>(ax);
      double var = 0;
      for (int64_t k = 0; k < ax; ++k) {
        const double d = xd[base + k * inner] - mu;
        var += d * d;
      }
      var /= static_cast<double>(ax);
      const T isd = static_cast<T>(1.0 / std::sqrt(var + static_cast<double>(eps)));
      inv_sd[o * inner + i] = isd;
      for (int64_t k = 0; k < ax; ++k) {
        const T xh = static_cast<T>((xd[base + k * inner] - mu)) * isd;
        xhat[base + k * inner] = xh;
        out[base + k * inner] = gm[k] * xh + bt[k];
      }
    }

  return Ten<T>::make(x.shape(), std::move(out), "layer_norm", {x, gamma, beta},
                      [outer, inner, ax, xhat, inv_sd](Node<T>& self) {
                        auto* gx = detail::pgrad(self, 0);
                        auto* gg = detail::pgrad(self, 1);
                        auto* gb = detail::pgrad(self, 2);
                        const auto& gm = detail::pval(self, 1);
                        for (int64_t o = 0; o < outer; ++o)
                          for (int64_t i = 0; i < inner; ++i) {
                            const int64_t base = o * ax * inner + i;
                            const T isd = inv_sd[o * inner + i];
                            T mean_gy = T(0), mean_gy_xh = T(0);
                            for (int64_t k = 0; k < ax; ++k) {
                              const int64_t idx = base + k * inner;
                              const T gy = self.grad[idx] * gm[k];
                              mean_gy += gy;
                              mean_gy_xh += gy * xhat[idx];
                            }
                            mean_gy /= static_cast<T>(ax);
                            mean_gy_xh /= static_cast<T>(ax);
                            for (int64_t k = 0; k < ax; ++k) {
                              const int64_t idx = base + k * inner;
                              if (gg) (*gg)[k] += self.grad[idx] * xhat[idx];
                              if (gb) (*gb)[k] += self.grad[idx];
                              if (gx) {
                                const T gy = self.grad[idx] * gm[k];
                                (*gx)[idx] += (gy - mean_gy - xhat[idx] * mean_gy_xh) * isd;
                              }
                            }
                          }
                      });
}

// Batch normalisation over the spatial extent of a [C,H,W] map using batch
// statistics; also reports them so the caller can maintain running stats.
template <class T>
Ten<T> batch_norm_train(const Ten<T>& x, const Ten<T>& gamma, const Ten<T>& beta, T eps,
                        std::vector<T>* batch_mean = nullptr,
                        std::vector<T>* batch_var = nullptr) {
  require_dims(x.ndim() == 3, "batch_norm: input must be [C,H,W]");
  const int c = x.dim(0);
  const int64_t n = static_cast<int64_t>(x.dim(1)) * x.dim(2);
  require_dims(gamma.ndim() == 1 && gamma.dim(0) == c && beta.ndim() == 1 && beta.dim(0) == c,
               "batch_norm: affine params must be [C]");
  require(n > 1, "batch_norm: needs more than one spatial sample");

  std::vector<T> out(x.data().size());
  std::vector<T> xhat(x.data().size());
  std::vector<T> inv_sd(static_cast<size_t>(c));
  if (batch_mean) batch_mean->resize(static_cast<size_t>(c));
  if (batch_var) batch_var->resize(static_cast<size_t>(c));
  for (int ch = 0; ch < c; ++ch) {
    const T* xc = x.data().data() + static_cast<int64_t>(ch) * n;
    double mu = 0;
    for (int64_t i = 0; i < n; ++i) mu += xc[i];
    mu /= static_cast<double>(n);
    double var = 0;
    for (int64_t i = 0; i < n; ++i) {
      const double d = xc[i] - mu;
      var += d * d;
    }
    var /= static_cast<double>(n);
    if (batch_mean) (*batch_mean)[static_cast<size_t>(ch)] = static_cast<T>(mu);
    if (batch_var) (*batch_var)[static_cast<size_t>(ch)] = static_cast<T>(var);
    const T isd = static_cast<T>(1.0 / std::sqrt(var + static_cast<double>(eps)));
    inv_sd[static_cast<size_t>(ch)] = isd;
    const T g = gamma.data()[static_cast<size_t>(ch)];
    const T b = beta.data()[static_cast<size_t>(ch)];
    T* oc = out.data() + static_cast<int64_t>(ch) * n;
    T* hc = xhat.data() + static_cast<int64_t>(ch) * n;
    for (int64_t i = 0; i < n; ++i) {
      const T xh = static_cast<T>(xc[i] - mu) * isd;
      hc[i] = xh;
      oc[i] = g * xh + b;
    }
  }

  return Ten<T>::make(x.shape(), std::move(out), "batch_norm", {x, gamma, beta},
                      [c, n, xhat, inv_sd](Node<T>& self) {
                        auto* gx = detail::pgrad(self, 0);
                        auto* gg = detail::pgrad(self, 1);
                        auto* gb = detail::pgrad(self, 2);
                        const auto& gm = detail::pval(self, 1);
                        for (int ch = 0; ch < c; ++ch) {
                          const int64_t base = static_cast<int64_t>(ch) * n;
                          T sum_g = T(0), sum_g_xh = T(0);
                          for (int64_t i = 0; i < n; ++i) {
                            sum_g += self.grad[base + i];
                            sum_g_xh += self.grad[base + i] * xhat[base + i];
                          }
                          if (gg) (*gg)[static_cast<size_t>(ch)] += sum_g_xh;
                          if (gb) (*gb)[static_cast<size_t>(ch)] += sum_g;
                          if (gx) {
                            const T isd = inv_sd[static_cast<size_t>(ch)];
                            const T g = gm[static_cast<size_t>(ch)];
                            const T mg = sum_g / static_cast<T>(n);
                            const T mgx = sum_g_xh / static_cast<T>(n);
                            for (int64_t i = 0; i < n; ++i)
                              (*gx)[base + i] +=
                                  g * isd * (self.grad[base + i] - mg - xhat[base + i] * mgx);
                          }
                        }
                      });
}

// Inference form: frozen statistics enter as constants, the map stays an
// affine function of its input.
template <class T>
Ten<T> batch_norm_eval(const Ten<T>& x, const Ten<T>& gamma, const Ten<T>& beta,
                       const std::vector<T>& mean, const std::vector<T>& var, T eps) {
  require_dims(x.ndim() == 3, "batch_norm: input must be [C,H,W]");
  const int c = x.dim(0);
  const int64_t n = static_cast<int64_t>(x.dim(1)) * x.dim(2);
  require_dims(static_cast<int>(mean.size()) == c && static_cast<int>(var.size()) == c,
               "batch_norm: running stats must be [C]");

  std::vector<T> isd(static_cast<size_t>(c));
  for (int ch = 0; ch < c; ++ch)
    isd[static_cast<size_t>(ch)] =
        static_cast<T>(1.0 / std::sqrt(static_cast<double>(var[static_cast<size_t>(ch)]) +
                                       static_cast<double>(eps)));

  std::vector<T> out(x.data().size());
  for (int ch = 0; ch < c; ++ch) {
    const T* xc = x.data().data() + static_cast<int64_t>(ch) * n;
    T* oc = out.data() + static_cast<int64_t>(ch) * n;
    const T mu = mean[static_cast<size_t>(ch)];
    const T s = isd[static_cast<size_t>(ch)];
    const T g = gamma.data()[static_cast<size_t>(ch)];
    const T b = beta.data()[static_cast<size_t>(ch)];
    for (int64_t i = 0; i < n; ++i) oc[i] = g * (xc[i] - mu) * s + b;
  }

  return Ten<T>::make(x.shape(), std::move(out), "batch_norm", {x, gamma, beta},
                      [c, n, mean, isd](Node<T>& self) {
                        auto* gx = detail::pgrad(self, 0);
                        auto* gg = detail::pgrad(self, 1);
                        auto* gb = detail::pgrad(self, 2);
                        const auto& gm = detail::pval(self, 1);
                        const auto& xv = detail::pval(self, 0);
                        for (int ch = 0; ch < c; ++ch) {
                          const int64_t base = static_cast<int64_t>(ch) * n;
                          const T s = isd[static_cast<size_t>(ch)];
                          const T mu = mean[static_cast<size_t>(ch)];
                          const T g = gm[static_cast<size_t>(ch)];
                          for (int64_t i = 0; i < n; ++i) {
                            const T gr = self.grad[base + i];
                            if (gx) (*gx)[base + i] += gr * g * s;
                            if (gg) (*gg)[static_cast<size_t>(ch)] += gr * (xv[base + i] - mu) * s;
                            if (gb) (*gb)[static_cast<size_t>(ch)] += gr;
                          }
                        }
                      });
}

// Foreground/background value embedding: out[p,d] = v[p,d] + m[p]*ef[d]
// + (1-m[p])*eb[d]. v is position-major [P,D]; m holds P values in [0,1].
template <class T>
Ten<T> embed_fgbg(const Ten<T>& v, const Ten<T>& m, const Ten<T>& ef, const Ten<T>& eb) {
  require_dims(v.ndim() == 2, "embed_fgbg: values must be [P,D]");
  const int p = v.dim(0), d = v.dim(1);
  require_dims(m.size() == p, "embed_fgbg: mask size must equal position count");
  require_dims(ef.ndim() == 1 && ef.dim(0) == d && eb.ndim() == 1 && eb.dim(0) == d,
               "embed_fgbg: embeddings must be [D]");
  for (const T& x : m.data())
    require(x >= T(0) && x <= T(1), "embed_fgbg: mask entries must lie in [0,1]");

  std::vector<T> out(v.data());
  for (int i = 0; i < p; ++i) {
    const T mi = m.data()[static_cast<size_t>(i)];
    T* row = out.data() + static_cast<int64_t>(i) * d;
    for (int j = 0; j < d; ++j)
      row[j] += mi * ef.data()[static_cast<size_t>(j)] + (T(1) - mi) * eb.data()[static_cast<size_t>(j)];
  }

  return Ten<T>::make(v.shape(), std::move(out), "embed_fgbg", {v, m, ef, eb}, [p, d](Node<T>& self) {
    auto* gv = detail::pgrad(self, 0);
    auto* gm = detail::pgrad(self, 1);
    auto* gef = detail::pgrad(self, 2);
    auto* geb = detail::pgrad(self, 3);
    const auto& mv = detail::pval(self, 1);
    const auto& efv = detail::pval(self, 2);
    const auto& ebv = detail::pval(self, 3);
    for (int i = 0; i < p; ++i) {
      const T mi = mv[static_cast<size_t>(i)];
      const T* g = self.grad.data() + static_cast<int64_t>(i) * d;
      T gm_acc = T(0);
      for (int j = 0; j < d; ++j) {
        if (gv) (*gv)[static_cast<int64_t>(i) * d + j] += g[j];
        if (gef) (*gef)[static_cast<size_t>(j)] += mi * g[j];
        if (geb) (*geb)[static_cast<size_t>(j)] += (T(1) - mi) * g[j];
        gm_acc += g[j] * (efv[static_cast<size_t>(j)] - ebv[static_cast<size_t>(j)]);
      }
      if (gm) (*gm)[static_cast<size_t>(i)] += gm_acc;
    }
  });
}

}  // namespace vmatt
