// Copyright (c) 2026 vmatt contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "vmatt/tensor.hpp"

namespace vmatt {

namespace detail {

// Gradient buffer of parent i, or nullptr when that parent is not tracked.
template <class T>
inline std::vector<T>* pgrad(Node<T>& self, size_t i) {
  Node<T>* p = self.parents[i].get();
  return p->tracked ? &p->ensure_grad() : nullptr;
}

template <class T>
inline const std::vector<T>& pval(Node<T>& self, size_t i) {
  return self.parents[i]->value;
}

inline void same_shape(const Shape& a, const Shape& b, const char* op) {
  if (a != b)
    throw DimensionError(std::string(op) + ": shape mismatch " + shape_str(a) + " vs " + shape_str(b));
}

}  // namespace detail

// ---------------------------------------------------------------- elementwise

template <class T>
Ten<T> add(const Ten<T>& a, const Ten<T>& b) {
  detail::same_shape(a.shape(), b.shape(), "add");
  std::vector<T> out(a.data());
  for (int64_t i = 0; i < a.size(); ++i) out[i] += b.data()[i];
  return Ten<T>::make(a.shape(), std::move(out), "add", {a, b}, [](Node<T>& self) {
    auto* ga = detail::pgrad(self, 0);
    auto* gb = detail::pgrad(self, 1);
    for (size_t i = 0; i < self.grad.size(); ++i) {
      if (ga) (*ga)[i] += self.grad[i];
      if (gb) (*gb)[i] += self.grad[i];
    }
  });
}

template <class T>
Ten<T> sub(const Ten<T>& a, const Ten<T>& b) {
  detail::same_shape(a.shape(), b.shape(), "sub");
  std::vector<T> out(a.data());
  for (int64_t i = 0; i < a.size(); ++i) out[i] -= b.data()[i];
  return Ten<T>::make(a.shape(), std::move(out), "sub", {a, b}, [](Node<T>& self) {
    auto* ga = detail::pgrad(self, 0);
    auto* gb = detail::pgrad(self, 1);
    for (size_t i = 0; i < self.grad.size(); ++i) {
      if (ga) (*ga)[i] += self.grad[i];
      if (gb) (*gb)[i] -= self.grad[i];
    }
  });
}

template <class T>
Ten<T> mul(const Ten<T>& a, const Ten<T>& b) {
  detail::same_shape(a.shape(), b.shape(), "mul");
  std::vector<T> out(a.data());
  for (int64_t i = 0; i < a.size(); ++i) out[i] *= b.data()[i];
  return Ten<T>::make(a.shape(), std::move(out), "mul", {a, b}, [](Node<T>& self) {
    auto* ga = detail::pgrad(self, 0);
    auto* gb = detail::pgrad(self, 1);
    const auto& av = detail::pval(self, 0);
    const auto& bv = detail::pval(self, 1);
    for (size_t i = 0; i < self.grad.size(); ++i) {
      if (ga) (*ga)[i] += self.grad[i] * bv[i];
      if (gb) (*gb)[i] += self.grad[i] * av[i];
    }
  });
}

template <class T>
Ten<T> mul_scalar(const Ten<T>& a, T c) {
  std::vector<T> out(a.data());
  for (T& x : out) x *= c;
  return Ten<T>::make(a.shape(), std::move(out), "mul_scalar", {a}, [c](Node<T>& self) {
    if (auto* ga = detail::pgrad(self, 0))
      for (size_t i = 0; i < self.grad.size(); ++i) (*ga)[i] += self.grad[i] * c;
  });
}

template <class T>
Ten<T> add_scalar(const Ten<T>& a, T c) {
  std::vector<T> out(a.data());
  for (T& x : out) x += c;
  return Ten<T>::make(a.shape(), std::move(out), "add_scalar", {a}, [](Node<T>& self) {
    if (auto* ga = detail::pgrad(self, 0))
      for (size_t i = 0; i < self.grad.size(); ++i) (*ga)[i] += self.grad[i];
  });
}

// c - a, elementwise.
template <class T>
Ten<T> rsub_scalar(T c, const Ten<T>& a) {
  std::vector<T> out(a.data());
  for (T& x : out) x = c - x;
  return Ten<T>::make(a.shape(), std::move(out), "rsub_scalar", {a}, [](Node<T>& self) {
    if (auto* ga = detail::pgrad(self, 0))
      for (size_t i = 0; i < self.grad.size(); ++i) (*ga)[i] -= self.grad[i];
  });
}

// -------------------------------------------------------------------- unaries

template <class T>
Ten<T> relu(const Ten<T>& a) {
  std::vector<T> out(a.data());
  for (T& x : out) x = x > T(0) ? x : T(0);
  return Ten<T>::make(a.shape(), std::move(out), "relu", {a}, [](Node<T>& self) {
    if (auto* ga = detail::pgrad(self, 0)) {
      const auto& av = detail::pval(self, 0);
      for (size_t i = 0; i < self.grad.size(); ++i)
        if (av[i] > T(0)) (*ga)[i] += self.grad[i];
    }
  });
}

template <class T>
Ten<T> sigmoid(const Ten<T>& a) {
  std::vector<T> out(a.data());
  for (T& x : out) {
    double v = static_cast<double>(x);
    x = static_cast<T>(1.0 / (1.0 + std::exp(-v)));
  }
  return Ten<T>::make(a.shape(), std::move(out), "sigmoid", {a}, [](Node<T>& self) {
    if (auto* ga = detail::pgrad(self, 0))
      for (size_t i = 0; i < self.grad.size(); ++i) {
        T y = self.value[i];
        (*ga)[i] += self.grad[i] * y * (T(1) - y);
      }
  });
}

// Exact erf-based GELU.
template <class T>
Ten<T> gelu(const Ten<T>& a) {
  std::vector<T> out(a.data());
  for (T& x : out) {
    double v = static_cast<double>(x);
    x = static_cast<T>(0.5 * v * (1.0 + std::erf(v * 0.7071067811865476)));
  }
  return Ten<T>::make(a.shape(), std::move(out), "gelu", {a}, [](Node<T>& self) {
    if (auto* ga = detail::pgrad(self, 0)) {
      const auto& av = detail::pval(self, 0);
      for (size_t i = 0; i < self.grad.size(); ++i) {
        double v = static_cast<double>(av[i]);
        double cdf = 0.5 * (1.0 + std::erf(v * 0.7071067811865476));
        double pdf = std::exp(-0.5 * v * v) * 0.3989422804014327;
        (*ga)[i] += self.grad[i] * static_cast<T>(cdf + v * pdf);
      }
    }
  });
}

template <class T>
Ten<T> abs(const Ten<T>& a) {
  std::vector<T> out(a.data());
  for (T& x : out) x = x < T(0) ? -x : x;
  return Ten<T>::make(a.shape(), std::move(out), "abs", {a}, [](Node<T>& self) {
    if (auto* ga = detail::pgrad(self, 0)) {
      const auto& av = detail::pval(self, 0);
      for (size_t i = 0; i < self.grad.size(); ++i) {
        T s = av[i] > T(0) ? T(1) : (av[i] < T(0) ? T(-1) : T(0));
        (*ga)[i] += self.grad[i] * s;
      }
    }
  });
}

// Natural log; non-positive inputs surface as a numerics error via the
// output finiteness check.
template <class T>
Ten<T> log(const Ten<T>& a) {
  std::vector<T> out(a.data());
  for (T& x : out) x = static_cast<T>(std::log(static_cast<double>(x)));
  return Ten<T>::make(a.shape(), std::move(out), "log", {a}, [](Node<T>& self) {
    if (auto* ga = detail::pgrad(self, 0)) {
      const auto& av = detail::pval(self, 0);
      for (size_t i = 0; i < self.grad.size(); ++i) (*ga)[i] += self.grad[i] / av[i];
    }
  });
}

// Gradient passes only where the input was strictly inside (lo, hi).
template <class T>
Ten<T> clamp(const Ten<T>& a, T lo, T hi) {
  require(lo < hi, "clamp: lo must be < hi");
  std::vector<T> out(a.data());
  for (T& x : out) x = std::min(hi, std::max(lo, x));
  return Ten<T>::make(a.shape(), std::move(out), "clamp", {a}, [lo, hi](Node<T>& self) {
    if (auto* ga = detail::pgrad(self, 0)) {
      const auto& av = detail::pval(self, 0);
      for (size_t i = 0; i < self.grad.size(); ++i)
        if (av[i] > lo && av[i] < hi) (*ga)[i] += self.grad[i];
    }
  });
}

// ------------------------------------------------------------- shape plumbing

template <class T>
Ten<T> reshape(const Ten<T>& a, Shape shape) {
  if (numel(shape) != a.size())
    throw DimensionError("reshape: element count mismatch " + shape_str(a.shape()) + " -> " + shape_str(shape));
  return Ten<T>::make(std::move(shape), a.data(), "reshape", {a}, [](Node<T>& self) {
    if (auto* ga = detail::pgrad(self, 0))
      for (size_t i = 0; i < self.grad.size(); ++i) (*ga)[i] += self.grad[i];
  });
}

template <class T>
Ten<T> transpose2d(const Ten<T>& a) {
  require_dims(a.ndim() == 2, "transpose2d: rank-2 tensor required");
  const int m = a.dim(0), n = a.dim(1);
  std::vector<T> out(static_cast<size_t>(a.size()));
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) out[static_cast<size_t>(j) * m + i] = a.data()[static_cast<size_t>(i) * n + j];
  return Ten<T>::make({n, m}, std::move(out), "transpose2d", {a}, [m, n](Node<T>& self) {
    if (auto* ga = detail::pgrad(self, 0))
      for (int j = 0; j < n; ++j)
        for (int i = 0; i < m; ++i)
          (*ga)[static_cast<size_t>(i) * n + j] += self.grad[static_cast<size_t>(j) * m + i];
  });
}

template <class T>
Ten<T> concat(const std::vector<Ten<T>>& parts, int axis) {
  require(!parts.empty(), "concat: no inputs");
  const Shape& s0 = parts[0].shape();
  require_dims(axis >= 0 && axis < static_cast<int>(s0.size()), "concat: axis out of range");
  Shape out_shape = s0;
  int64_t axis_total = 0;
  for (const auto& p : parts) {
    require_dims(p.ndim() == static_cast<int>(s0.size()), "concat: rank mismatch");
    for (int d = 0; d < p.ndim(); ++d)
      require_dims(d == axis || p.dim(d) == s0[static_cast<size_t>(d)], "concat: non-axis dims must match");
    axis_total += p.dim(axis);
  }
  out_shape[static_cast<size_t>(axis)] = static_cast<int>(axis_total);

  int64_t outer = 1, inner = 1;
  for (int d = 0; d < axis; ++d) outer *= s0[static_cast<size_t>(d)];
  for (size_t d = static_cast<size_t>(axis) + 1; d < s0.size(); ++d) inner *= s0[d];

  std::vector<T> out(static_cast<size_t>(numel(out_shape)));
  std::vector<int> axis_sizes;
  int64_t off = 0;
  for (const auto& p : parts) {
    const int ax = p.dim(axis);
    axis_sizes.push_back(ax);
    for (int64_t o = 0; o < outer; ++o) {
      const T* src = p.data().data() + o * ax * inner;
      T* dst = out.data() + (o * axis_total + off) * inner;
      std::copy(src, src + ax * inner, dst);
    }
    off += ax;
  }

  std::vector<Ten<T>> parents = parts;
  return Ten<T>::make(std::move(out_shape), std::move(out), "concat", std::move(parents),
                      [axis_sizes, outer, inner, axis_total](Node<T>& self) {
                        int64_t off = 0;
                        for (size_t pi = 0; pi < self.parents.size(); ++pi) {
                          const int ax = axis_sizes[pi];
                          if (auto* ga = detail::pgrad(self, pi)) {
                            for (int64_t o = 0; o < outer; ++o) {
                              const T* src = self.grad.data() + (o * axis_total + off) * inner;
                              T* dst = ga->data() + o * ax * inner;
                              for (int64_t i = 0; i < ax * inner; ++i) dst[i] += src[i];
                            }
                          }
                          off += ax;
                        }
                      });
}

// Contiguous slice of `len` entries starting at `start` along `axis`.
template <class T>
Ten<T> narrow(const Ten<T>& a, int axis, int start, int len) {
  require_dims(axis >= 0 && axis < a.ndim(), "narrow: axis out of range");
  require_dims(start >= 0 && len > 0 && start + len <= a.dim(axis), "narrow: slice out of range");
  Shape out_shape = a.shape();
  out_shape[static_cast<size_t>(axis)] = len;
  int64_t outer = 1, inner = 1;
  for (int d = 0; d < axis; ++d) outer *= a.dim(d);
  for (int d = axis + 1; d < a.ndim(); ++d) inner *= a.dim(d);
  const int64_t ax = a.dim(axis);

  std::vector<T> out(static_cast<size_t>(numel(out_shape)));
  for (int64_t o = 0; o < outer; ++o) {
    const T* src = a.data().data() + (o * ax + start) * inner;
    std::copy(src, src + len * inner, out.data() + o * len * inner);
  }
  return Ten<T>::make(std::move(out_shape), std::move(out), "narrow", {a},
                      [axis, start, len, outer, inner, ax](Node<T>& self) {
                        (void)axis;
                        if (auto* ga = detail::pgrad(self, 0)) {
                          for (int64_t o = 0; o < outer; ++o) {
                            const T* src = self.grad.data() + o * len * inner;
                            T* dst = ga->data() + (o * ax + start) * inner;
                            for (int64_t i = 0; i < len * inner; ++i) dst[i] += src[i];
                          }
                        }
                      });
}

// ----------------------------------------------------------------- reductions

template <class T>
Ten<T> sum(const Ten<T>& a) {
  T acc = T(0);
  for (const T& x : a.data()) acc += x;
  return Ten<T>::make({1}, {acc}, "sum", {a}, [](Node<T>& self) {
    if (auto* ga = detail::pgrad(self, 0))
      for (T& g : *ga) g += self.grad[0];
  });
}

template <class T>
Ten<T> mean(const Ten<T>& a) {
  require(a.size() > 0, "mean: empty tensor");
  T acc = T(0);
  for (const T& x : a.data()) acc += x;
  const T inv = T(1) / static_cast<T>(a.size());
  return Ten<T>::make({1}, {acc * inv}, "mean", {a}, [inv](Node<T>& self) {
    if (auto* ga = detail::pgrad(self, 0))
      for (T& g : *ga) g += self.grad[0] * inv;
  });
}

// -------------------------------------------------------------------- softmax

template <class T>
Ten<T> softmax(const Ten<T>& a, int axis) {
  require_dims(axis >= 0 && axis < a.ndim(), "softmax: axis out of range");
  int64_t outer = 1, inner = 1;
  const int64_t ax = a.dim(axis);
  for (int d = 0; d < axis; ++d) outer *= a.dim(d);
  for (int d = axis + 1; d < a.ndim(); ++d) inner *= a.dim(d);

  std::vector<T> out(a.data());
  for (int64_t o = 0; o < outer; ++o)
    for (int64_t i = 0; i < inner; ++i) {
      T* base = out.data() + o * ax * inner + i;
      T mx = base[0];
      for (int64_t k = 1; k < ax; ++k) mx = std::max(mx, base[k * inner]);
      double denom = 0;
      for (int64_t k = 0; k < ax; ++k) {
        double e = std::exp(static_cast<double>(base[k * inner] - mx));
        base[k * inner] = static_cast<T>(e);
        denom += e;
      }
      const T inv = static_cast<T>(1.0 / denom);
      for (int64_t k = 0; k < ax; ++k) base[k * inner] *= inv;
    }

  return Ten<T>::make(a.shape(), std::move(out), "softmax", {a},
                      [outer, inner, ax](Node<T>& self) {
                        if (auto* ga = detail::pgrad(self, 0)) {
                          for (int64_t o = 0; o < outer; ++o)
                            for (int64_t i = 0; i < inner; ++i) {
                              const int64_t base = o * ax * inner + i;
                              T dot = T(0);
                              for (int64_t k = 0; k < ax; ++k)
                                dot += self.grad[base + k * inner] * self.value[base + k * inner];
                              for (int64_t k = 0; k < ax; ++k) {
                                const int64_t idx = base + k * inner;
                                (*ga)[idx] += self.value[idx] * (self.grad[idx] - dot);
                              }
                            }
                        }
                      });
}

// --------------------------------------------------------------------- matmul

template <class T>
Ten<T> matmul(const Ten<T>& a, const Ten<T>& b);

template <class T>
Ten<T> add_rowvec(const Ten<T>& a, const Ten<T>& v);

// y = x * w + b with x:[M,K], w:[K,N], b:[N]
template <class T>
Ten<T> linear(const Ten<T>& x, const Ten<T>& w, const Ten<T>& b) {
  return add_rowvec(matmul(x, w), b);
}

}  // namespace vmatt

#include "vmatt/gemm.hpp"

namespace vmatt {

template <class T>
Ten<T> matmul(const Ten<T>& a, const Ten<T>& b) {
  require_dims(a.ndim() == 2 && b.ndim() == 2, "matmul: rank-2 tensors required");
  require_dims(a.dim(1) == b.dim(0), "matmul: inner dims disagree " + shape_str(a.shape()) + " x " + shape_str(b.shape()));
  const int m = a.dim(0), k = a.dim(1), n = b.dim(1);
  std::vector<T> out(static_cast<size_t>(m) * n, T(0));
  detail::gemm_nn(a.data().data(), b.data().data(), out.data(), m, k, n);
  return Ten<T>::make({m, n}, std::move(out), "matmul", {a, b}, [m, k, n](Node<T>& self) {
    const auto& av = detail::pval(self, 0);
    const auto& bv = detail::pval(self, 1);
    if (auto* ga = detail::pgrad(self, 0))
      detail::gemm_nt(self.grad.data(), bv.data(), ga->data(), m, n, k);
    if (auto* gb = detail::pgrad(self, 1))
      detail::gemm_tn(av.data(), self.grad.data(), gb->data(), m, k, n);
  });
}

// Broadcast-add a length-N vector over the rows of an [M,N] matrix.
template <class T>
Ten<T> add_rowvec(const Ten<T>& a, const Ten<T>& v) {
  require_dims(a.ndim() == 2 && v.ndim() == 1 && v.dim(0) == a.dim(1),
               "add_rowvec: expected [M,N] plus [N]");
  const int m = a.dim(0), n = a.dim(1);
  std::vector<T> out(a.data());
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) out[static_cast<size_t>(i) * n + j] += v.data()[static_cast<size_t>(j)];
  return Ten<T>::make(a.shape(), std::move(out), "add_rowvec", {a, v}, [m, n](Node<T>& self) {
    if (auto* ga = detail::pgrad(self, 0))
      for (size_t i = 0; i < self.grad.size(); ++i) (*ga)[i] += self.grad[i];
    if (auto* gv = detail::pgrad(self, 1))
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) (*gv)[static_cast<size_t>(j)] += self.grad[static_cast<size_t>(i) * n + j];
  });
}

}  // namespace vmatt
