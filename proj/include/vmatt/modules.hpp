// Copyright (c) 2026 vmatt contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "vmatt/conv.hpp"
#include "vmatt/norm.hpp"
#include "vmatt/ops.hpp"
#include "vmatt/rng.hpp"
#include "vmatt/tensor.hpp"

namespace vmatt {

// Named view of a tensor owned by some module. Trainable entries receive
// optimizer updates; the rest (running statistics) only ride along in
// checkpoints. Registration order is fixed, which keeps checkpoints and
// optimizer state deterministic.
template <class T>
struct ParamEntry {
  std::string name;
  Ten<T>* tensor;
  bool trainable;
};

template <class T>
using ParamList = std::vector<ParamEntry<T>>;

template <class T>
inline void mark_trainable(ParamList<T>& params) {
  for (auto& e : params)
    if (e.trainable) e.tensor->set_requires_grad(true);
}

namespace init {

template <class T>
inline Ten<T> kaiming_conv(int co, int ci, int kh, int kw, Rng& rng) {
  const double fan_in = static_cast<double>(ci) * kh * kw;
  return Ten<T>::rand_normal({co, ci, kh, kw}, rng, T(0), static_cast<T>(std::sqrt(2.0 / fan_in)));
}

template <class T>
inline Ten<T> xavier_linear(int in, int out, Rng& rng) {
  const double limit = std::sqrt(6.0 / (in + out));
  return Ten<T>::rand_uniform({in, out}, rng, static_cast<T>(-limit), static_cast<T>(limit));
}

}  // namespace init

template <class T>
struct Linear {
  Ten<T> w, b;

  Linear() = default;
  Linear(int in, int out, Rng& rng)
      : w(init::xavier_linear<T>(in, out, rng)), b(Ten<T>::zeros({out})) {}

  Ten<T> forward(const Ten<T>& x) const { return linear(x, w, b); }

  void collect(const std::string& prefix, ParamList<T>& out) {
    out.push_back({prefix + ".w", &w, true});
    out.push_back({prefix + ".b", &b, true});
  }
};

template <class T>
struct Conv2d {
  Ten<T> w, b;
  int stride = 1, pad = 0, dil = 1;

  Conv2d() = default;
  Conv2d(int ci, int co, int k, int stride_, int pad_, int dil_, Rng& rng)
      : w(init::kaiming_conv<T>(co, ci, k, k, rng)),
        b(Ten<T>::zeros({co})),
        stride(stride_),
        pad(pad_),
        dil(dil_) {}

  Ten<T> forward(const Ten<T>& x) const { return conv2d(x, w, b, stride, pad, dil); }

  void collect(const std::string& prefix, ParamList<T>& out) {
    out.push_back({prefix + ".w", &w, true});
    out.push_back({prefix + ".b", &b, true});
  }
};

// Batch norm over the spatial extent of single-frame [C,H,W] activations.
// Batch statistics drive training; running stats (momentum 0.1) are frozen
// at inference.
template <class T>
struct BatchNorm2d {
  Ten<T> gamma, beta, run_mean, run_var;
  T eps = T(1e-5);
  T momentum = T(0.1);

  BatchNorm2d() = default;
  explicit BatchNorm2d(int c)
      : gamma(Ten<T>::full({c}, T(1))),
        beta(Ten<T>::zeros({c})),
        run_mean(Ten<T>::zeros({c})),
        run_var(Ten<T>::full({c}, T(1))) {}

  Ten<T> forward(const Ten<T>& x, bool training) {
    if (!training)
      return batch_norm_eval(x, gamma, beta, run_mean.data(), run_var.data(), eps);
    std::vector<T> bm, bv;
    Ten<T> y = batch_norm_train(x, gamma, beta, eps, &bm, &bv);
    const int64_t n = static_cast<int64_t>(x.dim(1)) * x.dim(2);
    const T unbias = static_cast<T>(static_cast<double>(n) / static_cast<double>(n - 1));
    auto& rm = run_mean.mutable_data();
    auto& rv = run_var.mutable_data();
    for (size_t i = 0; i < rm.size(); ++i) {
      rm[i] = (T(1) - momentum) * rm[i] + momentum * bm[i];
      rv[i] = (T(1) - momentum) * rv[i] + momentum * bv[i] * unbias;
    }
    return y;
  }

  void collect(const std::string& prefix, ParamList<T>& out) {
    out.push_back({prefix + ".gamma", &gamma, true});
    out.push_back({prefix + ".beta", &beta, true});
    out.push_back({prefix + ".run_mean", &run_mean, false});
    out.push_back({prefix + ".run_var", &run_var, false});
  }
};

template <class T>
struct LayerNorm {
  Ten<T> gamma, beta;
  T eps = T(1e-5);

  LayerNorm() = default;
  explicit LayerNorm(int d) : gamma(Ten<T>::full({d}, T(1))), beta(Ten<T>::zeros({d})) {}

  // Feature axis is the last axis of a [P,D] activation.
  Ten<T> forward(const Ten<T>& x) const { return layer_norm(x, x.ndim() - 1, gamma, beta, eps); }

  void collect(const std::string& prefix, ParamList<T>& out) {
    out.push_back({prefix + ".gamma", &gamma, true});
    out.push_back({prefix + ".beta", &beta, true});
  }
};

}  // namespace vmatt
