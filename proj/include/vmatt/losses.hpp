// Copyright (c) 2026 vmatt contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <vector>

#include "vmatt/conv.hpp"
#include "vmatt/decoder.hpp"
#include "vmatt/ops.hpp"
#include "vmatt/tensor.hpp"

namespace vmatt {

struct LossWeights {
  double w_mask = 0.5;
  double w_coarse = 0.5;
  double w_fine = 1.0;
};

// Binary foreground indicator of a ground-truth alpha: 1 where alpha >= tau.
// Produces a constant tensor; pseudo labels are targets, not activations.
template <class T>
Ten<T> pseudo_mask(const Ten<T>& alpha_gt, double tau = 0.5) {
  if (!(tau > 0.0 && tau < 1.0)) throw ConfigError("pseudo_mask: tau must lie in (0,1)");
  for (const T& a : alpha_gt.data())
    require(a >= T(0) && a <= T(1), "pseudo_mask: alpha must lie in [0,1]");
  std::vector<T> out(alpha_gt.data().size());
  for (size_t i = 0; i < out.size(); ++i)
    out[i] = alpha_gt.data()[i] >= static_cast<T>(tau) ? T(1) : T(0);
  return Ten<T>::from(alpha_gt.shape(), std::move(out));
}

// Mean binary cross entropy between the softmax foreground probability of the
// 2-channel mask logits and a binary target of the same spatial extent.
template <class T>
Ten<T> mask_bce(const Ten<T>& mask_logits, const Ten<T>& m_star) {
  require_dims(mask_logits.ndim() == 3 && mask_logits.dim(0) == 2,
               "mask_bce: logits must be [2,H,W]");
  require_dims(m_star.size() == static_cast<int64_t>(mask_logits.dim(1)) * mask_logits.dim(2),
               "mask_bce: target extent must match the logits");
  Ten<T> target = reshape(m_star, {1, mask_logits.dim(1), mask_logits.dim(2)});
  Ten<T> p = clamp(narrow(softmax(mask_logits, 0), 0, kForegroundChannel, 1), T(1e-7),
                   T(1.0 - 1e-7));
  Ten<T> ll = add(mul(target, log(p)), mul(rsub_scalar(T(1), target), log(rsub_scalar(T(1), p))));
  return mul_scalar(mean(ll), T(-1));
}

// Mean absolute difference.
template <class T>
Ten<T> alpha_l1(const Ten<T>& alpha_p, const Ten<T>& alpha_gt) {
  require_dims(alpha_p.shape() == alpha_gt.shape(), "alpha_l1: shapes must match");
  return mean(abs(sub(alpha_p, alpha_gt)));
}

namespace detail {

// 5x5 binomial blur with border renormalization: zero-padded convolution
// divided by the same convolution of an all-ones image, so constants blur to
// themselves everywhere including corners.
template <class T>
Ten<T> binomial_blur(const Ten<T>& x) {
  static const double kTap[5] = {1, 4, 6, 4, 1};
  std::vector<T> kv(25);
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 5; ++j) kv[static_cast<size_t>(i) * 5 + j] =
        static_cast<T>(kTap[i] * kTap[j] / 256.0);
  Ten<T> kernel = Ten<T>::from({1, 1, 5, 5}, std::move(kv));

  const int h = x.dim(1), w = x.dim(2);
  std::vector<T> recip(static_cast<size_t>(h) * w);
  for (int y = 0; y < h; ++y)
    for (int c = 0; c < w; ++c) {
      double acc = 0;
      for (int dy = -2; dy <= 2; ++dy)
        for (int dx = -2; dx <= 2; ++dx)
          if (y + dy >= 0 && y + dy < h && c + dx >= 0 && c + dx < w)
            acc += kTap[dy + 2] * kTap[dx + 2] / 256.0;
      recip[static_cast<size_t>(y) * w + c] = static_cast<T>(1.0 / acc);
    }
  Ten<T> norm = Ten<T>::from({1, h, w}, std::move(recip));
  return mul(conv2d(x, kernel, 1, 2), norm);
}

// Number of pyramid levels for a given extent: every level must keep both
// sides at least 2 px, capped at five levels. A 32 px side yields the full
// five (32, 16, 8, 4, 2); smaller inputs drop top levels instead of failing.
inline int pyramid_levels(int h, int w) {
  int levels = 1;
  while (levels < 5 && ((h + 1) / 2 >= 2 && (w + 1) / 2 >= 2)) {
    h = (h + 1) / 2;
    w = (w + 1) / 2;
    ++levels;
  }
  return levels;
}

}  // namespace detail

// Laplacian pyramid of band-pass levels x - blur(x) plus a low-pass residual
// as the final level. The loss is the weighted sum of per-level mean absolute
// differences with weights 2^(s-1)/5, so a constant offset c lands entirely
// in the residual: 3.2*c for the full five levels.
template <class T>
Ten<T> laplacian_pyramid_loss(const Ten<T>& alpha_p, const Ten<T>& alpha_gt) {
  require_dims(alpha_p.shape() == alpha_gt.shape(), "laplacian: shapes must match");
  require_dims(alpha_p.ndim() == 3 && alpha_p.dim(0) == 1, "laplacian: input must be [1,H,W]");
  const int levels = detail::pyramid_levels(alpha_p.dim(1), alpha_p.dim(2));
  Ten<T> gp = alpha_p, gg = alpha_gt;
  Ten<T> total = Ten<T>::scalar(T(0));
  for (int s = 1; s <= levels; ++s) {
    const T weight = static_cast<T>(std::pow(2.0, s - 1) / 5.0);
    if (s == levels) {
      total = add(total, mul_scalar(mean(abs(sub(gp, gg))), weight));
      break;
    }
    Ten<T> bp = detail::binomial_blur(gp);
    Ten<T> bg = detail::binomial_blur(gg);
    total = add(total, mul_scalar(mean(abs(sub(sub(gp, bp), sub(gg, bg)))), weight));
    gp = subsample2(bp);
    gg = subsample2(bg);
  }
  return total;
}

// Weighted training objective: segmentation BCE on the mask logits plus
// L1 + Laplacian terms on the coarse (1/4) and fine (full) alphas.
template <class T>
Ten<T> total_loss(const DecoderOutputs<T>& outputs, const Ten<T>& alpha_gt_full,
                  const Ten<T>& alpha_gt_quarter, const Ten<T>& m_star_quarter,
                  const LossWeights& w = {}) {
  require(w.w_mask >= 0 && w.w_coarse >= 0 && w.w_fine >= 0,
          "total_loss: weights must be non-negative");
  Ten<T> bce = mask_bce(outputs.mask_logits, m_star_quarter);
  Ten<T> coarse = add(alpha_l1(outputs.alpha_coarse, alpha_gt_quarter),
                      laplacian_pyramid_loss(outputs.alpha_coarse, alpha_gt_quarter));
  Ten<T> fine = add(alpha_l1(outputs.alpha_fine, alpha_gt_full),
                    laplacian_pyramid_loss(outputs.alpha_fine, alpha_gt_full));
  return add(add(mul_scalar(bce, static_cast<T>(w.w_mask)),
                 mul_scalar(coarse, static_cast<T>(w.w_coarse))),
             mul_scalar(fine, static_cast<T>(w.w_fine)));
}

}  // namespace vmatt
