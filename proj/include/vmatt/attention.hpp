// Copyright (c) 2026 vmatt contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <vector>

#include "vmatt/memory.hpp"
#include "vmatt/ops.hpp"
#include "vmatt/tensor.hpp"

namespace vmatt {

namespace detail {

// Additive mask value that underflows to exactly zero weight after softmax
// while keeping every intermediate finite.
inline constexpr double kMaskedOut = -1e30;

}  // namespace detail

// Scaled dot-product attention with heads split along the feature axis.
// q:[P,D], k/v:[N,D]; optional additive mask [P,N] shared by all heads.
// Scaling uses the per-head width.
template <class T>
Ten<T> multihead_attention(const Ten<T>& q, const Ten<T>& k, const Ten<T>& v, int heads,
                           const Ten<T>* mask = nullptr) {
  require_dims(q.ndim() == 2 && k.ndim() == 2 && v.ndim() == 2, "attention: rank-2 inputs required");
  const int d = q.dim(1);
  require_dims(k.dim(1) == d && v.dim(1) == d && k.dim(0) == v.dim(0),
               "attention: key/value dims disagree with query");
  require(heads >= 1 && d % heads == 0, "attention: heads must divide the feature width");
  if (mask)
    require_dims(mask->ndim() == 2 && mask->dim(0) == q.dim(0) && mask->dim(1) == k.dim(0),
                 "attention: mask must be [P,N]");

  const int dh = d / heads;
  const T scale = static_cast<T>(1.0 / std::sqrt(static_cast<double>(dh)));
  std::vector<Ten<T>> outs;
  outs.reserve(static_cast<size_t>(heads));
  for (int h = 0; h < heads; ++h) {
    Ten<T> qh = narrow(q, 1, h * dh, dh);
    Ten<T> kh = narrow(k, 1, h * dh, dh);
    Ten<T> vh = narrow(v, 1, h * dh, dh);
    Ten<T> scores = mul_scalar(matmul(qh, transpose2d(kh)), scale);
    if (mask) scores = add(scores, *mask);
    outs.push_back(matmul(softmax(scores, 1), vh));
  }
  return heads == 1 ? outs[0] : concat(outs, 1);
}

// Window mask for tube attention: query position p may attend to position n
// of any of the `frames` stored maps iff both Chebyshev offsets are at most
// (omega-1)/2. Out-of-range cells are excluded, not zero-padded: they simply
// receive no weight.
template <class T>
Ten<T> tube_mask(int grid_h, int grid_w, int frames, int omega) {
  require(omega >= 1 && omega % 2 == 1, "attention: omega must be odd and positive");
  const int p = grid_h * grid_w;
  const int r = (omega - 1) / 2;
  std::vector<T> m(static_cast<size_t>(p) * p * frames, static_cast<T>(detail::kMaskedOut));
  for (int qy = 0; qy < grid_h; ++qy)
    for (int qx = 0; qx < grid_w; ++qx) {
      const int qi = qy * grid_w + qx;
      for (int ny = std::max(0, qy - r); ny <= std::min(grid_h - 1, qy + r); ++ny)
        for (int nx = std::max(0, qx - r); nx <= std::min(grid_w - 1, qx + r); ++nx) {
          const int ni = ny * grid_w + nx;
          for (int f = 0; f < frames; ++f)
            m[(static_cast<size_t>(qi) * frames + f) * p + ni] = T(0);
        }
    }
  return Ten<T>::from({p, frames * p}, std::move(m));
}

namespace detail {

template <class T>
inline std::pair<Ten<T>, Ten<T>> concat_entries(const std::deque<MemoryEntry<T>>& entries,
                                                size_t first, size_t count) {
  std::vector<Ten<T>> ks, vs;
  ks.reserve(count);
  vs.reserve(count);
  for (size_t i = first; i < first + count; ++i) {
    ks.push_back(entries[i].k);
    vs.push_back(entries[i].v);
  }
  if (count == 1) return {ks[0], vs[0]};
  return {concat(ks, 0), concat(vs, 0)};
}

}  // namespace detail

// Global read over everything in the long-term compartment.
template <class T>
Ten<T> long_term_attention(const Ten<T>& q, const MemoryBank<T>& bank, int heads) {
  if (bank.long_entries().empty())
    throw StateError("attention: long-term read from an empty bank");
  require_dims(q.ndim() == 2 && q.dim(0) == bank.positions(),
               "attention: query grid does not match the bank");
  auto [k, v] = detail::concat_entries(bank.long_entries(), 0, bank.long_entries().size());
  return multihead_attention(q, k, v, heads);
}

// Local read over the newest `short_window` entries, restricted to an
// omega x omega spatial window around each query position.
template <class T>
Ten<T> short_term_attention(const Ten<T>& q, const MemoryBank<T>& bank, int omega, int heads,
                            int short_window) {
  const auto& entries = bank.short_entries();
  if (entries.empty()) throw StateError("attention: short-term read from an empty bank");
  require_dims(q.ndim() == 2 && q.dim(0) == bank.positions(),
               "attention: query grid does not match the bank");
  require(short_window >= 1, "attention: short window must be positive");
  const size_t use = std::min(static_cast<size_t>(short_window), entries.size());
  auto [k, v] = detail::concat_entries(entries, entries.size() - use, use);
  Ten<T> mask = tube_mask<T>(bank.grid_h(), bank.grid_w(), static_cast<int>(use), omega);
  return multihead_attention(q, k, v, heads, &mask);
}

}  // namespace vmatt
