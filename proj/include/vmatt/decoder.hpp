// Copyright (c) 2026 vmatt contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <string>
#include <vector>

#include "vmatt/encoder.hpp"
#include "vmatt/modules.hpp"

namespace vmatt {

// Channel of the mask logits that carries "foreground". The BCE loss and the
// mask-to-guidance path must agree on this.
inline constexpr int kForegroundChannel = 1;

struct DecoderConfig {
  // Output widths of the four upscaling blocks (at 1/16, 1/8, 1/4, 1/2).
  std::array<int, 4> channels{64, 32, 32, 16};
};

template <class T>
struct DecoderOutputs {
  Ten<T> mask_logits;   // [2, H/4, W/4], raw scores
  Ten<T> alpha_coarse;  // [1, H/4, W/4], sigmoid
  Ten<T> alpha_fine;    // [1, H, W], sigmoid
};

// concat inputs -> 3x3 conv + BN + ReLU -> 3x3 conv -> bilinear 2x up.
template <class T>
struct UpscaleBlock {
  Conv2d<T> conv1, conv2;
  BatchNorm2d<T> bn;

  UpscaleBlock() = default;
  UpscaleBlock(int ci, int co, Rng& rng)
      : conv1(ci, co, 3, 1, 1, 1, rng), conv2(co, co, 3, 1, 1, 1, rng), bn(co) {}

  Ten<T> forward(const Ten<T>& x, bool training) {
    Ten<T> y = conv2.forward(relu(bn.forward(conv1.forward(x), training)));
    return bilinear_resize(y, 2 * y.dim(1), 2 * y.dim(2));
  }

  void collect(const std::string& prefix, ParamList<T>& out) {
    conv1.collect(prefix + ".conv1", out);
    bn.collect(prefix + ".bn", out);
    conv2.collect(prefix + ".conv2", out);
  }
};

// Feature-pyramid decoder: four upscaling blocks with encoder skips at 1/8,
// 1/4 and 1/2; a coarse output block at 1/4 (2-channel mask logits plus
// sigmoid coarse alpha, the latter re-injected into the next block), and a
// fine output block at full resolution.
template <class T>
struct Decoder {
  DecoderConfig cfg;
  UpscaleBlock<T> b1, b2, b3, b4;
  Conv2d<T> mask_head, coarse_head, fine1, fine2;
  BatchNorm2d<T> fine_bn;

  Decoder() = default;
  Decoder(const DecoderConfig& c, const EncoderConfig& enc, Rng& rng) : cfg(c) {
    b1 = UpscaleBlock<T>(enc.hidden, c.channels[0], rng);
    b2 = UpscaleBlock<T>(c.channels[0] + enc.channels[2], c.channels[1], rng);
    mask_head = Conv2d<T>(c.channels[1], 2, 3, 1, 1, 1, rng);
    coarse_head = Conv2d<T>(c.channels[1], 1, 3, 1, 1, 1, rng);
    b3 = UpscaleBlock<T>(c.channels[1] + enc.channels[1] + 1, c.channels[2], rng);
    b4 = UpscaleBlock<T>(c.channels[2] + enc.channels[0], c.channels[3], rng);
    fine1 = Conv2d<T>(c.channels[3], c.channels[3], 3, 1, 1, 1, rng);
    fine_bn = BatchNorm2d<T>(c.channels[3]);
    fine2 = Conv2d<T>(c.channels[3], 1, 3, 1, 1, 1, rng);
  }

  DecoderOutputs<T> forward(const Ten<T>& z_sixteenth, const FramePyramid<T>& pyr,
                            bool training) {
    Ten<T> x1 = b1.forward(z_sixteenth, training);
    Ten<T> x2 = b2.forward(concat<T>({x1, pyr.f_eighth}, 0), training);
    DecoderOutputs<T> out;
    out.mask_logits = mask_head.forward(x2);
    out.alpha_coarse = sigmoid(coarse_head.forward(x2));
    Ten<T> x3 = b3.forward(concat<T>({x2, pyr.f_quarter, out.alpha_coarse}, 0), training);
    Ten<T> x4 = b4.forward(concat<T>({x3, pyr.f_half}, 0), training);
    out.alpha_fine = sigmoid(fine2.forward(relu(fine_bn.forward(fine1.forward(x4), training))));
    return out;
  }

  void collect(const std::string& prefix, ParamList<T>& out) {
    b1.collect(prefix + ".b1", out);
    b2.collect(prefix + ".b2", out);
    mask_head.collect(prefix + ".mask_head", out);
    coarse_head.collect(prefix + ".coarse_head", out);
    b3.collect(prefix + ".b3", out);
    b4.collect(prefix + ".b4", out);
    fine1.collect(prefix + ".fine1", out);
    fine_bn.collect(prefix + ".fine_bn", out);
    fine2.collect(prefix + ".fine2", out);
  }
};

// Foreground probability of the decoded mask pooled to the 1/16 grid, the
// signal that drives the fg/bg value embedding.
template <class T>
Ten<T> mask_to_guidance(const Ten<T>& mask_logits) {
  require_dims(mask_logits.ndim() == 3 && mask_logits.dim(0) == 2,
               "guidance: mask logits must be [2,H/4,W/4]");
  Ten<T> fg = narrow(softmax(mask_logits, 0), 0, kForegroundChannel, 1);
  return avg_pool(fg, 4);
}

}  // namespace vmatt
