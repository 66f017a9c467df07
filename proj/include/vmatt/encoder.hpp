// Copyright (c) 2026 vmatt contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <string>

#include "vmatt/modules.hpp"
#include "vmatt/tensor.hpp"

namespace vmatt {

struct EncoderConfig {
  std::array<int, 4> channels{16, 24, 32, 96};
  int hidden = 64;
};

// Multi-scale features of one RGB frame at 1/2, 1/4, 1/8 and 1/16 of the
// input resolution. f_sixteenth carries the stage-4 channel width; the
// transformer consumes it only after reduce_channels.
template <class T>
struct FramePyramid {
  Ten<T> f_half, f_quarter, f_eighth, f_sixteenth;
};

// One downsampling stage: strided 3x3 conv entry, then a stride-1 3x3 conv,
// each followed by batch norm and ReLU. The final stage keeps its stride-2
// entry but dilates the second conv instead of shrinking further.
template <class T>
struct EncoderStage {
  Conv2d<T> conv_a, conv_b;
  BatchNorm2d<T> bn_a, bn_b;

  EncoderStage() = default;
  EncoderStage(int ci, int co, int dil_b, Rng& rng)
      : conv_a(ci, co, 3, 2, 1, 1, rng),
        conv_b(co, co, 3, 1, dil_b, dil_b, rng),
        bn_a(co),
        bn_b(co) {}

  Ten<T> forward(const Ten<T>& x, bool training) {
    Ten<T> y = relu(bn_a.forward(conv_a.forward(x), training));
    return relu(bn_b.forward(conv_b.forward(y), training));
  }

  void collect(const std::string& prefix, ParamList<T>& out) {
    conv_a.collect(prefix + ".conv_a", out);
    bn_a.collect(prefix + ".bn_a", out);
    conv_b.collect(prefix + ".conv_b", out);
    bn_b.collect(prefix + ".bn_b", out);
  }
};

template <class T>
struct Encoder {
  EncoderConfig cfg;
  std::array<EncoderStage<T>, 4> stages;
  Conv2d<T> reduce;  // 1x1 projection of the 1/16 features to the hidden width

  Encoder() = default;
  Encoder(const EncoderConfig& c, Rng& rng) : cfg(c) {
    int ci = 3;
    for (int s = 0; s < 4; ++s) {
      stages[static_cast<size_t>(s)] = EncoderStage<T>(ci, c.channels[static_cast<size_t>(s)],
                                                       s == 3 ? 2 : 1, rng);
      ci = c.channels[static_cast<size_t>(s)];
    }
    reduce = Conv2d<T>(c.channels[3], c.hidden, 1, 1, 0, 1, rng);
  }

  FramePyramid<T> extract_features(const Ten<T>& frame, bool training) {
    require_dims(frame.ndim() == 3 && frame.dim(0) == 3, "encoder: frame must be [3,H,W]");
    require_dims(frame.dim(1) % 16 == 0 && frame.dim(2) % 16 == 0 && frame.dim(1) >= 16 &&
                     frame.dim(2) >= 16,
                 "encoder: frame sides must be positive multiples of 16");
    FramePyramid<T> p;
    p.f_half = stages[0].forward(frame, training);
    p.f_quarter = stages[1].forward(p.f_half, training);
    p.f_eighth = stages[2].forward(p.f_quarter, training);
    p.f_sixteenth = stages[3].forward(p.f_eighth, training);
    return p;
  }

  Ten<T> reduce_channels(const Ten<T>& f_sixteenth) { return reduce.forward(f_sixteenth); }

  void collect(const std::string& prefix, ParamList<T>& out) {
    for (int s = 0; s < 4; ++s)
      stages[static_cast<size_t>(s)].collect(prefix + ".stage" + std::to_string(s + 1), out);
    reduce.collect(prefix + ".reduce", out);
  }
};

}  // namespace vmatt
