// Copyright (c) 2026 vmatt contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>

#include "vmatt/decoder.hpp"
#include "vmatt/encoder.hpp"
#include "vmatt/memory.hpp"
#include "vmatt/transformer.hpp"

namespace vmatt {

struct ModelConfig {
  EncoderConfig enc;
  TransformerConfig tf;
  DecoderConfig dec;
  MemoryConfig mem;
  uint64_t init_seed = 1234;
};

// [C,H,W] -> position-major [H*W, C] and back; the transformer and the
// memory bank work in the flattened layout.
template <class T>
Ten<T> flatten_hw(const Ten<T>& x) {
  require_dims(x.ndim() == 3, "flatten_hw: input must be [C,H,W]");
  return transpose2d(reshape(x, {x.dim(0), x.dim(1) * x.dim(2)}));
}

template <class T>
Ten<T> unflatten_hw(const Ten<T>& x, int h, int w) {
  require_dims(x.ndim() == 2 && x.dim(0) == h * w, "unflatten_hw: input must be [H*W, C]");
  return reshape(transpose2d(x), {x.dim(1), h, w});
}

// The full matting network. Frame-to-frame state (the memory bank) lives in
// Session, not here; the model itself is a pure function of its parameters.
template <class T>
struct MattingModel {
  ModelConfig cfg;
  Encoder<T> encoder;
  FgBgTransformer<T> transformer;
  Decoder<T> decoder;
  bool training = false;

  MattingModel() = default;
  explicit MattingModel(const ModelConfig& c) : cfg(c) {
    Rng rng(c.init_seed);
    encoder = Encoder<T>(c.enc, rng);
    transformer = FgBgTransformer<T>(c.tf, rng);
    decoder = Decoder<T>(c.dec, c.enc, rng);
    require(c.enc.hidden == c.tf.hidden, "model: encoder and transformer widths must agree");
    ParamList<T> params = this->params();
    mark_trainable(params);
  }

  ParamList<T> params() {
    ParamList<T> out;
    encoder.collect("encoder", out);
    transformer.collect("transformer", out);
    decoder.collect("decoder", out);
    return out;
  }

  int64_t trainable_count() {
    int64_t n = 0;
    for (const auto& e : params())
      if (e.trainable) n += e.tensor->size();
    return n;
  }
};

}  // namespace vmatt
