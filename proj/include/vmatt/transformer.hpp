// Copyright (c) 2026 vmatt contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "vmatt/attention.hpp"
#include "vmatt/memory.hpp"
#include "vmatt/modules.hpp"
#include "vmatt/norm.hpp"

namespace vmatt {

// Which attention terms feed the fused update. Memory writes are identical
// in every mode; only the read path changes.
enum class AttentionMode { both, short_only, long_only };

struct TransformerConfig {
  int hidden = 64;
  int heads = 4;
  int layers = 3;
  int mlp_ratio = 4;
  int omega = 7;  // short-term window side; odd
};

template <class T>
struct QKV {
  Ten<T> q, k, v;  // [P,hidden] each
};

// Pre-norm residual block: z += W_O * fuse(long, short); z += MLP(LN(z)).
// The query projection is the frame-shared W_Q applied to the normalised
// running state; keys/values come from the memory bank.
template <class T>
struct TransformerLayer {
  LayerNorm<T> ln1, ln2;
  Linear<T> wo, mlp1, mlp2;

  TransformerLayer() = default;
  TransformerLayer(const TransformerConfig& c, Rng& rng)
      : ln1(c.hidden),
        ln2(c.hidden),
        wo(c.hidden, c.hidden, rng),
        mlp1(c.hidden, c.hidden * c.mlp_ratio, rng),
        mlp2(c.hidden * c.mlp_ratio, c.hidden, rng) {}

  Ten<T> forward(const Ten<T>& z, const Linear<T>& wq, const MemoryBank<T>& bank,
                 const TransformerConfig& cfg, AttentionMode mode, bool read_long) const {
    Ten<T> q = wq.forward(ln1.forward(z));
    const bool want_long = mode != AttentionMode::short_only && read_long;
    const bool want_short = mode != AttentionMode::long_only;
    Ten<T> fused;
    if (want_long && want_short) {
      fused = add(long_term_attention(q, bank, cfg.heads),
                  short_term_attention(q, bank, cfg.omega, cfg.heads,
                                       bank.config().short_capacity));
    } else if (want_long) {
      fused = long_term_attention(q, bank, cfg.heads);
    } else if (want_short) {
      fused = short_term_attention(q, bank, cfg.omega, cfg.heads,
                                   bank.config().short_capacity);
    } else {
      fused = Ten<T>::zeros(z.shape());
    }
    Ten<T> z1 = add(z, wo.forward(fused));
    return add(z1, mlp2.forward(gelu(mlp1.forward(ln2.forward(z1)))));
  }

  void collect(const std::string& prefix, ParamList<T>& out) {
    ln1.collect(prefix + ".ln1", out);
    wo.collect(prefix + ".wo", out);
    ln2.collect(prefix + ".ln2", out);
    mlp1.collect(prefix + ".mlp1", out);
    mlp2.collect(prefix + ".mlp2", out);
  }
};

// Structures the 1/16 features against the memory bank. One shared Q/K/V
// projection per frame produces the memory writes; the stacked layers refine
// the frame state with fused long/short reads. E_f and E_b are the
// foreground/background value embeddings, shared by all layers.
template <class T>
struct FgBgTransformer {
  TransformerConfig cfg;
  Linear<T> wq, wk, wv;
  Ten<T> e_f, e_b;
  std::vector<TransformerLayer<T>> layers;

  FgBgTransformer() = default;
  FgBgTransformer(const TransformerConfig& c, Rng& rng)
      : cfg(c),
        wq(c.hidden, c.hidden, rng),
        wk(c.hidden, c.hidden, rng),
        wv(c.hidden, c.hidden, rng),
        // The class embeddings start at feature scale. A timid init leaves
        // the stored labels invisible next to the content features, and with
        // per-frame shortcuts available the optimizer never grows them.
        e_f(Ten<T>::rand_normal({c.hidden}, rng, T(0), T(0.25))),
        e_b(Ten<T>::rand_normal({c.hidden}, rng, T(0), T(0.25))) {
    require(c.hidden % c.heads == 0, "transformer: heads must divide hidden width");
    layers.reserve(static_cast<size_t>(c.layers));
    for (int i = 0; i < c.layers; ++i) layers.emplace_back(c, rng);
  }

  // Per-frame projections of the reduced features z:[P,hidden].
  QKV<T> project_qkv(const Ten<T>& z) const {
    require_dims(z.ndim() == 2 && z.dim(1) == cfg.hidden, "transformer: z must be [P,hidden]");
    return {wq.forward(z), wk.forward(z), wv.forward(z)};
  }

  // Mix the fg/bg embeddings into the values, weighted by the mask guidance.
  Ten<T> embed_values(const Ten<T>& v, const Ten<T>& mask_d) const {
    return embed_fgbg(v, mask_d, e_f, e_b);
  }

  Ten<T> forward(const Ten<T>& z, const MemoryBank<T>& bank, AttentionMode mode,
                 bool read_long) const {
    Ten<T> cur = z;
    for (const auto& layer : layers) cur = layer.forward(cur, wq, bank, cfg, mode, read_long);
    return cur;
  }

  void collect(const std::string& prefix, ParamList<T>& out) {
    wq.collect(prefix + ".wq", out);
    wk.collect(prefix + ".wk", out);
    wv.collect(prefix + ".wv", out);
    out.push_back({prefix + ".e_f", &e_f, true});
    out.push_back({prefix + ".e_b", &e_b, true});
    for (size_t i = 0; i < layers.size(); ++i)
      layers[i].collect(prefix + ".layer" + std::to_string(i + 1), out);
  }
};

}  // namespace vmatt
