// Copyright (c) 2026 vmatt contributors
// SPDX-License-Identifier: Apache-2.0
#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "support/gradcheck.hpp"
#include "support/oracles.hpp"
#include "vmatt/attention.hpp"
#include "vmatt/memory.hpp"
#include "vmatt/transformer.hpp"

using namespace vmatt;
using Catch::Approx;

namespace {

Ten<double> rand_ten(Shape shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
  return Ten<double>::rand_uniform(std::move(shape), rng, lo, hi);
}

Ten<double> project(const Ten<double>& y, uint64_t seed) {
  Rng rng(seed);
  Ten<double> r = Ten<double>::rand_uniform(y.shape(), rng, -1.0, 1.0);
  return sum(mul(y, r));
}

std::vector<double> vec(const Ten<double>& t) { return t.data(); }

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  REQUIRE(a.size() == b.size());
  double m = 0;
  for (size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

MemoryConfig small_mem(int stride, int long_cap, int short_cap,
                       LongTermPolicy policy = LongTermPolicy::sparse_write) {
  MemoryConfig cfg;
  cfg.write_stride = stride;
  cfg.long_capacity = long_cap;
  cfg.short_capacity = short_cap;
  cfg.policy = policy;
  return cfg;
}

}  // namespace

TEST_CASE("dense attention matches a scalar reference", "[attention]") {
  Rng rng(901);
  const int p = 6, n = 5, d = 8;
  auto always = [](int, int) { return true; };
  for (int heads : {1, 2, 4}) {
    for (int trial = 0; trial < 25; ++trial) {
      auto q = rand_ten({p, d}, rng);
      auto k = rand_ten({n, d}, rng);
      auto v = rand_ten({n, d}, rng);
      auto out = multihead_attention(q, k, v, heads);
      auto ref = oracles::attention(vec(q), vec(k), vec(v), p, n, d, heads, always);
      REQUIRE(out.shape() == Shape{p, d});
      CHECK(max_abs_diff(vec(out), ref) < 1e-12);
    }
  }
}

TEST_CASE("masked attention excludes keys exactly", "[attention]") {
  Rng rng(902);
  const int p = 4, n = 6, d = 8, heads = 2;
  auto valid = [](int qi, int ni) { return (qi + ni) % 3 != 0; };
  std::vector<double> mvals(static_cast<size_t>(p) * n, 0.0);
  for (int qi = 0; qi < p; ++qi)
    for (int ni = 0; ni < n; ++ni)
      if (!valid(qi, ni)) mvals[static_cast<size_t>(qi) * n + ni] = detail::kMaskedOut;
  auto mask = Ten<double>::from({p, n}, std::move(mvals));

  for (int trial = 0; trial < 25; ++trial) {
    auto q = rand_ten({p, d}, rng);
    auto k = rand_ten({n, d}, rng);
    auto v = rand_ten({n, d}, rng);
    // Plant huge values on excluded rows: any leakage would dominate the output.
    auto& vd = v.mutable_data();
    for (int ni = 0; ni < n; ++ni)
      if (!valid(0, ni) && !valid(1, ni))
        for (int j = 0; j < d; ++j) vd[static_cast<size_t>(ni) * d + j] = 1e6;
    auto out = multihead_attention(q, k, v, heads, &mask);
    auto ref = oracles::attention(vec(q), vec(k), vec(v), p, n, d, heads, valid);
    CHECK(max_abs_diff(vec(out), ref) < 1e-9);
  }
}

TEST_CASE("attention validates geometry", "[attention]") {
  auto q = Ten<float>::zeros({4, 8});
  auto k = Ten<float>::zeros({3, 8});
  auto v3 = Ten<float>::zeros({3, 8});
  CHECK_THROWS_AS(multihead_attention(q, k, Ten<float>::zeros({2, 8}), 2), DimensionError);
  CHECK_THROWS_AS(multihead_attention(q, k, v3, 3), ContractError);
  auto bad_mask = Ten<float>::zeros({4, 2});
  CHECK_THROWS_AS(multihead_attention(q, k, v3, 2, &bad_mask), DimensionError);
}

TEST_CASE("tube mask admits exactly the spatial window", "[attention]") {
  const int gh = 4, gw = 4, frames = 2, omega = 3;
  const int p = gh * gw, r = (omega - 1) / 2;
  auto mask = tube_mask<float>(gh, gw, frames, omega);
  REQUIRE(mask.shape() == Shape{p, frames * p});
  for (int qy = 0; qy < gh; ++qy)
    for (int qx = 0; qx < gw; ++qx)
      for (int f = 0; f < frames; ++f)
        for (int ny = 0; ny < gh; ++ny)
          for (int nx = 0; nx < gw; ++nx) {
            const float got = mask.at({qy * gw + qx, f * p + ny * gw + nx});
            const bool inside = std::abs(qy - ny) <= r && std::abs(qx - nx) <= r;
            if (inside)
              CHECK(got == 0.0f);
            else
              CHECK(got == static_cast<float>(detail::kMaskedOut));
          }
  // Corner queries keep a 2x2 window per frame, interior queries 3x3.
  int corner_open = 0, center_open = 0;
  for (int c = 0; c < frames * p; ++c) {
    corner_open += mask.at({0, c}) == 0.0f ? 1 : 0;
    center_open += mask.at({1 * gw + 1, c}) == 0.0f ? 1 : 0;
  }
  CHECK(corner_open == 4 * frames);
  CHECK(center_open == 9 * frames);
  CHECK_THROWS_AS(tube_mask<float>(4, 4, 1, 4), ContractError);
}

TEST_CASE("short-term read matches a per-query windowed reference", "[attention][memory]") {
  Rng rng(903);
  const int gh = 4, gw = 3, p = gh * gw, d = 8, heads = 2, omega = 3, frames = 3;
  const int r = (omega - 1) / 2;
  MemoryBank<double> bank(small_mem(1, 8, frames), gh, gw);
  std::vector<Ten<double>> ks, vs;
  for (int f = 0; f < frames; ++f) {
    ks.push_back(rand_ten({p, d}, rng));
    vs.push_back(rand_ten({p, d}, rng));
    bank.write(ks.back(), vs.back(), f);
  }
  std::vector<double> kcat, vcat;
  for (int f = 0; f < frames; ++f) {
    kcat.insert(kcat.end(), ks[static_cast<size_t>(f)].data().begin(),
                ks[static_cast<size_t>(f)].data().end());
    vcat.insert(vcat.end(), vs[static_cast<size_t>(f)].data().begin(),
                vs[static_cast<size_t>(f)].data().end());
  }
  auto valid = [&](int qi, int col) {
    const int ni = col % p;
    const int qy = qi / gw, qx = qi % gw, ny = ni / gw, nx = ni % gw;
    return std::abs(qy - ny) <= r && std::abs(qx - nx) <= r;
  };
  for (int trial = 0; trial < 20; ++trial) {
    auto q = rand_ten({p, d}, rng);
    auto out = short_term_attention(q, bank, omega, heads, frames);
    auto ref = oracles::attention(vec(q), kcat, vcat, p, frames * p, d, heads, valid);
    CHECK(max_abs_diff(vec(out), ref) < 1e-12);
  }
}

TEST_CASE("short-term window wider than the grid behaves like dense attention", "[attention][memory]") {
  Rng rng(904);
  const int gh = 3, gw = 3, p = gh * gw, d = 8;
  MemoryBank<double> bank(small_mem(10, 10, 1), gh, gw);
  bank.write(rand_ten({p, d}, rng), rand_ten({p, d}, rng), 0);
  auto q = rand_ten({p, d}, rng);
  // One write lands in both compartments, and omega = 5 covers a 3x3 grid, so
  // the masked short read and the dense long read see identical inputs.
  auto long_out = long_term_attention(q, bank, 2);
  auto short_out = short_term_attention(q, bank, 5, 2, 1);
  CHECK(max_abs_diff(vec(long_out), vec(short_out)) < 1e-12);
}

TEST_CASE("long-term read concatenates every stored frame", "[attention][memory]") {
  Rng rng(905);
  const int gh = 2, gw = 3, p = gh * gw, d = 8, heads = 2, frames = 4;
  MemoryBank<double> bank(small_mem(1, 8, 1), gh, gw);
  std::vector<double> kcat, vcat;
  for (int f = 0; f < frames; ++f) {
    auto k = rand_ten({p, d}, rng);
    auto v = rand_ten({p, d}, rng);
    kcat.insert(kcat.end(), k.data().begin(), k.data().end());
    vcat.insert(vcat.end(), v.data().begin(), v.data().end());
    bank.write(k, v, f);
  }
  auto always = [](int, int) { return true; };
  auto q = rand_ten({p, d}, rng);
  auto out = long_term_attention(q, bank, heads);
  auto ref = oracles::attention(vec(q), kcat, vcat, p, frames * p, d, heads, always);
  CHECK(max_abs_diff(vec(out), ref) < 1e-12);

  MemoryBank<double> empty(small_mem(10, 10, 1), gh, gw);
  CHECK_THROWS_AS(long_term_attention(q, empty, heads), StateError);
  CHECK_THROWS_AS(short_term_attention(q, empty, 3, heads, 1), StateError);
}

TEST_CASE("attention gradients match finite differences", "[attention][grad]") {
  Rng rng(906);
  const int p = 4, n = 4, d = 8, heads = 2;
  auto q = rand_ten({p, d}, rng);
  auto k = rand_ten({n, d}, rng);
  auto v = rand_ten({n, d}, rng);

  SECTION("dense") {
    auto res = gradcheck::run({&q, &k, &v}, [&] {
      return project(multihead_attention(q, k, v, heads), 31);
    });
    INFO(res.worst_where);
    CHECK(res.max_err < 1e-4);
  }
  SECTION("masked") {
    auto mask = tube_mask<double>(2, 2, 2, 3);
    auto k2 = rand_ten({2 * p, d}, rng);
    auto v2 = rand_ten({2 * p, d}, rng);
    auto res = gradcheck::run({&q, &k2, &v2}, [&] {
      return project(multihead_attention(q, k2, v2, heads, &mask), 32);
    });
    INFO(res.worst_where);
    CHECK(res.max_err < 1e-4);
  }
  SECTION("through the memory bank") {
    MemoryBank<double> bank(small_mem(1, 4, 2), 2, 2);
    auto k3 = rand_ten({p, d}, rng);
    auto v3 = rand_ten({p, d}, rng);
    bank.write(k3, v3, 0);
    auto res = gradcheck::run({&q, &k3, &v3}, [&] {
      return project(add(long_term_attention(q, bank, heads),
                         short_term_attention(q, bank, 3, heads, 2)),
                     33);
    });
    INFO(res.worst_where);
    CHECK(res.max_err < 1e-4);
  }
}

TEST_CASE("sparse write keeps every tenth frame", "[memory]") {
  MemoryBank<float> bank(small_mem(10, 10, 1), 2, 2);
  for (int f = 0; f < 25; ++f)
    bank.write(Ten<float>::full({4, 8}, static_cast<float>(f)), Ten<float>::full({4, 8}, 0.0f), f);
  CHECK(bank.long_frames() == std::vector<int>{0, 10, 20});
  REQUIRE(bank.short_entries().size() == 1);
  CHECK(bank.short_entries().back().frame_index == 24);
  CHECK(bank.write_count() == 25);
}

TEST_CASE("long capacity evicts the oldest entries first", "[memory]") {
  MemoryBank<float> bank(small_mem(10, 10, 1), 2, 2);
  for (int f = 0; f < 200; ++f)
    bank.write(Ten<float>::zeros({4, 8}), Ten<float>::zeros({4, 8}), f);
  CHECK(bank.long_frames() ==
        std::vector<int>{100, 110, 120, 130, 140, 150, 160, 170, 180, 190});
}

TEST_CASE("replace_newest overwrites in place without advancing the counter", "[memory]") {
  MemoryBank<float> bank(small_mem(10, 10, 1), 2, 2);
  bank.write(Ten<float>::full({4, 8}, 1.0f), Ten<float>::full({4, 8}, 1.0f), 0);
  bank.replace_newest(Ten<float>::full({4, 8}, 2.0f), Ten<float>::full({4, 8}, 2.0f), 0);
  CHECK(bank.write_count() == 1);
  REQUIRE(bank.long_frames() == std::vector<int>{0});
  CHECK(bank.long_entries().front().k.at({0, 0}) == 2.0f);
  CHECK(bank.short_entries().front().k.at({0, 0}) == 2.0f);

  // The init-then-replace convention at frame zero keeps later eviction
  // arithmetic aligned with plain zero-based writes.
  for (int f = 1; f < 200; ++f)
    bank.write(Ten<float>::zeros({4, 8}), Ten<float>::zeros({4, 8}), f);
  CHECK(bank.long_frames() ==
        std::vector<int>{100, 110, 120, 130, 140, 150, 160, 170, 180, 190});

  MemoryBank<float> empty(small_mem(10, 10, 1), 2, 2);
  CHECK_THROWS_AS(empty.replace_newest(Ten<float>::zeros({4, 8}), Ten<float>::zeros({4, 8}), 0),
                  StateError);
}

TEST_CASE("replace_newest leaves the long compartment alone off-stride", "[memory]") {
  MemoryBank<float> bank(small_mem(10, 10, 1), 2, 2);
  for (int f = 0; f < 5; ++f)
    bank.write(Ten<float>::full({4, 8}, static_cast<float>(f)), Ten<float>::zeros({4, 8}), f);
  bank.replace_newest(Ten<float>::full({4, 8}, 99.0f), Ten<float>::zeros({4, 8}), 4);
  CHECK(bank.long_entries().back().k.at({0, 0}) == 0.0f);
  CHECK(bank.short_entries().back().k.at({0, 0}) == 99.0f);
}

TEST_CASE("sparse read policy stores every frame and gates the reads", "[memory]") {
  MemoryBank<float> bank(small_mem(5, 10, 1, LongTermPolicy::sparse_read), 2, 2);
  for (int f = 0; f < 15; ++f)
    bank.write(Ten<float>::zeros({4, 8}), Ten<float>::zeros({4, 8}), f);
  CHECK(bank.long_frames() == std::vector<int>{5, 6, 7, 8, 9, 10, 11, 12, 13, 14});
  CHECK(bank.read_long(10));
  CHECK_FALSE(bank.read_long(7));

  MemoryBank<float> dflt(small_mem(5, 10, 1), 2, 2);
  CHECK(dflt.read_long(7));
}

TEST_CASE("memory bank validates entry geometry", "[memory]") {
  MemoryBank<float> bank(small_mem(10, 10, 1), 2, 2);
  CHECK_THROWS_AS(bank.write(Ten<float>::zeros({5, 8}), Ten<float>::zeros({5, 8}), 0),
                  DimensionError);
  bank.write(Ten<float>::zeros({4, 8}), Ten<float>::zeros({4, 8}), 0);
  CHECK_THROWS_AS(bank.write(Ten<float>::zeros({4, 6}), Ten<float>::zeros({4, 6}), 1),
                  DimensionError);
}

TEST_CASE("detach_all severs stored tensors from the tape", "[memory]") {
  MemoryBank<float> bank(small_mem(1, 4, 2), 2, 2);
  auto k = Ten<float>::zeros({4, 8}).set_requires_grad(true);
  auto v = Ten<float>::zeros({4, 8}).set_requires_grad(true);
  bank.write(k, v, 0);
  CHECK(bank.long_entries().front().k.tracked());
  bank.detach_all();
  CHECK_FALSE(bank.long_entries().front().k.tracked());
  CHECK_FALSE(bank.short_entries().front().v.tracked());
}

TEST_CASE("value embedding is affine in the mask", "[transformer]") {
  Rng rng(907);
  TransformerConfig cfg;
  cfg.hidden = 8;
  cfg.heads = 2;
  cfg.layers = 1;
  FgBgTransformer<double> tf(cfg, rng);
  const int p = 5;
  auto v = rand_ten({p, cfg.hidden}, rng);
  auto m1 = rand_ten({p}, rng, 0.0, 1.0);
  auto m2 = rand_ten({p}, rng, 0.0, 1.0);
  const double lam = 0.3;

  auto mixed_mask = add(mul_scalar(m1, lam), mul_scalar(m2, 1.0 - lam));
  auto blend_of_embeds = add(mul_scalar(tf.embed_values(v, m1), lam),
                             mul_scalar(tf.embed_values(v, m2), 1.0 - lam));
  CHECK(max_abs_diff(vec(tf.embed_values(v, mixed_mask)), vec(blend_of_embeds)) < 1e-12);

  auto fg = tf.embed_values(v, Ten<double>::full({p}, 1.0));
  auto bg = tf.embed_values(v, Ten<double>::full({p}, 0.0));
  for (int i = 0; i < p; ++i)
    for (int j = 0; j < cfg.hidden; ++j) {
      CHECK(fg.at({i, j}) == v.at({i, j}) + tf.e_f.at({j}));
      CHECK(bg.at({i, j}) == v.at({i, j}) + tf.e_b.at({j}));
    }

  CHECK_THROWS_AS(tf.embed_values(v, Ten<double>::full({p}, 1.5)), ContractError);
  CHECK_THROWS_AS(tf.embed_values(v, Ten<double>::full({p}, -0.1)), ContractError);
}

TEST_CASE("transformer layer with zero output projections is the identity", "[transformer]") {
  Rng rng(908);
  TransformerConfig cfg;
  cfg.hidden = 8;
  cfg.heads = 2;
  cfg.layers = 1;
  cfg.omega = 3;
  TransformerLayer<double> layer(cfg, rng);
  Linear<double> wq(cfg.hidden, cfg.hidden, rng);
  std::fill(layer.wo.w.mutable_data().begin(), layer.wo.w.mutable_data().end(), 0.0);
  std::fill(layer.mlp2.w.mutable_data().begin(), layer.mlp2.w.mutable_data().end(), 0.0);

  MemoryBank<double> bank(small_mem(10, 10, 1), 2, 2);
  bank.write(rand_ten({4, cfg.hidden}, rng), rand_ten({4, cfg.hidden}, rng), 0);
  auto z = rand_ten({4, cfg.hidden}, rng);
  auto out = layer.forward(z, wq, bank, cfg, AttentionMode::both, true);
  CHECK(vec(out) == vec(z));
}

TEST_CASE("transformer layer matches a scalar reference", "[transformer]") {
  Rng rng(909);
  TransformerConfig cfg;
  cfg.hidden = 4;
  cfg.heads = 1;
  cfg.layers = 1;
  cfg.mlp_ratio = 2;
  cfg.omega = 3;
  const int gh = 2, gw = 2, p = gh * gw, d = cfg.hidden;
  TransformerLayer<double> layer(cfg, rng);
  Linear<double> wq(d, d, rng);
  MemoryBank<double> bank(small_mem(10, 10, 1), gh, gw);
  auto k = rand_ten({p, d}, rng);
  auto v = rand_ten({p, d}, rng);
  bank.write(k, v, 0);
  auto z = rand_ten({p, d}, rng);
  auto out = layer.forward(z, wq, bank, cfg, AttentionMode::both, true);

  // omega = 3 covers the whole 2x2 grid, so both reads are dense over the one
  // stored frame and the fused read is twice either one.
  auto always = [](int, int) { return true; };
  auto zn = oracles::layer_norm(vec(z), vec(layer.ln1.gamma), vec(layer.ln1.beta), p, d);
  auto q = oracles::linear(zn, vec(wq.w), vec(wq.b), p, d, d);
  auto att = oracles::attention(q, vec(k), vec(v), p, p, d, cfg.heads, always);
  std::vector<double> fused(att.size());
  for (size_t i = 0; i < att.size(); ++i) fused[i] = 2.0 * att[i];
  auto proj = oracles::linear(fused, vec(layer.wo.w), vec(layer.wo.b), p, d, d);
  std::vector<double> z1(proj.size());
  for (size_t i = 0; i < proj.size(); ++i) z1[i] = vec(z)[i] + proj[i];
  const int dm = d * cfg.mlp_ratio;
  auto h = oracles::linear(oracles::layer_norm(z1, vec(layer.ln2.gamma), vec(layer.ln2.beta), p, d),
                           vec(layer.mlp1.w), vec(layer.mlp1.b), p, d, dm);
  for (auto& x : h) x = oracles::gelu(x);
  auto mlp = oracles::linear(h, vec(layer.mlp2.w), vec(layer.mlp2.b), p, dm, d);
  std::vector<double> ref(z1.size());
  for (size_t i = 0; i < ref.size(); ++i) ref[i] = z1[i] + mlp[i];

  CHECK(max_abs_diff(vec(out), ref) < 1e-9);
}

TEST_CASE("ablation modes select the requested reads", "[transformer]") {
  Rng rng(910);
  TransformerConfig cfg;
  cfg.hidden = 8;
  cfg.heads = 2;
  cfg.layers = 1;
  cfg.omega = 5;
  TransformerLayer<double> layer(cfg, rng);
  Linear<double> wq(cfg.hidden, cfg.hidden, rng);
  MemoryBank<double> bank(small_mem(10, 10, 1), 2, 2);
  bank.write(rand_ten({4, cfg.hidden}, rng), rand_ten({4, cfg.hidden}, rng), 0);
  auto z = rand_ten({4, cfg.hidden}, rng);

  auto both = layer.forward(z, wq, bank, cfg, AttentionMode::both, true);
  auto only_short = layer.forward(z, wq, bank, cfg, AttentionMode::short_only, true);
  auto only_long = layer.forward(z, wq, bank, cfg, AttentionMode::long_only, true);
  auto gated_off = layer.forward(z, wq, bank, cfg, AttentionMode::both, false);

  // One shared entry and a grid-covering window make the two single reads
  // coincide; fusing them shifts the result.
  CHECK(max_abs_diff(vec(only_short), vec(only_long)) < 1e-12);
  CHECK(vec(gated_off) == vec(only_short));
  CHECK(max_abs_diff(vec(both), vec(only_short)) > 1e-6);

  // With the long read gated off and short ablated away there is nothing to
  // fuse; the layer still runs on residuals alone.
  auto none = layer.forward(z, wq, bank, cfg, AttentionMode::long_only, false);
  CHECK(none.shape() == z.shape());
  CHECK(max_abs_diff(vec(none), vec(z)) > 1e-6);
}

TEST_CASE("stacked transformer preserves shape and determinism", "[transformer]") {
  TransformerConfig cfg;
  cfg.hidden = 16;
  cfg.heads = 4;
  cfg.layers = 3;
  cfg.omega = 3;
  Rng rng_a(42), rng_b(42);
  FgBgTransformer<double> tf_a(cfg, rng_a);
  FgBgTransformer<double> tf_b(cfg, rng_b);

  Rng data_rng(911);
  const int gh = 4, gw = 4, p = gh * gw;
  auto z = rand_ten({p, cfg.hidden}, data_rng);
  auto mask = rand_ten({p}, data_rng, 0.0, 1.0);

  auto run = [&](FgBgTransformer<double>& tf) {
    MemoryBank<double> bank(small_mem(10, 10, 1), gh, gw);
    auto qkv = tf.project_qkv(z);
    bank.write(qkv.k, tf.embed_values(qkv.v, mask), 0);
    return tf.forward(z, bank, AttentionMode::both, true);
  };
  auto out_a = run(tf_a);
  auto out_b = run(tf_b);
  REQUIRE(out_a.shape() == Shape{p, cfg.hidden});
  CHECK(vec(out_a) == vec(out_b));

  CHECK_THROWS_AS(tf_a.project_qkv(rand_ten({p, 8}, data_rng)), DimensionError);
}

TEST_CASE("transformer layer gradients match finite differences", "[transformer][grad]") {
  Rng rng(912);
  TransformerConfig cfg;
  cfg.hidden = 4;
  cfg.heads = 2;
  cfg.layers = 1;
  cfg.mlp_ratio = 2;
  cfg.omega = 3;
  const int p = 4;
  TransformerLayer<double> layer(cfg, rng);
  Linear<double> wq(cfg.hidden, cfg.hidden, rng);
  MemoryBank<double> bank(small_mem(10, 10, 1), 2, 2);
  auto k = rand_ten({p, cfg.hidden}, rng);
  auto v = rand_ten({p, cfg.hidden}, rng);
  bank.write(k, v, 0);
  auto z = rand_ten({p, cfg.hidden}, rng);

  auto res = gradcheck::run({&z, &k, &v, &layer.wo.w, &layer.mlp1.w, &wq.w}, [&] {
    return project(layer.forward(z, wq, bank, cfg, AttentionMode::both, true), 34);
  });
  INFO(res.worst_where);
  CHECK(res.max_err < 1e-3);
}

TEST_CASE("embedding gradients flow through stored values", "[transformer][grad]") {
  Rng rng(913);
  TransformerConfig cfg;
  cfg.hidden = 4;
  cfg.heads = 2;
  cfg.layers = 2;
  cfg.mlp_ratio = 2;
  cfg.omega = 3;
  const int p = 4;
  FgBgTransformer<double> tf(cfg, rng);
  auto z = rand_ten({p, cfg.hidden}, rng);
  auto mask = rand_ten({p}, rng, 0.1, 0.9);

  auto res = gradcheck::run({&z, &tf.e_f, &tf.e_b, &mask}, [&] {
    MemoryBank<double> bank(small_mem(10, 10, 1), 2, 2);
    auto qkv = tf.project_qkv(z);
    bank.write(qkv.k, tf.embed_values(qkv.v, mask), 0);
    return project(tf.forward(z, bank, AttentionMode::both, true), 35);
  });
  INFO(res.worst_where);
  CHECK(res.max_err < 1e-3);
}
