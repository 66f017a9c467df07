// Copyright (c) 2026 vmatt contributors
// SPDX-License-Identifier: Apache-2.0
#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <utility>
#include <vector>

#include "vmatt/synth.hpp"

using namespace vmatt;
using Catch::Approx;

namespace {

SceneSpec disk_scene(uint64_t seed, int frames, double softness = 1.5) {
  SceneSpec spec;
  spec.seed = seed;
  spec.frames = frames;
  spec.height = 32;
  spec.width = 32;
  spec.mode = BgMode::dynamic_bg;
  spec.bg_motion = {0.7, -0.4, 0.5, 0.002};
  FgShape disk;
  disk.cx = 16;
  disk.cy = 16;
  disk.vx = 0.5;
  disk.vy = 0.25;
  disk.radius = 7;
  disk.softness = softness;
  spec.fg_shapes = {disk};
  return spec;
}

// Argmax of the full 2D cross-correlation between two alpha mattes,
// returned as the (dy,dx) shift of `b` relative to `a`.
std::pair<int, int> xcorr_peak(const Ten<float>& a, const Ten<float>& b, int max_shift) {
  const int h = a.dim(1), w = a.dim(2);
  double best = -1;
  std::pair<int, int> arg{0, 0};
  for (int dy = -max_shift; dy <= max_shift; ++dy)
    for (int dx = -max_shift; dx <= max_shift; ++dx) {
      double acc = 0;
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
          const int yy = y + dy, xx = x + dx;
          if (yy < 0 || yy >= h || xx < 0 || xx >= w) continue;
          acc += static_cast<double>(a.at({0, y, x})) * b.at({0, yy, xx});
        }
      if (acc > best) {
        best = acc;
        arg = {dy, dx};
      }
    }
  return arg;
}

int count_fractional(const Ten<float>& alpha) {
  int n = 0;
  for (float a : alpha.data())
    if (a > 0.0f && a < 1.0f) ++n;
  return n;
}

}  // namespace

TEST_CASE("generation is deterministic", "[synth]") {
  auto a = generate_sequence<float>(disk_scene(77, 3));
  auto b = generate_sequence<float>(disk_scene(77, 3));
  REQUIRE(a.frames.size() == 3);
  for (int t = 0; t < 3; ++t) {
    CHECK(a.frames[t].data() == b.frames[t].data());
    CHECK(a.alpha_gt[t].data() == b.alpha_gt[t].data());
    CHECK(a.mask_gt[t].data() == b.mask_gt[t].data());
  }
  auto c = generate_sequence<float>(disk_scene(78, 3));
  CHECK(a.frames[0].data() != c.frames[0].data());
}

TEST_CASE("alpha is binary outside a thin edge ring", "[synth]") {
  const double softness = 0.8;
  auto seq = generate_sequence<float>(disk_scene(5, 1, softness));
  const auto& alpha = seq.alpha_gt[0];
  int fractional = 0, ones = 0;
  for (float a : alpha.data()) {
    CHECK(a >= 0.0f);
    CHECK(a <= 1.0f);
    if (a > 0.0f && a < 1.0f) ++fractional;
    if (a == 1.0f) ++ones;
  }
  CHECK(ones > 0);
  // The fractional band lives within |sd| < softness: area of an annulus of
  // width 2*softness around radius 7, with a safety factor for rasterization.
  const double band = 2.0 * kPi * 7.0 * (3.0 * softness);
  CHECK(fractional > 0);
  CHECK(fractional < static_cast<int>(band));
}

TEST_CASE("compositing identity holds at every pixel", "[synth]") {
  auto seq = generate_sequence<float>(disk_scene(9, 2));
  for (int t = 0; t < 2; ++t) {
    const auto& i = seq.frames[t];
    const auto& f = seq.fg[t];
    const auto& b = seq.bg[t];
    const auto& al = seq.alpha_gt[t];
    const int hw = i.dim(1) * i.dim(2);
    for (int c = 0; c < 3; ++c)
      for (int p = 0; p < hw; ++p) {
        const float a = al.data()[static_cast<size_t>(p)];
        const float iv = i.data()[static_cast<size_t>(c * hw + p)];
        const float fv = f.data()[static_cast<size_t>(c * hw + p)];
        const float bv = b.data()[static_cast<size_t>(c * hw + p)];
        if (a == 1.0f) {
          REQUIRE(iv == fv);  // exact at the endpoints
        } else if (a == 0.0f) {
          REQUIRE(iv == bv);
        } else {
          REQUIRE(iv == Approx(a * fv + (1 - a) * bv).margin(1e-6));
        }
      }
  }
}

TEST_CASE("static background repeats bitwise across frames", "[synth]") {
  SceneSpec spec = disk_scene(11, 4);
  spec.mode = BgMode::static_bg;  // bg_motion is forced to identity
  auto seq = generate_sequence<float>(spec);
  for (int t = 1; t < 4; ++t) CHECK(seq.bg[t].data() == seq.bg[0].data());

  SceneSpec moving = disk_scene(11, 4);
  auto seq2 = generate_sequence<float>(moving);
  CHECK(seq2.bg[1].data() != seq2.bg[0].data());
}

TEST_CASE("scene validation rejects bad geometry", "[synth]") {
  SceneSpec spec = disk_scene(1, 1);
  spec.height = 24;
  CHECK_THROWS_AS(generate_sequence<float>(spec), ContractError);
  spec = disk_scene(1, 0);
  CHECK_THROWS_AS(generate_sequence<float>(spec), ContractError);
  spec = disk_scene(1, 1);
  spec.fg_shapes[0].softness = 0;
  CHECK_THROWS_AS(generate_sequence<float>(spec), ContractError);
}

TEST_CASE("capsule sprites cover their core segment", "[synth]") {
  SceneSpec spec = disk_scene(13, 1);
  spec.fg_shapes[0].half_length = 8;
  spec.fg_shapes[0].angle = 0;  // horizontal
  spec.fg_shapes[0].radius = 4;
  auto seq = generate_sequence<float>(spec);
  const auto& a = seq.alpha_gt[0];
  // Core segment spans x in [8, 24] at y = 16.
  CHECK(a.at({0, 16, 10}) == 1.0f);
  CHECK(a.at({0, 16, 16}) == 1.0f);
  CHECK(a.at({0, 16, 22}) == 1.0f);
  CHECK(a.at({0, 2, 2}) == 0.0f);
  // Wider along the axis than across it.
  CHECK(a.at({0, 16, 24 + 2}) > a.at({0, 16 + 8, 16 - 8}));
}

TEST_CASE("zero-magnitude augmentation reproduces the still", "[synth]") {
  auto still = generate_sequence<float>(disk_scene(17, 1));
  auto seq = motion_augment(still, 4, 99u, 0.0);
  REQUIRE(seq.frames.size() == 4);
  for (int t = 0; t < 4; ++t) {
    CHECK(seq.frames[t].data() == still.frames[0].data());
    CHECK(seq.alpha_gt[t].data() == still.alpha_gt[0].data());
  }
}

TEST_CASE("augmentation is deterministic in the seed", "[synth]") {
  auto still = generate_sequence<float>(disk_scene(19, 1));
  auto a = motion_augment(still, 3, 4242u);
  auto b = motion_augment(still, 3, 4242u);
  auto c = motion_augment(still, 3, 4243u);
  for (int t = 0; t < 3; ++t) {
    CHECK(a.frames[t].data() == b.frames[t].data());
    CHECK(a.alpha_gt[t].data() == b.alpha_gt[t].data());
  }
  CHECK(a.frames[2].data() != c.frames[2].data());
  for (int t = 0; t < 3; ++t)
    for (float v : a.alpha_gt[t].data()) {
      CHECK(v >= 0.0f);
      CHECK(v <= 1.0f);
    }
}

TEST_CASE("unit translation shifts the alpha correlation peak", "[synth]") {
  SceneSpec spec = disk_scene(23, 1);
  spec.fg_shapes[0].vx = 0;
  spec.fg_shapes[0].vy = 0;
  auto still = generate_sequence<float>(spec);
  AffineVelocity fg_vel;
  fg_vel.tx = 1.0;  // exactly one pixel per frame
  AffineVelocity bg_vel;
  auto seq = motion_augment(still, 5, fg_vel, bg_vel);
  for (int t = 1; t < 5; ++t) {
    const auto peak = xcorr_peak(still.alpha_gt[0], seq.alpha_gt[t], 6);
    CHECK(peak.first == 0);
    CHECK(peak.second == t);
    // Integer translation resamples on the grid: no new fractional values.
    CHECK(count_fractional(seq.alpha_gt[t]) <= count_fractional(still.alpha_gt[0]));
  }
}

TEST_CASE("corrupt_mask magnitude zero is the identity", "[synth]") {
  auto still = generate_sequence<float>(disk_scene(29, 1));
  const auto& mask = still.mask_gt[0];
  for (auto kind : {MaskCorruption::dilate, MaskCorruption::erode, MaskCorruption::flip_region})
    CHECK(corrupt_mask(mask, kind, 0, 7u).data() == mask.data());
}

TEST_CASE("radius-1 dilation of an isolated pixel is the 4-neighborhood diamond", "[synth]") {
  auto mask = Ten<float>::zeros({1, 5, 5});
  mask.set({0, 2, 2}, 1.0f);
  auto grown = corrupt_mask(mask, MaskCorruption::dilate, 1);
  int on = 0;
  for (float v : grown.data()) on += v == 1.0f ? 1 : 0;
  CHECK(on == 5);
  CHECK(grown.at({0, 2, 2}) == 1.0f);
  CHECK(grown.at({0, 1, 2}) == 1.0f);
  CHECK(grown.at({0, 3, 2}) == 1.0f);
  CHECK(grown.at({0, 2, 1}) == 1.0f);
  CHECK(grown.at({0, 2, 3}) == 1.0f);
  CHECK(grown.at({0, 1, 1}) == 0.0f);  // diagonal stays off

  // Radius 2 adds the next diamond shell.
  auto grown2 = corrupt_mask(mask, MaskCorruption::dilate, 2);
  int on2 = 0;
  for (float v : grown2.data()) on2 += v == 1.0f ? 1 : 0;
  CHECK(on2 == 13);
}

TEST_CASE("dilate then erode recovers a convex mask", "[synth]") {
  // Solid rectangle: closing with the same radius is exact as long as the
  // dilation stays inside the canvas.
  auto mask = Ten<float>::zeros({1, 12, 12});
  for (int y = 4; y < 9; ++y)
    for (int x = 4; x < 9; ++x) mask.set({0, y, x}, 1.0f);
  auto grown = corrupt_mask(mask, MaskCorruption::dilate, 2);
  // Dilation is a superset.
  for (size_t i = 0; i < mask.data().size(); ++i)
    if (mask.data()[i] == 1.0f) CHECK(grown.data()[i] == 1.0f);
  auto recovered = corrupt_mask(grown, MaskCorruption::erode, 2);
  CHECK(recovered.data() == mask.data());
}

TEST_CASE("flip_region toggles exactly one seeded rectangle", "[synth]") {
  auto mask = Ten<float>::zeros({1, 8, 8});
  auto flipped = corrupt_mask(mask, MaskCorruption::flip_region, 3, 12345u);
  int on = 0;
  for (float v : flipped.data()) on += v == 1.0f ? 1 : 0;
  CHECK(on == 9);
  CHECK(corrupt_mask(mask, MaskCorruption::flip_region, 3, 12345u).data() == flipped.data());
  // Flipping the same region again restores the input.
  int diff = 0;
  auto twice = corrupt_mask(flipped, MaskCorruption::flip_region, 3, 12345u);
  for (size_t i = 0; i < twice.data().size(); ++i)
    diff += twice.data()[i] != mask.data()[i] ? 1 : 0;
  CHECK(diff == 0);
  CHECK_THROWS_AS(corrupt_mask(Ten<float>::full({1, 4, 4}, 0.5f), MaskCorruption::dilate, 1),
                  ContractError);
}

TEST_CASE("random scenes stay inside their configured bounds", "[synth]") {
  Rng rng(31);
  for (int i = 0; i < 10; ++i) {
    SceneSpec spec = random_scene(rng, 8, 64, 48, i % 2 ? BgMode::dynamic_bg : BgMode::static_bg);
    REQUIRE(!spec.fg_shapes.empty());
    auto seq = generate_sequence<float>(spec);
    REQUIRE(seq.frames.size() == 8);
    for (const auto& f : seq.frames)
      for (float v : f.data()) {
        CHECK(v >= 0.0f);
        CHECK(v <= 1.0f);
      }
    // Sprites actually cover part of the canvas at frame 0.
    int fg_px = 0;
    for (float a : seq.alpha_gt[0].data()) fg_px += a >= 0.5f ? 1 : 0;
    CHECK(fg_px > 16);
  }
}
