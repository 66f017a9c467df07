// Copyright (c) 2026 vmatt contributors
// SPDX-License-Identifier: Apache-2.0
//
// Deterministic synthetic matting sequences: soft-edged sprites with
// analytic alpha composited over procedurally textured, affinely advected
// backgrounds. Backgrounds carry look-alike distractor sprites, so the
// target subject is only identifiable through the initial guidance mask.
// Everything is a pure function of the scene description, so training and
// evaluation data never need to leave the repository.
#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "vmatt/rng.hpp"
#include "vmatt/tensor.hpp"

namespace vmatt {

inline constexpr double kPi = 3.14159265358979323846;

// Per-frame affine velocity: translation in px/frame, rotation in deg/frame,
// zoom as scale change per frame (0.01 = +1 percent each frame).
struct AffineVelocity {
  double tx = 0, ty = 0;
  double rot_deg = 0;
  double zoom = 0;

  bool is_identity() const { return tx == 0 && ty == 0 && rot_deg == 0 && zoom == 0; }
};

// One moving sprite: a disk (half_length 0) or a capsule, with a smoothstep
// edge of half-width `softness` pixels around the silhouette boundary.
struct FgShape {
  double cx = 0, cy = 0;  // center at frame 0, pixels
  double vx = 0, vy = 0;  // px/frame
  double radius = 8;
  double softness = 1.5;     // sigma_e > 0
  double half_length = 0;    // capsule half-length along `angle`
  double angle = 0;          // radians
  // Interior alpha in (0,1]. Values below 1 make the sprite semi-transparent,
  // which keeps thresholded alpha from being a free substitute for the
  // segment label. Keep it above 0.5 so the t=0 oracle mask still covers the
  // sprite.
  double opacity = 1.0;
};

enum class BgMode { static_bg, dynamic_bg };

struct SceneSpec {
  uint64_t seed = 1;
  int frames = 1;
  int height = 64, width = 64;
  BgMode mode = BgMode::dynamic_bg;
  AffineVelocity bg_motion;  // ignored (forced to identity) for static_bg
  std::vector<FgShape> fg_shapes;
  // Distractor sprites rendered into the background layer. They share the
  // foreground's silhouette and texture family but contribute nothing to
  // alpha_gt, so shape alone cannot tell figure from ground; static_bg
  // freezes their motion along with the camera.
  std::vector<FgShape> bg_shapes;
};

// Frames plus their analytic labels. fg/bg keep the unmixed layers so the
// compositing identity stays checkable and motion augmentation can rewarp
// the original layers instead of the mixture.
template <class T>
struct LabeledSequence {
  std::vector<Ten<T>> frames;    // [3,H,W] in [0,1]
  std::vector<Ten<T>> alpha_gt;  // [1,H,W] in [0,1], exact 0/1 off the edge band
  std::vector<Ten<T>> mask_gt;   // [1,H,W] binary, alpha >= 0.5
  std::vector<Ten<T>> fg, bg;    // [3,H,W] layers
};

namespace synth_detail {

// Low-frequency sinusoid-plus-gradient texture. Coordinates are normalized
// to [0,1]; parameters come from the scene seed.
struct Texture {
  double freq_x[3], freq_y[3], phase[3], amp[3];
  double freq2_x[3], freq2_y[3], phase2[3], amp2[3];
  double grad_x[3], grad_y[3], base[3];

  Texture(Rng& rng, double freq_lo, double freq_hi) {
    for (int c = 0; c < 3; ++c) {
      freq_x[c] = rng.uniform(freq_lo, freq_hi);
      freq_y[c] = rng.uniform(freq_lo, freq_hi);
      phase[c] = rng.uniform(0.0, 2.0 * kPi);
      amp[c] = rng.uniform(0.10, 0.22);
      freq2_x[c] = rng.uniform(freq_lo, freq_hi);
      freq2_y[c] = rng.uniform(freq_lo, freq_hi);
      phase2[c] = rng.uniform(0.0, 2.0 * kPi);
      amp2[c] = rng.uniform(0.06, 0.15);
      grad_x[c] = rng.uniform(-0.25, 0.25);
      grad_y[c] = rng.uniform(-0.25, 0.25);
      base[c] = rng.uniform(0.35, 0.65);
    }
  }

  double sample(int c, double u, double v) const {
    double x = base[c];
    x += amp[c] * std::sin(2.0 * kPi * (freq_x[c] * u + freq_y[c] * v) + phase[c]);
    x += amp2[c] * std::sin(2.0 * kPi * (freq2_x[c] * u + freq2_y[c] * v) + phase2[c]);
    x += grad_x[c] * u + grad_y[c] * v;
    return x < 0.0 ? 0.0 : (x > 1.0 ? 1.0 : x);
  }
};

// Inverse-map a pixel through t frames of the given velocity: rotate and
// scale about the image center, then undo the accumulated translation.
inline void warp_point(double x, double y, const AffineVelocity& vel, int t, int h, int w,
                       double* sx, double* sy) {
  if (vel.is_identity() || t == 0) {
    *sx = x;
    *sy = y;
    return;
  }
  const double cx = 0.5 * (w - 1), cy = 0.5 * (h - 1);
  const double theta = -t * vel.rot_deg * kPi / 180.0;
  const double scale = std::pow(1.0 + vel.zoom, t);
  const double dx = (x - cx) / scale, dy = (y - cy) / scale;
  const double ct = std::cos(theta), st = std::sin(theta);
  *sx = cx + ct * dx - st * dy - t * vel.tx;
  *sy = cy + st * dx + ct * dy - t * vel.ty;
}

// Signed distance to the sprite silhouette at frame t (negative inside).
inline double shape_distance(const FgShape& s, int t, double x, double y) {
  const double cx = s.cx + t * s.vx, cy = s.cy + t * s.vy;
  double dx = x - cx, dy = y - cy;
  if (s.half_length > 0) {
    // Distance to the capsule's core segment.
    const double ax = std::cos(s.angle), ay = std::sin(s.angle);
    double proj = dx * ax + dy * ay;
    proj = proj < -s.half_length ? -s.half_length : (proj > s.half_length ? s.half_length : proj);
    dx -= proj * ax;
    dy -= proj * ay;
  }
  return std::sqrt(dx * dx + dy * dy) - s.radius;
}

// 1 inside, 0 outside, cubic hermite ramp across |sd| < softness.
inline double edge_profile(double sd, double softness) {
  if (sd <= -softness) return 1.0;
  if (sd >= softness) return 0.0;
  const double s = (sd + softness) / (2.0 * softness);
  return 1.0 - s * s * (3.0 - 2.0 * s);
}

template <class T>
Ten<T> composite(const Ten<T>& alpha, const Ten<T>& fg, const Ten<T>& bg) {
  const int h = fg.dim(1), w = fg.dim(2);
  std::vector<T> out(fg.data().size());
  for (int c = 0; c < 3; ++c)
    for (int i = 0; i < h * w; ++i) {
      const size_t px = static_cast<size_t>(c) * h * w + static_cast<size_t>(i);
      const T a = alpha.data()[static_cast<size_t>(i)];
      if (a == T(1))
        out[px] = fg.data()[px];
      else if (a == T(0))
        out[px] = bg.data()[px];
      else
        out[px] = bg.data()[px] + a * (fg.data()[px] - bg.data()[px]);
    }
  return Ten<T>::from(fg.shape(), std::move(out));
}

// Bilinear sample of a [C,H,W] layer with border policy: textures clamp to
// the edge, alpha reads 0 outside so sprites leave the canvas cleanly.
template <class T>
T sample_bilinear(const Ten<T>& img, int c, double y, double x, bool zero_outside) {
  const int h = img.dim(1), w = img.dim(2);
  if (zero_outside && (x <= -1.0 || y <= -1.0 || x >= static_cast<double>(w) ||
                       y >= static_cast<double>(h)))
    return T(0);
  const double fx = std::floor(x), fy = std::floor(y);
  const int x0 = static_cast<int>(fx), y0 = static_cast<int>(fy);
  const double wx = x - fx, wy = y - fy;
  auto at = [&](int yy, int xx) -> double {
    if (zero_outside && (yy < 0 || yy >= h || xx < 0 || xx >= w)) return 0.0;
    yy = yy < 0 ? 0 : (yy >= h ? h - 1 : yy);
    xx = xx < 0 ? 0 : (xx >= w ? w - 1 : xx);
    return static_cast<double>(
        img.data()[static_cast<size_t>(c) * h * w + static_cast<size_t>(yy) * w + xx]);
  };
  const double top = at(y0, x0) + wx * (at(y0, x0 + 1) - at(y0, x0));
  const double bot = at(y0 + 1, x0) + wx * (at(y0 + 1, x0 + 1) - at(y0 + 1, x0));
  return static_cast<T>(top + wy * (bot - top));
}

}  // namespace synth_detail

// Render the scene. Deterministic: the same spec yields bitwise-identical
// output. Background texture coordinates are advected by the accumulated
// affine; the foreground texture rides with the first sprite so surface
// detail tracks the silhouette.
template <class T>
LabeledSequence<T> generate_sequence(const SceneSpec& spec) {
  require(spec.frames >= 1, "synth: frames must be positive");
  require(spec.height >= 16 && spec.width >= 16 && spec.height % 16 == 0 && spec.width % 16 == 0,
          "synth: size must be a positive multiple of 16");
  for (const auto& s : spec.fg_shapes) {
    require(s.softness > 0 && s.radius > 0, "synth: shapes need positive radius and softness");
    require(s.opacity > 0 && s.opacity <= 1, "synth: opacity must lie in (0,1]");
  }

  Rng rng(spec.seed);
  // All layers draw from the same texture family. A frequency or contrast
  // split between them would let a per-frame filter separate figure from
  // ground, and the guided memory would never need to be consulted.
  const synth_detail::Texture bg_tex(rng, 0.8, 2.5);
  const synth_detail::Texture fg_tex(rng, 0.8, 2.5);
  const synth_detail::Texture dist_tex(rng, 0.8, 2.5);
  const AffineVelocity bg_vel =
      spec.mode == BgMode::static_bg ? AffineVelocity{} : spec.bg_motion;
  std::vector<FgShape> distractors = spec.bg_shapes;
  if (spec.mode == BgMode::static_bg)
    for (auto& s : distractors) s.vx = s.vy = 0;

  const int h = spec.height, w = spec.width;
  LabeledSequence<T> out;
  for (int t = 0; t < spec.frames; ++t) {
    std::vector<T> bgv(static_cast<size_t>(3) * h * w), fgv(bgv.size());
    std::vector<T> av(static_cast<size_t>(h) * w), mv(av.size());
    const double fdx = spec.fg_shapes.empty() ? 0.0 : t * spec.fg_shapes[0].vx;
    const double fdy = spec.fg_shapes.empty() ? 0.0 : t * spec.fg_shapes[0].vy;
    const double ddx = distractors.empty() ? 0.0 : t * distractors[0].vx;
    const double ddy = distractors.empty() ? 0.0 : t * distractors[0].vy;
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        double bx, by;
        synth_detail::warp_point(x, y, bg_vel, t, h, w, &bx, &by);
        // Union of sprites: each contributes its own soft edge, the pixel
        // takes the strongest coverage.
        double a = 0.0;
        for (const auto& s : spec.fg_shapes)
          a = std::max(a, synth_detail::edge_profile(synth_detail::shape_distance(s, t, x, y),
                                                     s.softness));
        double ad = 0.0;
        for (const auto& s : distractors)
          ad = std::max(ad, synth_detail::edge_profile(synth_detail::shape_distance(s, t, x, y),
                                                       s.softness));
        const size_t pi = static_cast<size_t>(y) * w + x;
        av[pi] = static_cast<T>(a);
        mv[pi] = a >= 0.5 ? T(1) : T(0);
        for (int c = 0; c < 3; ++c) {
          const size_t px = static_cast<size_t>(c) * h * w + pi;
          double b = bg_tex.sample(c, bx / w, by / h);
          if (ad > 0.0) {
            const double d = dist_tex.sample(c, (x - ddx) / w, (y - ddy) / h);
            b += ad * (d - b);
          }
          bgv[px] = static_cast<T>(b);
          fgv[px] = static_cast<T>(fg_tex.sample(c, (x - fdx) / w, (y - fdy) / h));
        }
      }
    out.bg.push_back(Ten<T>::from({3, h, w}, std::move(bgv)));
    out.fg.push_back(Ten<T>::from({3, h, w}, std::move(fgv)));
    out.alpha_gt.push_back(Ten<T>::from({1, h, w}, std::move(av)));
    out.mask_gt.push_back(Ten<T>::from({1, h, w}, std::move(mv)));
    out.frames.push_back(synth_detail::composite(out.alpha_gt.back(), out.fg.back(),
                                                 out.bg.back()));
  }
  return out;
}

// Turn one labeled still into a clip by warping the foreground layer (with
// its alpha) and the background layer along the given velocities and
// recompositing each frame.
template <class T>
LabeledSequence<T> motion_augment(const LabeledSequence<T>& still, int frames,
                                  const AffineVelocity& fg_vel, const AffineVelocity& bg_vel) {
  require(still.frames.size() == 1 && still.fg.size() == 1 && still.bg.size() == 1,
          "motion_augment: input must be a single labeled frame");
  require(frames >= 1, "motion_augment: frames must be positive");
  const int h = still.frames[0].dim(1), w = still.frames[0].dim(2);

  LabeledSequence<T> out;
  for (int t = 0; t < frames; ++t) {
    std::vector<T> fgv(static_cast<size_t>(3) * h * w), bgv(fgv.size());
    std::vector<T> av(static_cast<size_t>(h) * w), mv(av.size());
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        double fx, fy, bx, by;
        synth_detail::warp_point(x, y, fg_vel, t, h, w, &fx, &fy);
        synth_detail::warp_point(x, y, bg_vel, t, h, w, &bx, &by);
        const size_t pi = static_cast<size_t>(y) * w + x;
        T a = synth_detail::sample_bilinear(still.alpha_gt[0], 0, fy, fx, true);
        a = a < T(0) ? T(0) : (a > T(1) ? T(1) : a);
        av[pi] = a;
        mv[pi] = a >= T(0.5) ? T(1) : T(0);
        for (int c = 0; c < 3; ++c) {
          const size_t px = static_cast<size_t>(c) * h * w + pi;
          fgv[px] = synth_detail::sample_bilinear(still.fg[0], c, fy, fx, false);
          bgv[px] = synth_detail::sample_bilinear(still.bg[0], c, by, bx, false);
        }
      }
    out.fg.push_back(Ten<T>::from({3, h, w}, std::move(fgv)));
    out.bg.push_back(Ten<T>::from({3, h, w}, std::move(bgv)));
    out.alpha_gt.push_back(Ten<T>::from({1, h, w}, std::move(av)));
    out.mask_gt.push_back(Ten<T>::from({1, h, w}, std::move(mv)));
    out.frames.push_back(synth_detail::composite(out.alpha_gt.back(), out.fg.back(),
                                                 out.bg.back()));
  }
  return out;
}

// Seeded variant: samples independent foreground/background trajectories.
// `magnitude` scales every sampled velocity; zero reproduces the input still
// in every frame.
template <class T>
LabeledSequence<T> motion_augment(const LabeledSequence<T>& still, int frames, uint64_t seed,
                                  double magnitude = 1.0) {
  require(magnitude >= 0, "motion_augment: magnitude must be non-negative");
  Rng rng(seed);
  auto sample_vel = [&] {
    AffineVelocity v;
    v.tx = magnitude * rng.uniform(-2.0, 2.0);
    v.ty = magnitude * rng.uniform(-2.0, 2.0);
    v.rot_deg = magnitude * rng.uniform(-1.5, 1.5);
    v.zoom = magnitude * rng.uniform(-0.01, 0.01);
    return v;
  };
  const AffineVelocity fg_vel = sample_vel();
  const AffineVelocity bg_vel = sample_vel();
  return motion_augment(still, frames, fg_vel, bg_vel);
}

enum class MaskCorruption { dilate, erode, flip_region };

// Degrade a binary mask for robustness experiments: 4-neighborhood
// morphological dilation/erosion with the given radius, or a seeded
// rectangular flip with side `magnitude`. Radius-1 dilation of an isolated
// pixel therefore yields the 5-pixel diamond, not the full 3x3 block.
template <class T>
Ten<T> corrupt_mask(const Ten<T>& mask, MaskCorruption kind, int magnitude, uint64_t seed = 0) {
  require_dims(mask.ndim() == 3 && mask.dim(0) == 1, "corrupt_mask: mask must be [1,H,W]");
  for (const T& v : mask.data())
    require(v == T(0) || v == T(1), "corrupt_mask: mask must be binary");
  require(magnitude >= 0, "corrupt_mask: magnitude must be non-negative");
  const int h = mask.dim(1), w = mask.dim(2);
  std::vector<T> cur = mask.data();
  if (magnitude == 0) return Ten<T>::from(mask.shape(), std::move(cur));

  if (kind == MaskCorruption::flip_region) {
    Rng rng(seed);
    const int side = std::min(magnitude, std::min(h, w));
    const int y0 = rng.uniform_int(0, h - side);
    const int x0 = rng.uniform_int(0, w - side);
    for (int y = y0; y < y0 + side; ++y)
      for (int x = x0; x < x0 + side; ++x) {
        const size_t i = static_cast<size_t>(y) * w + x;
        cur[i] = cur[i] == T(1) ? T(0) : T(1);
      }
    return Ten<T>::from(mask.shape(), std::move(cur));
  }

  const bool grow = kind == MaskCorruption::dilate;
  for (int step = 0; step < magnitude; ++step) {
    std::vector<T> next = cur;
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        const size_t i = static_cast<size_t>(y) * w + x;
        bool hit = false;
        const int ny[4] = {y - 1, y + 1, y, y};
        const int nx[4] = {x, x, x - 1, x + 1};
        for (int d = 0; d < 4 && !hit; ++d) {
          if (ny[d] < 0 || ny[d] >= h || nx[d] < 0 || nx[d] >= w) continue;
          const T nb = cur[static_cast<size_t>(ny[d]) * w + nx[d]];
          hit = grow ? nb == T(1) : nb == T(0);
        }
        if (hit) next[i] = grow ? T(1) : T(0);
      }
    cur = std::move(next);
  }
  return Ten<T>::from(mask.shape(), std::move(cur));
}

// Randomized scene used by the training pipeline: one or two sprites with
// seeded trajectories over a textured background.
inline SceneSpec random_scene(Rng& rng, int frames, int height, int width, BgMode mode,
                              double softness_lo = 0.75, double softness_hi = 2.5) {
  SceneSpec spec;
  spec.seed = rng.next_u64();
  spec.frames = frames;
  spec.height = height;
  spec.width = width;
  spec.mode = mode;
  if (mode == BgMode::dynamic_bg) {
    spec.bg_motion.tx = rng.uniform(-1.5, 1.5);
    spec.bg_motion.ty = rng.uniform(-1.5, 1.5);
    spec.bg_motion.rot_deg = rng.uniform(-1.0, 1.0);
    spec.bg_motion.zoom = rng.uniform(-0.005, 0.005);
  }
  const int shapes = rng.uniform_int(1, 2);
  for (int s = 0; s < shapes; ++s) {
    FgShape f;
    f.cx = rng.uniform(0.25 * width, 0.75 * width);
    f.cy = rng.uniform(0.25 * height, 0.75 * height);
    f.vx = rng.uniform(-1.5, 1.5);
    f.vy = rng.uniform(-1.5, 1.5);
    f.radius = rng.uniform(0.12 * std::min(height, width), 0.28 * std::min(height, width));
    f.softness = rng.uniform(softness_lo, softness_hi);
    if (rng.uniform(0.0, 1.0) < 0.4) {
      f.half_length = rng.uniform(0.1 * std::min(height, width), 0.3 * std::min(height, width));
      f.angle = rng.uniform(0.0, kPi);
    }
    spec.fg_shapes.push_back(f);
  }
  // Every scene carries at least one distractor, so the subject cannot be
  // identified without the initial guidance.
  const int distractors = rng.uniform_int(1, 2);
  for (int s = 0; s < distractors; ++s) {
    FgShape d;
    d.cx = rng.uniform(0.15 * width, 0.85 * width);
    d.cy = rng.uniform(0.15 * height, 0.85 * height);
    d.vx = rng.uniform(-1.5, 1.5);
    d.vy = rng.uniform(-1.5, 1.5);
    d.radius = rng.uniform(0.12 * std::min(height, width), 0.28 * std::min(height, width));
    d.softness = rng.uniform(softness_lo, softness_hi);
    if (rng.uniform(0.0, 1.0) < 0.4) {
      d.half_length = rng.uniform(0.1 * std::min(height, width), 0.3 * std::min(height, width));
      d.angle = rng.uniform(0.0, kPi);
    }
    spec.bg_shapes.push_back(d);
  }
  return spec;
}

}  // namespace vmatt
