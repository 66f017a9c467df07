// Copyright (c) 2026 vmatt contributors
// SPDX-License-Identifier: Apache-2.0
//
// Three-stage training: segmentation warmup (mask loss only, teacher-forced
// memory writes), full matting loss alternating with segmentation batches,
// then a short full-loss polish at doubled resolution. Every step samples a
// truncated-backprop window of consecutive frames from one clip; gradients
// flow through the memory written inside the window and stop at its edges.
#pragma once

#include <cmath>
#include <ostream>
#include <string>
#include <vector>

#include "json.hpp"
#include "vmatt/optim.hpp"
#include "vmatt/session.hpp"

namespace vmatt {

struct TrainConfig {
  int stage = 1;
  int steps = 1000;
  double base_lr = 1e-3;
  double weight_decay = 0.03;
  int warmup_steps = 100;
  int clips_per_step = 1;
  int frames_per_clip = 4;     // truncated-backprop window length
  bool alternate = false;      // interleave segmentation-only batches (odd steps)
  bool teacher_force = false;  // memory guidance from GT masks instead of predictions
  bool augment = true;         // mirror/time-reverse each sampled window
  uint64_t seed = 7;
};

// Desk-scale schedule. Stage 1 warms the mask head with teacher-forced
// writes; stages 2 and 3 train the full objective with predicted guidance,
// stage 3 on clips rendered at twice the stage-2 resolution.
inline TrainConfig default_stage_config(int stage) {
  require(stage >= 1 && stage <= 3, "train: stage must be 1, 2 or 3");
  TrainConfig c;
  c.stage = stage;
  if (stage == 1) {
    c.steps = 1000;
    c.base_lr = 1e-3;
    c.weight_decay = 0.03;
    c.warmup_steps = 100;
    c.teacher_force = true;
  } else if (stage == 2) {
    c.steps = 3000;
    c.base_lr = 5e-4;
    c.weight_decay = 0.07;
    c.warmup_steps = 150;
    c.frames_per_clip = 6;
    c.alternate = true;
  } else {
    c.steps = 300;
    c.base_lr = 1e-4;
    c.weight_decay = 0.07;
    c.warmup_steps = 30;
  }
  c.seed = 7 + static_cast<uint64_t>(stage);
  return c;
}

template <class T>
struct TrainSet {
  std::vector<LabeledSequence<T>> matting;       // soft-edged scenes, full loss
  std::vector<LabeledSequence<T>> segmentation;  // near-binary clips, mask loss
  int height = 0, width = 0;
};

// Matting clips are fully procedural scenes; segmentation clips are stills
// with near-binary edges, animated by seeded affine motion.
template <class T>
TrainSet<T> make_train_set(uint64_t seed, int sequences, int frames, int height, int width) {
  require(sequences >= 1 && frames >= 1, "train: need at least one sequence and frame");
  Rng rng(seed);
  TrainSet<T> out;
  out.height = height;
  out.width = width;
  for (int i = 0; i < sequences; ++i) {
    SceneSpec spec = random_scene(rng, frames, height, width,
                                  i % 2 == 0 ? BgMode::dynamic_bg : BgMode::static_bg);
    out.matting.push_back(generate_sequence<T>(spec));
  }
  for (int i = 0; i < sequences; ++i) {
    SceneSpec still = random_scene(rng, 1, height, width, BgMode::dynamic_bg, 0.35, 0.6);
    out.segmentation.push_back(motion_augment(generate_sequence<T>(still), frames,
                                              rng.next_u64()));
  }
  return out;
}

struct TrainRecord {
  int stage = 0;
  int step = 0;
  double lr = 0;
  double loss = 0;
  double loss_mask = 0;
  double loss_coarse = 0;
  double loss_fine = 0;
  bool segmentation_batch = false;
};

inline nlohmann::json train_record_json(const TrainRecord& r) {
  return nlohmann::json{{"stage", r.stage},   {"step", r.step},
                        {"lr", r.lr},         {"loss", r.loss},
                        {"mask", r.loss_mask}, {"coarse", r.loss_coarse},
                        {"fine", r.loss_fine}, {"batch", r.segmentation_batch ? "seg" : "mat"}};
}

namespace train_detail {

template <class T>
Ten<T> mirror(const Ten<T>& x, bool flip_h, bool flip_v) {
  if (!flip_h && !flip_v) return x;
  const int ch = x.dim(0), h = x.dim(1), w = x.dim(2);
  std::vector<T> out(x.data().size());
  for (int c = 0; c < ch; ++c)
    for (int y = 0; y < h; ++y)
      for (int xx = 0; xx < w; ++xx) {
        const int sy = flip_v ? h - 1 - y : y;
        const int sx = flip_h ? w - 1 - xx : xx;
        out[(static_cast<size_t>(c) * h + y) * w + xx] =
            x.data()[(static_cast<size_t>(c) * h + sy) * w + sx];
      }
  return Ten<T>::from(x.shape(), std::move(out));
}

// Mirror and/or time-reverse one backprop window. The labels transform with
// the pixels, so supervision stays exact; with six source clips these eight
// views are what keeps the model from memorizing the pool.
template <class T>
LabeledSequence<T> augment_window(const LabeledSequence<T>& clip, int start, int frames,
                                  uint64_t seed) {
  Rng rng(seed);
  const bool flip_h = rng.uniform() < 0.5;
  const bool flip_v = rng.uniform() < 0.5;
  const bool reverse = rng.uniform() < 0.5;
  LabeledSequence<T> out;
  for (int i = 0; i < frames; ++i) {
    const size_t t = static_cast<size_t>(reverse ? start + frames - 1 - i : start + i);
    out.frames.push_back(mirror(clip.frames[t], flip_h, flip_v));
    out.alpha_gt.push_back(mirror(clip.alpha_gt[t], flip_h, flip_v));
    out.mask_gt.push_back(mirror(clip.mask_gt[t], flip_h, flip_v));
  }
  return out;
}

template <class T>
struct WindowLoss {
  Ten<T> total;
  double mask = 0, coarse = 0, fine = 0;
};

// Loss over one truncated-backprop window. Segmentation batches supervise
// only the mask logits; matting batches use the full weighted objective.
template <class T>
WindowLoss<T> window_loss(MattingModel<T>& model, const LabeledSequence<T>& clip, int start,
                          int frames, bool segmentation_only, bool teacher_force) {
  SessionConfig scfg;
  scfg.training = true;
  Session<T> sess(model, clip.frames[static_cast<size_t>(start)],
                  oracle_mask(clip.alpha_gt[static_cast<size_t>(start)]), scfg);
  const LossWeights weights;
  WindowLoss<T> acc;
  for (int f = start; f < start + frames; ++f) {
    const size_t t = static_cast<size_t>(f);
    const Ten<T>* teacher = teacher_force ? &clip.mask_gt[t] : nullptr;
    DecoderOutputs<T> out = sess.step_frame(clip.frames[t], teacher);
    Ten<T> gt_quarter = avg_pool(clip.alpha_gt[t], 4);
    Ten<T> m_star = pseudo_mask(gt_quarter);
    Ten<T> bce = mask_bce(out.mask_logits, m_star);
    Ten<T> frame_loss;
    if (segmentation_only) {
      frame_loss = bce;
    } else {
      Ten<T> coarse = add(alpha_l1(out.alpha_coarse, gt_quarter),
                          laplacian_pyramid_loss(out.alpha_coarse, gt_quarter));
      Ten<T> fine = add(alpha_l1(out.alpha_fine, clip.alpha_gt[t]),
                        laplacian_pyramid_loss(out.alpha_fine, clip.alpha_gt[t]));
      frame_loss = add(add(mul_scalar(bce, static_cast<T>(weights.w_mask)),
                           mul_scalar(coarse, static_cast<T>(weights.w_coarse))),
                       mul_scalar(fine, static_cast<T>(weights.w_fine)));
      acc.coarse += static_cast<double>(coarse.item());
      acc.fine += static_cast<double>(fine.item());
    }
    acc.mask += static_cast<double>(bce.item());
    acc.total = acc.total.empty() ? frame_loss : add(acc.total, frame_loss);
  }
  const T inv = T(1) / static_cast<T>(frames);
  acc.total = mul_scalar(acc.total, inv);
  acc.mask /= frames;
  acc.coarse /= frames;
  acc.fine /= frames;
  return acc;
}

}  // namespace train_detail

// One stage of the schedule. Each step draws a window of frames_per_clip
// consecutive frames from a random clip, accumulates the loss across
// clips_per_step windows, and applies one optimizer update. Non-finite
// losses abort with the step context attached. `trace` receives one JSON
// line per step.
template <class T>
std::vector<TrainRecord> train_stage(MattingModel<T>& model, const TrainConfig& cfg,
                                     const TrainSet<T>& data, std::ostream* trace = nullptr) {
  require(cfg.steps >= 1 && cfg.clips_per_step >= 1 && cfg.frames_per_clip >= 1,
          "train: counts must be positive");
  require(cfg.base_lr > 0 && cfg.weight_decay >= 0, "train: bad optimizer settings");
  const bool needs_seg = cfg.stage == 1 || cfg.alternate;
  require(!data.matting.empty() || cfg.stage == 1, "train: matting pool is empty");
  require(!needs_seg || !data.segmentation.empty(), "train: segmentation pool is empty");

  LrSchedule sched{cfg.base_lr, cfg.warmup_steps, cfg.steps};
  AdamW<T> opt(model.params(), {0.9, 0.999, 1e-8, cfg.weight_decay});
  Rng rng(cfg.seed);
  std::vector<TrainRecord> records;
  records.reserve(static_cast<size_t>(cfg.steps));

  for (int step = 0; step < cfg.steps; ++step) {
    const double lr = sched.at(step);
    const bool seg_batch = cfg.stage == 1 || (cfg.alternate && step % 2 == 1);
    const auto& pool = seg_batch ? data.segmentation : data.matting;

    Ten<T> loss;
    TrainRecord rec;
    for (int c = 0; c < cfg.clips_per_step; ++c) {
      const auto& clip = pool[static_cast<size_t>(
          rng.uniform_int(0, static_cast<int>(pool.size()) - 1))];
      const int len = static_cast<int>(clip.frames.size());
      require(len >= cfg.frames_per_clip, "train: clip shorter than the backprop window");
      const int start = rng.uniform_int(0, len - cfg.frames_per_clip);
      train_detail::WindowLoss<T> wl;
      try {
        if (cfg.augment) {
          const LabeledSequence<T> window =
              train_detail::augment_window(clip, start, cfg.frames_per_clip, rng.next_u64());
          wl = train_detail::window_loss(model, window, 0, cfg.frames_per_clip, seg_batch,
                                         cfg.teacher_force);
        } else {
          wl = train_detail::window_loss(model, clip, start, cfg.frames_per_clip, seg_batch,
                                         cfg.teacher_force);
        }
      } catch (const NumericsError& e) {
        throw NumericsError("train: stage " + std::to_string(cfg.stage) + " step " +
                            std::to_string(step) + ": " + e.what());
      }
      loss = loss.empty() ? wl.total : add(loss, wl.total);
      rec.loss_mask += wl.mask;
      rec.loss_coarse += wl.coarse;
      rec.loss_fine += wl.fine;
    }
    if (cfg.clips_per_step > 1) loss = mul_scalar(loss, T(1) / static_cast<T>(cfg.clips_per_step));
    const double loss_value = static_cast<double>(loss.item());
    if (!std::isfinite(loss_value))
      throw NumericsError("train: non-finite loss at stage " + std::to_string(cfg.stage) +
                          " step " + std::to_string(step) + " (lr " + std::to_string(lr) + ")");

    opt.zero_grad();
    backward(loss);
    opt.step(lr);

    rec.stage = cfg.stage;
    rec.step = step;
    rec.lr = lr;
    rec.loss = loss_value;
    rec.loss_mask /= cfg.clips_per_step;
    rec.loss_coarse /= cfg.clips_per_step;
    rec.loss_fine /= cfg.clips_per_step;
    rec.segmentation_batch = seg_batch;
    if (trace) *trace << train_record_json(rec).dump() << "\n";
    records.push_back(rec);
  }
  return records;
}

// Full desk-scale schedule over a low-resolution set (stages 1 and 2) and a
// doubled-resolution set (stage 3).
template <class T>
std::vector<TrainRecord> train_full_schedule(MattingModel<T>& model, const TrainSet<T>& low,
                                             const TrainSet<T>& high,
                                             std::ostream* trace = nullptr) {
  require(high.height >= low.height && high.width >= low.width,
          "train: stage-3 resolution must not be below stage-2");
  std::vector<TrainRecord> all;
  for (int stage = 1; stage <= 3; ++stage) {
    const TrainConfig cfg = default_stage_config(stage);
    const TrainSet<T>& data = stage == 3 ? high : low;
    std::vector<TrainRecord> r = train_stage(model, cfg, data, trace);
    all.insert(all.end(), r.begin(), r.end());
  }
  return all;
}

}  // namespace vmatt
