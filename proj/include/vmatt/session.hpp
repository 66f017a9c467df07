// Copyright (c) 2026 vmatt contributors
// SPDX-License-Identifier: Apache-2.0
//
// Per-sequence inference state. A Session owns the memory bank for one clip
// and advances it frame by frame: encode, attend over memory, decode, embed
// the new values with the decoded guidance, write. The model itself stays
// stateless, so any number of sessions can share it.
#pragma once

#include <algorithm>
#include <chrono>
#include <vector>

#include "vmatt/losses.hpp"
#include "vmatt/model.hpp"
#include "vmatt/synth.hpp"

namespace vmatt {

// Which signal drives the fg/bg value embedding on memory writes: the
// decoded coarse mask (default), the binarized fine alpha, or nothing (raw
// projected values are stored).
enum class UpdateMode { mask, alpha, none };

struct SessionConfig {
  AttentionMode attention = AttentionMode::both;
  UpdateMode update = UpdateMode::mask;
  bool training = false;  // batch-norm mode; callers control grad tracking
};

// Ground-truth-derived stand-ins for an off-the-shelf segmenter at t=0.
template <class T>
Ten<T> oracle_mask(const Ten<T>& alpha_gt0) {
  return pseudo_mask(alpha_gt0);
}

template <class T>
Ten<T> corrupted_oracle_mask(const Ten<T>& alpha_gt0, int radius, uint64_t seed = 0) {
  return corrupt_mask(oracle_mask(alpha_gt0), MaskCorruption::dilate, radius, seed);
}

template <class T>
class Session {
public:
  // Seeds both memory compartments from frame0 and the provided initial
  // mask. A mask with no foreground area is accepted but flagged so callers
  // can surface the warning.
  Session(MattingModel<T>& model, const Ten<T>& frame0, const Ten<T>& initial_mask,
          SessionConfig cfg = {})
      : model_(&model), cfg_(cfg) {
    require_dims(frame0.ndim() == 3 && frame0.dim(0) == 3, "session: frame0 must be [3,H,W]");
    h_ = frame0.dim(1);
    w_ = frame0.dim(2);
    require_dims(initial_mask.ndim() == 3 && initial_mask.dim(0) == 1 &&
                     initial_mask.dim(1) == h_ && initial_mask.dim(2) == w_,
                 "session: initial mask must be [1,H,W] matching frame0");
    T peak = T(0);
    for (const T& v : initial_mask.data()) {
      require(v >= T(0) && v <= T(1), "session: initial mask values must lie in [0,1]");
      peak = std::max(peak, v);
    }
    degenerate_init_ = peak < T(0.5);

    FramePyramid<T> pyr = model_->encoder.extract_features(frame0, cfg_.training);
    Ten<T> z = flatten_hw(model_->encoder.reduce_channels(pyr.f_sixteenth));
    QKV<T> qkv = model_->transformer.project_qkv(z);
    bank_ = MemoryBank<T>(model_->cfg.mem, h_ / 16, w_ / 16);
    Ten<T> stored = qkv.v;
    if (cfg_.update != UpdateMode::none)
      stored = model_->transformer.embed_values(qkv.v, pool_guidance(initial_mask));
    bank_.write(qkv.k, stored, 0);
  }

  // One pass of the per-frame loop. The frame is decoded against the current
  // memory, then its own key/values are written; at t=0 the write replaces
  // the segmenter-seeded entry instead of appending, so the decoder's own
  // guidance drives every later read. `teacher_mask` (full-resolution, [0,1])
  // overrides the decoded guidance for the write, for teacher-forced
  // training.
  DecoderOutputs<T> step_frame(const Ten<T>& frame, const Ten<T>* teacher_mask = nullptr) {
    require_dims(frame.ndim() == 3 && frame.dim(0) == 3 && frame.dim(1) == h_ &&
                     frame.dim(2) == w_,
                 "session: frame size does not match the session");
    FramePyramid<T> pyr = model_->encoder.extract_features(frame, cfg_.training);
    Ten<T> z = flatten_hw(model_->encoder.reduce_channels(pyr.f_sixteenth));
    QKV<T> qkv = model_->transformer.project_qkv(z);
    Ten<T> zt = model_->transformer.forward(z, bank_, cfg_.attention, bank_.read_long(frame_index_));
    DecoderOutputs<T> out =
        model_->decoder.forward(unflatten_hw(zt, bank_.grid_h(), bank_.grid_w()), pyr,
                                cfg_.training);

    Ten<T> stored = qkv.v;
    if (cfg_.update != UpdateMode::none) {
      Ten<T> guidance;
      if (teacher_mask != nullptr) {
        guidance = pool_guidance(*teacher_mask);
      } else if (cfg_.update == UpdateMode::alpha) {
        NoGradGuard guard;
        guidance = pool_guidance(pseudo_mask(out.alpha_fine.detach()));
      } else {
        guidance = reshape(mask_to_guidance(out.mask_logits), {bank_.positions()});
      }
      stored = model_->transformer.embed_values(qkv.v, guidance);
    }
    if (frame_index_ == 0)
      bank_.replace_newest(qkv.k, stored, 0);
    else
      bank_.write(qkv.k, stored, frame_index_);
    ++frame_index_;
    return out;
  }

  // Truncated-backprop boundary: stored memory stops carrying gradient.
  void detach_memory() { bank_.detach_all(); }

  int frame_index() const { return frame_index_; }
  bool degenerate_init() const { return degenerate_init_; }
  int height() const { return h_; }
  int width() const { return w_; }
  MemoryBank<T>& bank() { return bank_; }
  const MemoryBank<T>& bank() const { return bank_; }
  const SessionConfig& config() const { return cfg_; }

private:
  Ten<T> pool_guidance(const Ten<T>& full_mask) const {
    Ten<T> pooled = avg_pool(full_mask, 16);
    return reshape(pooled, {pooled.dim(1) * pooled.dim(2)});
  }

  MattingModel<T>* model_;
  SessionConfig cfg_;
  MemoryBank<T> bank_;
  int frame_index_ = 0;
  int h_ = 0, w_ = 0;
  bool degenerate_init_ = false;
};

template <class T>
struct SequenceResult {
  std::vector<Ten<T>> alphas;  // fine alpha, [1,H,W] per frame
  std::vector<Ten<T>> masks;   // foreground probability, [1,H/4,W/4] per frame
  std::vector<double> frame_millis;
  bool degenerate_init = false;
};

// Run the whole clip in inference mode (no gradients, frozen normalisation).
template <class T>
SequenceResult<T> run_sequence(MattingModel<T>& model, const std::vector<Ten<T>>& frames,
                               const Ten<T>& initial_mask, SessionConfig cfg = {}) {
  require(!frames.empty(), "run_sequence: need at least one frame");
  NoGradGuard guard;
  cfg.training = false;
  Session<T> sess(model, frames[0], initial_mask, cfg);
  SequenceResult<T> out;
  out.degenerate_init = sess.degenerate_init();
  for (const auto& frame : frames) {
    const auto tic = std::chrono::steady_clock::now();
    DecoderOutputs<T> dec = sess.step_frame(frame);
    const auto toc = std::chrono::steady_clock::now();
    out.alphas.push_back(dec.alpha_fine);
    out.masks.push_back(narrow(softmax(dec.mask_logits, 0), 0, kForegroundChannel, 1));
    out.frame_millis.push_back(std::chrono::duration<double, std::milli>(toc - tic).count());
  }
  return out;
}

template <class T>
struct BiResult {
  SequenceResult<T> forward;
  std::vector<Ten<T>> alphas;  // reverse-pass outputs, chronological order
};

// Offline two-pass mode: the forward pass fills the memory bank, then the
// same session consumes the frames newest to oldest, so every reverse-pass
// prediction can draw on evidence from the entire clip.
template <class T>
BiResult<T> bidirectional_infer(MattingModel<T>& model, const std::vector<Ten<T>>& frames,
                                const Ten<T>& initial_mask, SessionConfig cfg = {}) {
  require(frames.size() >= 2, "bidirectional_infer: need at least two frames");
  NoGradGuard guard;
  cfg.training = false;
  Session<T> sess(model, frames[0], initial_mask, cfg);
  BiResult<T> out;
  out.forward.degenerate_init = sess.degenerate_init();
  for (const auto& frame : frames) {
    const auto tic = std::chrono::steady_clock::now();
    DecoderOutputs<T> dec = sess.step_frame(frame);
    const auto toc = std::chrono::steady_clock::now();
    out.forward.alphas.push_back(dec.alpha_fine);
    out.forward.masks.push_back(narrow(softmax(dec.mask_logits, 0), 0, kForegroundChannel, 1));
    out.forward.frame_millis.push_back(
        std::chrono::duration<double, std::milli>(toc - tic).count());
  }
  out.alphas.resize(frames.size());
  for (size_t i = frames.size(); i-- > 0;)
    out.alphas[i] = sess.step_frame(frames[i]).alpha_fine;
  return out;
}

}  // namespace vmatt
