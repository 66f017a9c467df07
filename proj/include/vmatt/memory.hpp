// Copyright (c) 2026 vmatt contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <deque>
#include <vector>

#include "vmatt/tensor.hpp"

namespace vmatt {

// Long-term cadence policy. The default stores every write_stride-th write
// into the long compartment and reads it every frame. The alternative keeps
// every write and instead skips the long-term read on frames that are not a
// multiple of the stride.
enum class LongTermPolicy { sparse_write, sparse_read };

struct MemoryConfig {
  int write_stride = 10;    // l: long-compartment cadence
  int long_capacity = 10;   // newest long entries kept
  int short_capacity = 1;   // s: newest per-frame entries kept
  LongTermPolicy policy = LongTermPolicy::sparse_write;
};

template <class T>
struct MemoryEntry {
  Ten<T> k;  // [P,D] keys of one frame
  Ten<T> v;  // [P,D] fg/bg-embedded values of the same frame
  int frame_index = 0;
};

// Bounded two-compartment FIFO of per-frame key/value sets on a fixed
// 1/16-scale grid. Capacity limits are enforced on every write, so memory
// use is constant for arbitrarily long sequences.
template <class T>
class MemoryBank {
public:
  MemoryBank() = default;
  MemoryBank(const MemoryConfig& cfg, int grid_h, int grid_w)
      : cfg_(cfg), grid_h_(grid_h), grid_w_(grid_w) {
    require(cfg.write_stride >= 1 && cfg.long_capacity >= 1 && cfg.short_capacity >= 1,
            "memory: stride and capacities must be positive");
    require(grid_h >= 1 && grid_w >= 1, "memory: grid dims must be positive");
  }

  int grid_h() const { return grid_h_; }
  int grid_w() const { return grid_w_; }
  int positions() const { return grid_h_ * grid_w_; }
  int64_t write_count() const { return write_count_; }

  const std::deque<MemoryEntry<T>>& long_entries() const { return long_; }
  const std::deque<MemoryEntry<T>>& short_entries() const { return short_; }

  std::vector<int> long_frames() const {
    std::vector<int> out;
    for (const auto& e : long_) out.push_back(e.frame_index);
    return out;
  }

  void write(const Ten<T>& k, const Ten<T>& v, int frame_index) {
    validate(k, v);
    const bool to_long = cfg_.policy == LongTermPolicy::sparse_read ||
                         write_count_ % cfg_.write_stride == 0;
    if (to_long) {
      long_.push_back({k, v, frame_index});
      while (static_cast<int>(long_.size()) > cfg_.long_capacity) long_.pop_front();
    }
    short_.push_back({k, v, frame_index});
    while (static_cast<int>(short_.size()) > cfg_.short_capacity) short_.pop_front();
    last_write_long_ = to_long;
    ++write_count_;
  }

  // Overwrite the most recent write in place (both compartments if it landed
  // in both) without advancing the write counter. Used once per sequence:
  // the t=0 prediction supersedes the segmenter-seeded entry.
  void replace_newest(const Ten<T>& k, const Ten<T>& v, int frame_index) {
    validate(k, v);
    if (short_.empty()) throw StateError("memory: replace_newest on empty bank");
    short_.back() = {k, v, frame_index};
    if (last_write_long_ && !long_.empty()) long_.back() = {k, v, frame_index};
  }

  // Whether the long compartment participates in reads for this frame.
  bool read_long(int frame_index) const {
    return cfg_.policy == LongTermPolicy::sparse_write ||
           frame_index % cfg_.write_stride == 0;
  }

  // Sever stored tensors from any live tape (truncated-backprop boundary).
  void detach_all() {
    for (auto& e : long_) e = {e.k.detach(), e.v.detach(), e.frame_index};
    for (auto& e : short_) e = {e.k.detach(), e.v.detach(), e.frame_index};
  }

  const MemoryConfig& config() const { return cfg_; }

private:
  void validate(const Ten<T>& k, const Ten<T>& v) const {
    require_dims(k.ndim() == 2 && v.ndim() == 2 && k.shape() == v.shape() &&
                     k.dim(0) == positions(),
                 "memory: entries must be [P,D] on the bank grid");
    if (!long_.empty())
      require_dims(k.dim(1) == long_.front().k.dim(1), "memory: feature width changed");
  }

  MemoryConfig cfg_;
  int grid_h_ = 0, grid_w_ = 0;
  int64_t write_count_ = 0;
  bool last_write_long_ = false;
  std::deque<MemoryEntry<T>> long_, short_;
};

}  // namespace vmatt
