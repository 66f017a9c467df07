// Copyright (c) 2026 vmatt contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

#include "vmatt/modules.hpp"
#include "vmatt/tensor.hpp"

namespace vmatt {

// Linear warmup from 0 to base_lr over warmup_steps, then cosine decay to 0
// across the remaining steps. at(warmup_steps) == base_lr exactly.
struct LrSchedule {
  double base_lr = 1e-3;
  int warmup_steps = 0;
  int total_steps = 1;

  double at(int step) const {
    require(total_steps >= 1 && warmup_steps >= 0 && warmup_steps < total_steps,
            "schedule: need 0 <= warmup_steps < total_steps");
    require(step >= 0, "schedule: step must be non-negative");
    if (step >= total_steps) return 0.0;
    if (step < warmup_steps) return base_lr * step / warmup_steps;
    const double u = static_cast<double>(step - warmup_steps) /
                     static_cast<double>(total_steps - warmup_steps);
    return 0.5 * base_lr * (1.0 + std::cos(std::numbers::pi * u));
  }
};

struct AdamWConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0;
};

// Adaptive-moment optimizer with decoupled weight decay. Moment buffers are
// kept in double regardless of the parameter type; parameters whose gradient
// is absent for a step are skipped entirely (no decay either).
template <class T>
class AdamW {
public:
  explicit AdamW(const ParamList<T>& params, AdamWConfig cfg = {}) : cfg_(cfg) {
    require(cfg.beta1 > 0 && cfg.beta1 < 1 && cfg.beta2 > 0 && cfg.beta2 < 1,
            "adamw: betas must lie in (0,1)");
    require(cfg.eps > 0 && cfg.weight_decay >= 0, "adamw: need eps > 0 and decay >= 0");
    for (const auto& e : params)
      if (e.trainable)
        slots_.push_back({e.tensor, std::vector<double>(static_cast<size_t>(e.tensor->size())),
                          std::vector<double>(static_cast<size_t>(e.tensor->size()))});
  }

  // Clears gradient buffers outright: a parameter the next backward pass
  // never reaches is then skipped by step(), decay included.
  void zero_grad() {
    for (auto& s : slots_) s.param->clear_grad();
  }

  void step(double lr) {
    require(lr >= 0, "adamw: learning rate must be non-negative");
    NoGradGuard guard;
    ++t_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    for (auto& s : slots_) {
      if (!s.param->has_grad()) continue;
      const std::vector<T>& g = s.param->grad();
      std::vector<T>& p = s.param->mutable_data();
      for (size_t i = 0; i < p.size(); ++i) {
        const double gi = static_cast<double>(g[i]);
        s.m[i] = cfg_.beta1 * s.m[i] + (1.0 - cfg_.beta1) * gi;
        s.v[i] = cfg_.beta2 * s.v[i] + (1.0 - cfg_.beta2) * gi * gi;
        const double update = (s.m[i] / bc1) / (std::sqrt(s.v[i] / bc2) + cfg_.eps);
        p[i] = static_cast<T>(static_cast<double>(p[i]) -
                              lr * (update + cfg_.weight_decay * static_cast<double>(p[i])));
      }
    }
  }

  int64_t step_count() const { return t_; }
  const AdamWConfig& config() const { return cfg_; }

private:
  struct Slot {
    Ten<T>* param;
    std::vector<double> m, v;
  };

  AdamWConfig cfg_;
  int64_t t_ = 0;
  std::vector<Slot> slots_;
};

}  // namespace vmatt
