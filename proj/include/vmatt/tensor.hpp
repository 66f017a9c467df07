// Copyright (c) 2026 vmatt contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstring>
#include <functional>
#include <initializer_list>
#include <memory>
#include <unordered_set>
#include <utility>
#include <vector>

#include "vmatt/common.hpp"
#include "vmatt/rng.hpp"

namespace vmatt {

// Reverse-mode autodiff over dense row-major tensors. Ten<T> is a cheap
// shared handle to an immutable value node; ops allocate fresh nodes and,
// while gradients are enabled, record parent links plus a backward closure.
// T is float for the runtime and double for finite-difference shadow checks.

template <class T>
struct Node {
  Shape shape;
  std::vector<T> value;
  std::vector<T> grad;  // allocated lazily during backward / on first use
  bool requires_grad = false;
  bool tracked = false;  // participates in some tape (leaf or derived)
  std::vector<std::shared_ptr<Node<T>>> parents;
  std::function<void(Node<T>&)> backward;

  std::vector<T>& ensure_grad() {
    if (grad.size() != value.size()) grad.assign(value.size(), T(0));
    return grad;
  }
};

// Gradient recording is on by default and disabled for inference via the
// scoped guard. The flag is thread-local: a tape is confined to one logical
// training thread.
class GradMode {
public:
  static bool enabled() { return flag(); }
  static void set(bool v) { flag() = v; }

private:
  static bool& flag() {
    thread_local bool f = true;
    return f;
  }
};

class NoGradGuard {
public:
  NoGradGuard() : prev_(GradMode::enabled()) { GradMode::set(false); }
  ~NoGradGuard() { GradMode::set(prev_); }
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

private:
  bool prev_;
};

template <class T>
inline void check_all_finite(const std::vector<T>& v, const char* op) {
  for (const T& x : v) {
    if (!std::isfinite(static_cast<double>(x)))
      throw NumericsError(std::string(op) + ": non-finite value produced");
  }
}

template <class T>
class Ten {
public:
  Ten() : node_(std::make_shared<Node<T>>()) {}

  static Ten zeros(Shape shape) { return full(std::move(shape), T(0)); }

  static Ten full(Shape shape, T fill) {
    Ten t;
    t.node_->value.assign(static_cast<size_t>(numel(shape)), fill);
    t.node_->shape = std::move(shape);
    return t;
  }

  static Ten from(Shape shape, std::vector<T> data) {
    if (static_cast<int64_t>(data.size()) != numel(shape))
      throw DimensionError("tensor data size does not match shape " + shape_str(shape));
    Ten t;
    t.node_->shape = std::move(shape);
    t.node_->value = std::move(data);
    return t;
  }

  static Ten scalar(T v) { return from({1}, {v}); }

  static Ten rand_normal(Shape shape, Rng& rng, T mean = T(0), T stddev = T(1)) {
    Ten t = zeros(std::move(shape));
    for (T& x : t.node_->value) x = static_cast<T>(rng.normal(mean, stddev));
    return t;
  }

  static Ten rand_uniform(Shape shape, Rng& rng, T lo, T hi) {
    Ten t = zeros(std::move(shape));
    for (T& x : t.node_->value) x = static_cast<T>(rng.uniform(lo, hi));
    return t;
  }

  // Node factory used by every op. Validates finiteness of the fresh value
  // and attaches the tape edge only when recording is on and some parent is
  // itself tracked.
  static Ten make(Shape shape, std::vector<T> value, const char* op,
                  std::vector<Ten> parents, std::function<void(Node<T>&)> backward) {
    if (static_cast<int64_t>(value.size()) != numel(shape))
      throw DimensionError(std::string(op) + ": output size does not match shape");
    check_all_finite(value, op);
    Ten t;
    t.node_->shape = std::move(shape);
    t.node_->value = std::move(value);
    bool any_tracked = false;
    for (const Ten& p : parents) any_tracked = any_tracked || p.node_->tracked;
    if (GradMode::enabled() && any_tracked) {
      t.node_->parents.reserve(parents.size());
      for (Ten& p : parents) t.node_->parents.push_back(p.node_);
      t.node_->backward = std::move(backward);
      t.node_->tracked = true;
    }
    return t;
  }

  const Shape& shape() const { return node_->shape; }
  int ndim() const { return static_cast<int>(node_->shape.size()); }
  int dim(int i) const { return node_->shape[static_cast<size_t>(i)]; }
  int64_t size() const { return static_cast<int64_t>(node_->value.size()); }
  bool empty() const { return node_->value.empty(); }

  const std::vector<T>& data() const { return node_->value; }

  // In-place access for initialisation, optimizer updates and test probes.
  // Never call on a tensor that sits inside a live tape.
  std::vector<T>& mutable_data() { return node_->value; }

  T item() const {
    if (size() != 1) throw ContractError("item() on non-scalar tensor " + shape_str(shape()));
    return node_->value[0];
  }

  T at(std::initializer_list<int> idx) const {
    return node_->value[offset_of(idx)];
  }

  void set(std::initializer_list<int> idx, T v) { node_->value[offset_of(idx)] = v; }

  Ten& set_requires_grad(bool v = true) {
    node_->requires_grad = v;
    node_->tracked = node_->tracked || v;
    return *this;
  }
  bool requires_grad() const { return node_->requires_grad; }

  bool tracked() const { return node_->tracked; }

  const std::vector<T>& grad() const {
    if (node_->grad.size() != node_->value.size())
      throw StateError("gradient not populated; run backward() first");
    return node_->grad;
  }
  bool has_grad() const { return node_->grad.size() == node_->value.size(); }

  // Gradients accumulate across backward() calls until cleared.
  void zero_grad() { node_->grad.assign(node_->value.size(), T(0)); }

  // Drop the gradient buffer entirely, so has_grad() reports false until the
  // next backward pass reaches this tensor.
  void clear_grad() { node_->grad.clear(); }

  // Same values, fresh leaf: cuts the tape (truncated-backprop boundaries,
  // frozen guidance signals).
  Ten detach() const {
    Ten t;
    t.node_->shape = node_->shape;
    t.node_->value = node_->value;
    return t;
  }

  std::shared_ptr<Node<T>> node() const { return node_; }

private:
  size_t offset_of(std::initializer_list<int> idx) const {
    if (static_cast<int>(idx.size()) != ndim())
      throw DimensionError("index rank does not match tensor rank");
    size_t off = 0;
    int i = 0;
    for (int v : idx) {
      int d = node_->shape[static_cast<size_t>(i)];
      if (v < 0 || v >= d) throw DimensionError("index out of range");
      off = off * static_cast<size_t>(d) + static_cast<size_t>(v);
      ++i;
    }
    return off;
  }

  std::shared_ptr<Node<T>> node_;
};

// Reverse topological sweep from a scalar loss. Nodes reachable through
// parent links are processed exactly once, consumers before producers, so
// every backward closure sees its full upstream gradient.
template <class T>
inline void backward(const Ten<T>& loss) {
  if (loss.size() != 1) throw ContractError("backward() requires a scalar loss");
  Node<T>* root = loss.node().get();
  if (!root->tracked) throw StateError("backward() on an untracked tensor; nothing to differentiate");

  std::vector<Node<T>*> order;
  std::unordered_set<Node<T>*> seen;
  // Iterative post-order DFS: parents first, node after.
  std::vector<std::pair<Node<T>*, size_t>> stack{{root, 0}};
  seen.insert(root);
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      Node<T>* p = node->parents[next++].get();
      if (p->tracked && seen.insert(p).second) stack.push_back({p, 0});
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  root->ensure_grad();
  root->grad[0] += T(1);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node<T>* n = *it;
    if (n->backward) {
      n->ensure_grad();
      n->backward(*n);
    }
  }
}

}  // namespace vmatt
