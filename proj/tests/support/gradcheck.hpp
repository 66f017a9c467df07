// Copyright (c) 2026 vmatt contributors
// SPDX-License-Identifier: Apache-2.0
//
// Central finite-difference oracle for gradient verification. Everything
// runs in double: the analytic gradient comes from one backward() sweep and
// is compared coordinate-by-coordinate against (f(x+h) - f(x-h)) / 2h
// computed from scratch evaluations of the same closure.
#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "vmatt/tensor.hpp"

namespace gradcheck {

struct Result {
  double max_err = 0.0;     // worst |analytic - fd| / max(1, |analytic|, |fd|)
  int checked = 0;          // coordinates compared
  std::string worst_where;  // "input#i[j]" of the worst coordinate
};

// `make_loss` must rebuild the full forward expression from the current
// contents of `inputs` on every call and return a scalar.
inline Result run(std::vector<vmatt::Ten<double>*> inputs,
                  const std::function<vmatt::Ten<double>()>& make_loss, double h = 1e-3) {
  using vmatt::Ten;
  for (auto* t : inputs) {
    t->set_requires_grad(true);
    t->zero_grad();
  }
  Ten<double> loss = make_loss();
  vmatt::backward(loss);

  std::vector<std::vector<double>> analytic;
  analytic.reserve(inputs.size());
  for (auto* t : inputs)
    analytic.push_back(t->has_grad() ? t->grad() : std::vector<double>(t->data().size(), 0.0));

  Result res;
  vmatt::NoGradGuard ng;  // FD evaluations do not need a tape
  for (size_t ti = 0; ti < inputs.size(); ++ti) {
    auto& data = inputs[ti]->mutable_data();
    for (size_t j = 0; j < data.size(); ++j) {
      const double keep = data[j];
      data[j] = keep + h;
      const double fp = make_loss().item();
      data[j] = keep - h;
      const double fm = make_loss().item();
      data[j] = keep;
      const double fd = (fp - fm) / (2.0 * h);
      const double an = analytic[ti][j];
      const double err = std::abs(an - fd) / std::max({1.0, std::abs(an), std::abs(fd)});
      ++res.checked;
      if (err > res.max_err) {
        res.max_err = err;
        res.worst_where = "input#" + std::to_string(ti) + "[" + std::to_string(j) + "]";
      }
    }
  }
  return res;
}

}  // namespace gradcheck
