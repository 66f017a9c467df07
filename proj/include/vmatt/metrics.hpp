// Copyright (c) 2026 vmatt contributors
// SPDX-License-Identifier: Apache-2.0
//
// Matting evaluation metrics. All of these reduce predictions against ground
// truth into plain numbers, so they run outside the autodiff tape in double
// precision regardless of the model's element type.
#pragma once

#include <cmath>
#include <optional>
#include <vector>

#include "vmatt/tensor.hpp"

namespace vmatt {

// Scaled per-sequence (or aggregated) metric values. mad/mse/grad carry a
// 1e3 factor and dtssd 1e2 so typical results land in single digits; the
// unscaled values are value/scale. conn is absent when no source region
// exists (or when skipped at high resolution), dtssd on single frames.
struct MetricReport {
  double mad = 0;
  double mse = 0;
  double grad = 0;
  std::optional<double> conn;
  std::optional<double> dtssd;
};

inline constexpr double kPixelScale = 1e3;   // mad, mse, grad, conn
inline constexpr double kTemporalScale = 1e2;  // dtssd

namespace detail {

template <class T>
void require_alpha_pair(const std::vector<Ten<T>>& p, const std::vector<Ten<T>>& g) {
  require(!p.empty(), "metrics: empty sequence");
  require_dims(p.size() == g.size(), "metrics: sequence lengths must match");
  for (size_t t = 0; t < p.size(); ++t) {
    require_dims(p[t].ndim() == 3 && p[t].dim(0) == 1, "metrics: frames must be [1,H,W]");
    require_dims(p[t].shape() == g[t].shape(), "metrics: frame shapes must match");
  }
}

// First-order Gaussian derivative responses, correlation with replicated
// borders, smoothing across one axis and differentiating across the other.
// The derivative taps are normalized to unit response on a unit ramp and the
// smoothing taps to unit sum, so constants give exactly zero.
struct GradKernel {
  std::vector<double> smooth, deriv;
  int radius;

  explicit GradKernel(double sigma = 1.4) : radius(static_cast<int>(std::ceil(3.0 * sigma))) {
    smooth.resize(static_cast<size_t>(2 * radius + 1));
    deriv.resize(smooth.size());
    double ssum = 0, dnorm = 0;
    for (int i = -radius; i <= radius; ++i) {
      const double g = std::exp(-0.5 * i * i / (sigma * sigma));
      smooth[static_cast<size_t>(i + radius)] = g;
      deriv[static_cast<size_t>(i + radius)] = static_cast<double>(i) * g;
      ssum += g;
      dnorm += static_cast<double>(i) * i * g;
    }
    for (auto& s : smooth) s /= ssum;
    for (auto& d : deriv) d /= dnorm;
  }
};

inline int clamp_idx(int i, int n) { return i < 0 ? 0 : (i >= n ? n - 1 : i); }

// |gradient| image of one matte. Separable passes: horizontal filter first,
// then vertical, per output channel (x-derivative and y-derivative). The
// derivative taps are antisymmetric, so they are applied to tap-pair
// differences; constant inputs then cancel exactly rather than to rounding.
template <class T>
std::vector<double> gradient_magnitude(const Ten<T>& a, const GradKernel& k) {
  const int h = a.dim(1), w = a.dim(2), r = k.radius;
  std::vector<double> dx_row(static_cast<size_t>(h) * w), sm_row(static_cast<size_t>(h) * w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const size_t row = static_cast<size_t>(y) * w;
      double dv = 0;
      double sv = k.smooth[static_cast<size_t>(r)] * static_cast<double>(a.data()[row + x]);
      for (int i = 1; i <= r; ++i) {
        const double hi = static_cast<double>(a.data()[row + clamp_idx(x + i, w)]);
        const double lo = static_cast<double>(a.data()[row + clamp_idx(x - i, w)]);
        dv += k.deriv[static_cast<size_t>(r + i)] * (hi - lo);
        sv += k.smooth[static_cast<size_t>(r + i)] * (hi + lo);
      }
      dx_row[row + x] = dv;
      sm_row[row + x] = sv;
    }
  std::vector<double> mag(static_cast<size_t>(h) * w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double gx = k.smooth[static_cast<size_t>(r)] * dx_row[static_cast<size_t>(y) * w + x];
      double gy = 0;
      for (int i = 1; i <= r; ++i) {
        const size_t up = static_cast<size_t>(clamp_idx(y + i, h)) * w + x;
        const size_t dn = static_cast<size_t>(clamp_idx(y - i, h)) * w + x;
        gx += k.smooth[static_cast<size_t>(r + i)] * (dx_row[up] + dx_row[dn]);
        gy += k.deriv[static_cast<size_t>(r + i)] * (sm_row[up] - sm_row[dn]);
      }
      mag[static_cast<size_t>(y) * w + x] = std::sqrt(gx * gx + gy * gy);
    }
  return mag;
}

// 4-connected component labels of the pixels where `in_set` is true.
// Labels are assigned in row-major discovery order starting at 0; -1 marks
// pixels outside the set.
inline std::vector<int> label_components(const std::vector<char>& in_set, int h, int w) {
  std::vector<int> label(in_set.size(), -1);
  int next = 0;
  std::vector<int> stack;
  for (int start = 0; start < h * w; ++start) {
    if (!in_set[static_cast<size_t>(start)] || label[static_cast<size_t>(start)] != -1) continue;
    stack.assign(1, start);
    label[static_cast<size_t>(start)] = next;
    while (!stack.empty()) {
      const int cur = stack.back();
      stack.pop_back();
      const int y = cur / w, x = cur % w;
      const int nb[4] = {cur - w, cur + w, cur - 1, cur + 1};
      const bool ok[4] = {y > 0, y < h - 1, x > 0, x < w - 1};
      for (int d = 0; d < 4; ++d) {
        if (!ok[d] || !in_set[static_cast<size_t>(nb[d])] ||
            label[static_cast<size_t>(nb[d])] != -1)
          continue;
        label[static_cast<size_t>(nb[d])] = next;
        stack.push_back(nb[d]);
      }
    }
    ++next;
  }
  return label;
}

// Connectivity degree phi for each pixel of one matte given the shared
// source region: phi_i = 1 - max(0, alpha_i - l_i) with l_i the largest
// grid threshold whose superlevel component containing i touches omega.
template <class T>
std::vector<double> connectivity_degree(const Ten<T>& a, const std::vector<char>& omega,
                                        double theta_step) {
  const int h = a.dim(1), w = a.dim(2);
  const size_t n = static_cast<size_t>(h) * w;
  std::vector<double> l(n, 0.0);
  const int steps = static_cast<int>(std::floor((1.0 - 1e-9) / theta_step));
  for (int s = 1; s <= steps; ++s) {
    const double theta = s * theta_step;
    std::vector<char> super(n);
    for (size_t i = 0; i < n; ++i)
      super[i] = static_cast<double>(a.data()[i]) >= theta - 1e-12 ? 1 : 0;
    const std::vector<int> label = label_components(super, h, w);
    std::vector<char> touches;
    for (size_t i = 0; i < n; ++i)
      if (omega[i] && label[i] >= 0) {
        if (static_cast<size_t>(label[i]) >= touches.size())
          touches.resize(static_cast<size_t>(label[i]) + 1, 0);
        touches[static_cast<size_t>(label[i])] = 1;
      }
    for (size_t i = 0; i < n; ++i)
      if (label[i] >= 0 && static_cast<size_t>(label[i]) < touches.size() &&
          touches[static_cast<size_t>(label[i])])
        l[i] = theta;
  }
  std::vector<double> phi(n);
  for (size_t i = 0; i < n; ++i)
    phi[i] = 1.0 - std::max(0.0, static_cast<double>(a.data()[i]) - l[i]);
  return phi;
}

}  // namespace detail

// Mean absolute difference over all pixels and frames, x1e3.
template <class T>
double mad_error(const std::vector<Ten<T>>& p, const std::vector<Ten<T>>& g) {
  detail::require_alpha_pair(p, g);
  double acc = 0;
  int64_t n = 0;
  for (size_t t = 0; t < p.size(); ++t) {
    for (size_t i = 0; i < p[t].data().size(); ++i)
      acc += std::abs(static_cast<double>(p[t].data()[i]) - g[t].data()[i]);
    n += static_cast<int64_t>(p[t].data().size());
  }
  return kPixelScale * acc / static_cast<double>(n);
}

// Mean squared difference over all pixels and frames, x1e3.
template <class T>
double mse_error(const std::vector<Ten<T>>& p, const std::vector<Ten<T>>& g) {
  detail::require_alpha_pair(p, g);
  double acc = 0;
  int64_t n = 0;
  for (size_t t = 0; t < p.size(); ++t) {
    for (size_t i = 0; i < p[t].data().size(); ++i) {
      const double d = static_cast<double>(p[t].data()[i]) - g[t].data()[i];
      acc += d * d;
    }
    n += static_cast<int64_t>(p[t].data().size());
  }
  return kPixelScale * acc / static_cast<double>(n);
}

// Mean squared difference of Gaussian-derivative gradient magnitudes
// (sigma 1.4, radius ceil(3 sigma)), averaged over frames, x1e3.
template <class T>
double grad_error(const std::vector<Ten<T>>& p, const std::vector<Ten<T>>& g) {
  detail::require_alpha_pair(p, g);
  const detail::GradKernel kernel;
  double per_frame_sum = 0;
  for (size_t t = 0; t < p.size(); ++t) {
    const auto mp = detail::gradient_magnitude(p[t], kernel);
    const auto mg = detail::gradient_magnitude(g[t], kernel);
    double acc = 0;
    for (size_t i = 0; i < mp.size(); ++i) {
      const double d = mp[i] - mg[i];
      acc += d * d;
    }
    per_frame_sum += acc / static_cast<double>(mp.size());
  }
  return kPixelScale * per_frame_sum / static_cast<double>(p.size());
}

// Connectivity error of a single frame pair, x1e3. The source region is the
// largest 4-connected component of pixels opaque (>= 0.9) in both mattes;
// ties pick the component discovered first in row-major order. Returns
// nullopt when no pixel qualifies.
template <class T>
std::optional<double> conn_error(const Ten<T>& p, const Ten<T>& g, double theta_step = 0.1) {
  require_dims(p.ndim() == 3 && p.dim(0) == 1 && p.shape() == g.shape(),
               "conn: frames must be matching [1,H,W]");
  require(theta_step > 0 && theta_step < 1, "conn: theta_step must lie in (0,1)");
  const int h = p.dim(1), w = p.dim(2);
  const size_t n = static_cast<size_t>(h) * w;

  std::vector<char> opaque(n);
  for (size_t i = 0; i < n; ++i)
    opaque[i] = static_cast<double>(p.data()[i]) >= 0.9 && static_cast<double>(g.data()[i]) >= 0.9
                    ? 1
                    : 0;
  const std::vector<int> label = detail::label_components(opaque, h, w);
  std::vector<int64_t> sizes;
  for (size_t i = 0; i < n; ++i)
    if (label[i] >= 0) {
      if (static_cast<size_t>(label[i]) >= sizes.size())
        sizes.resize(static_cast<size_t>(label[i]) + 1, 0);
      ++sizes[static_cast<size_t>(label[i])];
    }
  if (sizes.empty()) return std::nullopt;
  int best = 0;
  for (size_t c = 1; c < sizes.size(); ++c)
    if (sizes[c] > sizes[static_cast<size_t>(best)]) best = static_cast<int>(c);
  std::vector<char> omega(n);
  for (size_t i = 0; i < n; ++i) omega[i] = label[i] == best ? 1 : 0;

  const auto phi_p = detail::connectivity_degree(p, omega, theta_step);
  const auto phi_g = detail::connectivity_degree(g, omega, theta_step);
  double acc = 0;
  for (size_t i = 0; i < n; ++i) acc += std::abs(phi_p[i] - phi_g[i]);
  return kPixelScale * acc / static_cast<double>(n);
}

// Temporal consistency: mean over steps of the RMS difference between the
// two sequences' frame-to-frame changes, x1e2. Undefined on single frames.
template <class T>
std::optional<double> dtssd(const std::vector<Ten<T>>& p, const std::vector<Ten<T>>& g) {
  detail::require_alpha_pair(p, g);
  if (p.size() < 2) return std::nullopt;
  double acc = 0;
  for (size_t t = 1; t < p.size(); ++t) {
    double frame = 0;
    for (size_t i = 0; i < p[t].data().size(); ++i) {
      const double dp = static_cast<double>(p[t].data()[i]) - p[t - 1].data()[i];
      const double dg = static_cast<double>(g[t].data()[i]) - g[t - 1].data()[i];
      frame += (dp - dg) * (dp - dg);
    }
    acc += std::sqrt(frame / static_cast<double>(p[t].data().size()));
  }
  return kTemporalScale * acc / static_cast<double>(p.size() - 1);
}

// Full report for one sequence. Connectivity averages the frames where it is
// defined and is absent if no frame defines it (or when disabled).
template <class T>
MetricReport evaluate_sequence(const std::vector<Ten<T>>& p, const std::vector<Ten<T>>& g,
                               bool with_conn = true) {
  MetricReport r;
  r.mad = mad_error(p, g);
  r.mse = mse_error(p, g);
  r.grad = grad_error(p, g);
  r.dtssd = dtssd(p, g);
  if (with_conn) {
    double acc = 0;
    int defined = 0;
    for (size_t t = 0; t < p.size(); ++t)
      if (auto c = conn_error(p[t], g[t])) {
        acc += *c;
        ++defined;
      }
    if (defined > 0) r.conn = acc / defined;
  }
  return r;
}

// Mean of per-sequence reports. Optional metrics average over the reports
// that define them.
inline MetricReport aggregate_reports(const std::vector<MetricReport>& reports) {
  require(!reports.empty(), "metrics: nothing to aggregate");
  MetricReport out;
  double conn_acc = 0, dt_acc = 0;
  int conn_n = 0, dt_n = 0;
  for (const auto& r : reports) {
    out.mad += r.mad;
    out.mse += r.mse;
    out.grad += r.grad;
    if (r.conn) {
      conn_acc += *r.conn;
      ++conn_n;
    }
    if (r.dtssd) {
      dt_acc += *r.dtssd;
      ++dt_n;
    }
  }
  const double n = static_cast<double>(reports.size());
  out.mad /= n;
  out.mse /= n;
  out.grad /= n;
  if (conn_n > 0) out.conn = conn_acc / conn_n;
  if (dt_n > 0) out.dtssd = dt_acc / dt_n;
  return out;
}

}  // namespace vmatt
