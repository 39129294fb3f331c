// Copyright 2026 The qabo Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Adaptive Dormand-Prince 5(4) integration for Eigen-valued ODEs.
//
// State may be any dense Eigen vector or matrix (complex or real). The
// right-hand side writes into a preallocated derivative:
//
//   rhs(double t, const State& y, State& dydt)
//
// Error control uses the mixed absolute/relative RMS norm of Hairer,
// Norsett and Wanner.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "qabo/error.hpp"

namespace qabo {

struct IntegratorOptions {
  double rtol = 1e-8;
  double atol = 1e-10;
  double initial_step = 0.0;  // 0 picks a step from the local derivative
  double max_step = std::numeric_limits<double>::infinity();
  std::size_t max_steps = 50'000'000;
  // Rescale y to unit 2-norm after every accepted step. Only valid for
  // linear homogeneous right-hand sides (the FSAL stage is rescaled too).
  bool renormalize = false;
};

struct IntegratorStats {
  std::size_t accepted = 0;
  std::size_t rejected = 0;
  std::size_t rhs_calls = 0;
};

namespace detail {

template <class State>
double rms_error(const State& err, const State& y0, const State& y1, const IntegratorOptions& opt) {
  const auto scale = (opt.atol + opt.rtol * y0.array().abs().max(y1.array().abs())).eval();
  const double n = static_cast<double>(err.size());
  return std::sqrt((err.array().abs() / scale).square().sum() / n);
}

struct NoObserver {
  template <class State>
  void operator()(double, const State&) const {}
};

}  // namespace detail

// Integrates y from t0 to t1. The observer sees every accepted (t, y),
// including the initial point.
template <class State, class Rhs, class Observer = detail::NoObserver>
State integrate_dopri5(Rhs&& rhs, State y, double t0, double t1,
                       const IntegratorOptions& opt = {}, Observer&& observer = {},
                       IntegratorStats* stats = nullptr) {
  // Dormand-Prince tableau.
  constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  constexpr double a21 = 1.0 / 5;
  constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                   a54 = -212.0 / 729;
  constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                   a64 = 49.0 / 176, a65 = -5103.0 / 18656;
  constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                   b5 = -2187.0 / 6784, b6 = 11.0 / 84;
  constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                   e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;

  IntegratorStats local;
  IntegratorStats& st = stats ? *stats : local;
  observer(t0, y);
  const double span = t1 - t0;
  if (span == 0.0) return y;
  if (span < 0.0) throw InvalidArgument("integration interval must be forward in time");

  State k1 = y, k2 = y, k3 = y, k4 = y, k5 = y, k6 = y, k7 = y, tmp = y, y_new = y;
  rhs(t0, y, k1);
  ++st.rhs_calls;

  double h = opt.initial_step;
  if (h <= 0.0) {
    // Hairer's starting-step heuristic.
    const auto scale = (opt.atol + opt.rtol * y.array().abs()).eval();
    const double d0 = std::sqrt((y.array().abs() / scale).square().mean());
    const double d1 = std::sqrt((k1.array().abs() / scale).square().mean());
    double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
    h0 = std::min(h0, span);
    tmp = y + h0 * k1;
    rhs(t0 + h0, tmp, k2);
    ++st.rhs_calls;
    const double d2 = std::sqrt(((k2 - k1).array().abs() / scale).square().mean()) / h0;
    const double h1 = std::max(d1, d2) <= 1e-15 ? std::max(1e-6, h0 * 1e-3)
                                                : std::pow(0.01 / std::max(d1, d2), 0.2);
    h = std::min(100.0 * h0, h1);
  }
  h = std::min({h, span, opt.max_step});

  double t = t0;
  const double h_min = 16.0 * std::numeric_limits<double>::epsilon() * std::max(std::abs(t0), std::abs(t1));
  std::size_t steps = 0;
  while (t < t1) {
    if (++steps > opt.max_steps) throw IntegratorError("integrator exceeded max_steps", t);
    bool last = false;
    if (t + h >= t1 || t1 - (t + h) < h_min) {
      h = t1 - t;
      last = true;
    }
    if (h < h_min) throw IntegratorError("integrator step size underflow", t);

    tmp = y + h * (a21 * k1);
    rhs(t + c2 * h, tmp, k2);
    tmp = y + h * (a31 * k1 + a32 * k2);
    rhs(t + c3 * h, tmp, k3);
    tmp = y + h * (a41 * k1 + a42 * k2 + a43 * k3);
    rhs(t + c4 * h, tmp, k4);
    tmp = y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4);
    rhs(t + c5 * h, tmp, k5);
    tmp = y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5);
    rhs(t + h, tmp, k6);
    y_new = y + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
    const double t_new = last ? t1 : t + h;
    rhs(t_new, y_new, k7);
    st.rhs_calls += 6;

    tmp = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
    const double err = detail::rms_error(tmp, y, y_new, opt);
    if (!std::isfinite(err)) throw IntegratorError("integrator produced a non-finite state", t);

    if (err <= 1.0) {
      t = t_new;
      y.swap(y_new);
      k1.swap(k7);  // first-same-as-last
      if (opt.renormalize) {
        const double n = y.norm();
        y /= n;
        k1 /= n;
      }
      ++st.accepted;
      observer(t, y);
      const double fac = err == 0.0 ? 5.0 : std::min(5.0, 0.9 * std::pow(err, -0.2));
      h = std::min(h * fac, opt.max_step);
    } else {
      ++st.rejected;
      h *= std::max(0.2, 0.9 * std::pow(err, -0.2));
    }
  }
  return y;
}

// Integrates across a sorted list of interior breakpoints, restarting the
// stepper at each so that discontinuous controls are never stepped over.
template <class State, class Rhs, class Observer = detail::NoObserver>
State integrate_piecewise(Rhs&& rhs, State y, double t0, double t1,
                          std::span<const double> breakpoints,
                          const IntegratorOptions& opt = {}, Observer&& observer = {},
                          IntegratorStats* stats = nullptr) {
  std::vector<double> cuts;
  for (double b : breakpoints) {
    if (b > t0 && b < t1) cuts.push_back(b);
  }
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  cuts.push_back(t1);
  double start = t0;
  for (double stop : cuts) {
    // The rhs only ever sees times strictly inside [start, stop) so that
    // controls are sampled on this segment's side of a jump.
    const double inner = std::nextafter(stop, start);
    auto segment_rhs = [&](double t, const State& yy, State& dy) {
      rhs(std::clamp(t, start, inner), yy, dy);
    };
    y = integrate_dopri5(segment_rhs, std::move(y), start, stop, opt, observer, stats);
    start = stop;
  }
  return y;
}

}  // namespace qabo
