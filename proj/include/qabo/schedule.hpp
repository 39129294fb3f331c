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

// Parametrized control functions u(t) on [0, t_final].
//
// Every family except BangBang interpolates from u(0) = 0 to u(t_final) = 1;
// the OneMinus transform flips that to 1 -> 0. Real, Cubic and LowPass take n
// knot values placed at t_j = j t_final / (n + 1); Fourier adds n sine
// harmonics to the linear ramp; BangBang is a single constant pulse over one
// half of the protocol whose area equals its parameter.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "qabo/error.hpp"

namespace qabo {

enum class Family { Linear, Real, Cubic, LowPass, Fourier, BangBang };
enum class Transform { Identity, OneMinus };
enum class PulseWindow { FirstHalf, SecondHalf };

inline std::string_view to_string(Family f) {
  switch (f) {
    case Family::Linear: return "linear";
    case Family::Real: return "real";
    case Family::Cubic: return "cubic";
    case Family::LowPass: return "lowpass";
    case Family::Fourier: return "fourier";
    case Family::BangBang: return "bangbang";
  }
  return "?";
}

inline Family parse_family(std::string_view name) {
  for (Family f : {Family::Linear, Family::Real, Family::Cubic, Family::LowPass,
                   Family::Fourier, Family::BangBang}) {
    if (to_string(f) == name) return f;
  }
  throw InvalidArgument("unknown schedule family '" + std::string(name) + "'");
}

struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  double width() const { return hi - lo; }
  bool contains(double x, double tol = 1e-12) const {
    return x >= lo - tol && x <= hi + tol;
  }
  friend bool operator==(const Interval&, const Interval&) = default;
};

struct ScheduleSpec {
  Family family = Family::Linear;
  int n_params = 0;
  double zeta = 2.0;
  double t_final = 1.0;
  Transform transform = Transform::Identity;
  PulseWindow pulse = PulseWindow::FirstHalf;  // BangBang only

  void validate() const {
    if (!(t_final > 0.0)) throw InvalidArgument("schedule t_final must be positive");
    if (!(zeta > 0.0)) throw InvalidArgument("schedule zeta must be positive");
    switch (family) {
      case Family::Linear:
        if (n_params != 0) throw InvalidArgument("linear schedule takes no parameters");
        break;
      case Family::BangBang:
        if (n_params != 1) throw InvalidArgument("bang-bang schedule takes one parameter per pulse");
        break;
      default:
        if (n_params < 1) throw InvalidArgument("schedule needs at least one parameter");
    }
  }
};

// Parameter bounds for a family. Knot families allow each knot to wander
// zeta knot-spacings away from the linear ramp; Fourier harmonics shrink as
// 1/j; a bang-bang pulse area lies in [0, 2 pi].
inline std::vector<Interval> bounds(const ScheduleSpec& spec) {
  spec.validate();
  std::vector<Interval> out;
  const int n = spec.n_params;
  out.reserve(static_cast<std::size_t>(n));
  switch (spec.family) {
    case Family::Linear:
      break;
    case Family::Real:
    case Family::Cubic:
    case Family::LowPass:
      for (int j = 1; j <= n; ++j) {
        out.push_back({(j - spec.zeta) / (n + 1), (j + spec.zeta) / (n + 1)});
      }
      break;
    case Family::Fourier:
      for (int j = 1; j <= n; ++j) out.push_back({-1.0 / j, 1.0 / j});
      break;
    case Family::BangBang:
      out.push_back({0.0, 2.0 * std::numbers::pi});
      break;
  }
  return out;
}

class ParameterVector {
 public:
  ParameterVector() = default;
  ParameterVector(std::vector<double> values, std::vector<Interval> bounds)
      : values_(std::move(values)), bounds_(std::move(bounds)) {
    if (values_.size() != bounds_.size()) {
      throw InvalidArgument("parameter count " + std::to_string(values_.size()) +
                            " does not match bound count " +
                            std::to_string(bounds_.size()));
    }
    for (std::size_t i = 0; i < values_.size(); ++i) {
      if (!bounds_[i].contains(values_[i])) {
        throw InvalidArgument("parameter " + std::to_string(i) + " = " +
                              std::to_string(values_[i]) + " outside [" +
                              std::to_string(bounds_[i].lo) + ", " +
                              std::to_string(bounds_[i].hi) + "]");
      }
    }
  }
  ParameterVector(const ScheduleSpec& spec, std::vector<double> values)
      : ParameterVector(std::move(values), qabo::bounds(spec)) {}

  std::span<const double> values() const { return values_; }
  std::span<const Interval> bounds() const { return bounds_; }
  std::size_t size() const { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }

 private:
  std::vector<double> values_;
  std::vector<Interval> bounds_;
};

// Parameters that reproduce u(t) = t / t_final.
inline ParameterVector linear_equivalent_params(const ScheduleSpec& spec) {
  spec.validate();
  std::vector<double> v(static_cast<std::size_t>(spec.n_params), 0.0);
  switch (spec.family) {
    case Family::Real:
    case Family::Cubic:
    case Family::LowPass:
      for (int j = 1; j <= spec.n_params; ++j) v[j - 1] = double(j) / (spec.n_params + 1);
      break;
    case Family::Fourier:
      break;
    case Family::Linear:
    case Family::BangBang:
      throw UnsupportedFamily("no linear-equivalent parameters for family '" +
                              std::string(to_string(spec.family)) + "'");
  }
  return ParameterVector(spec, std::move(v));
}

namespace detail {

// Second derivatives of the natural cubic spline through equally spaced knots.
inline std::vector<double> natural_spline_moments(std::span<const double> y, double h) {
  const std::size_t m = y.size();
  std::vector<double> moments(m, 0.0);
  if (m < 3) return moments;
  const std::size_t n = m - 2;
  std::vector<double> diag(n, 4.0), rhs(n);
  for (std::size_t i = 0; i < n; ++i) {
    rhs[i] = 6.0 * (y[i + 2] - 2.0 * y[i + 1] + y[i]) / (h * h);
  }
  // Thomas algorithm; off-diagonals are 1.
  for (std::size_t i = 1; i < n; ++i) {
    const double w = 1.0 / diag[i - 1];
    diag[i] -= w;
    rhs[i] -= w * rhs[i - 1];
  }
  moments[n] = rhs[n - 1] / diag[n - 1];
  for (std::size_t i = n - 1; i-- > 0;) {
    moments[i + 1] = (rhs[i] - moments[i + 2]) / diag[i];
  }
  return moments;
}

}  // namespace detail

// A schedule bound to concrete parameters. Immutable; operator() is pure.
class Schedule {
 public:
  static constexpr std::size_t kLowPassGrid = 1024;

  Schedule() : Schedule(ScheduleSpec{}, ParameterVector{}) {}

  Schedule(ScheduleSpec spec, ParameterVector theta)
      : spec_(spec), theta_(std::move(theta)) {
    spec_.validate();
    const auto expected = qabo::bounds(spec_);
    if (theta_.size() != expected.size()) {
      throw InvalidArgument("schedule '" + std::string(to_string(spec_.family)) +
                            "' expects " + std::to_string(expected.size()) +
                            " parameters, got " + std::to_string(theta_.size()));
    }
    for (std::size_t i = 0; i < theta_.size(); ++i) {
      if (!expected[i].contains(theta_[i])) {
        throw InvalidArgument("schedule parameter " + std::to_string(i) + " out of bounds");
      }
    }
    if (is_knot_family()) {
      knots_.reserve(theta_.size() + 2);
      knots_.push_back(0.0);
      for (double v : theta_.values()) knots_.push_back(v);
      knots_.push_back(1.0);
    }
    if (spec_.family == Family::Cubic) {
      moments_ = detail::natural_spline_moments(knots_, knot_spacing());
    }
    if (spec_.family == Family::LowPass) build_lowpass();
  }

  Schedule(ScheduleSpec spec, std::vector<double> theta)
      : Schedule(spec, ParameterVector(spec, std::move(theta))) {}

  const ScheduleSpec& spec() const { return spec_; }
  const ParameterVector& params() const { return theta_; }

  double operator()(double t) const {
    const double tf = spec_.t_final;
    const double slack = 1e-9 * tf;
    if (!(t >= -slack && t <= tf + slack)) {
      throw InvalidArgument("schedule evaluated at t = " + std::to_string(t) +
                            " outside [0, " + std::to_string(tf) + "]");
    }
    t = std::clamp(t, 0.0, tf);
    const double u = raw(t);
    return spec_.transform == Transform::OneMinus ? 1.0 - u : u;
  }

  // Jump locations of piecewise-constant schedules; integrators restart there.
  std::vector<double> breakpoints() const {
    if (spec_.family == Family::BangBang) return {0.5 * spec_.t_final};
    return {};
  }

 private:
  bool is_knot_family() const {
    return spec_.family == Family::Real || spec_.family == Family::Cubic ||
           spec_.family == Family::LowPass;
  }
  double knot_spacing() const { return spec_.t_final / (theta_.size() + 1); }

  double linear_interp(double t) const {
    const double h = knot_spacing();
    const std::size_t last = knots_.size() - 1;
    const std::size_t k = std::min(static_cast<std::size_t>(t / h), last - 1);
    const double w = t / h - double(k);
    return knots_[k] + w * (knots_[k + 1] - knots_[k]);
  }

  double cubic_interp(double t) const {
    const double h = knot_spacing();
    const std::size_t last = knots_.size() - 1;
    const std::size_t k = std::min(static_cast<std::size_t>(t / h), last - 1);
    const double a = (double(k + 1) * h - t) / h;
    const double b = 1.0 - a;
    return a * knots_[k] + b * knots_[k + 1] +
           ((a * a * a - a) * moments_[k] + (b * b * b - b) * moments_[k + 1]) * h * h / 6.0;
  }

  // Zero-phase Gaussian smoothing of the piecewise-linear schedule, with
  // odd reflection about both endpoints and an affine endpoint correction.
  void build_lowpass() {
    const std::size_t m = kLowPassGrid;
    const double dt = spec_.t_final / double(m - 1);
    std::vector<double> raw_grid(m);
    for (std::size_t i = 0; i < m; ++i) raw_grid[i] = linear_interp(std::min(i * dt, spec_.t_final));

    const double sigma = double(m - 1) / (4.0 * double(theta_.size() + 1));
    const auto half = static_cast<std::ptrdiff_t>(std::ceil(4.0 * sigma));
    std::vector<double> kernel(2 * half + 1);
    double norm = 0.0;
    for (std::ptrdiff_t k = -half; k <= half; ++k) {
      kernel[k + half] = std::exp(-0.5 * double(k * k) / (sigma * sigma));
      norm += kernel[k + half];
    }
    for (double& w : kernel) w /= norm;

    const auto last = static_cast<std::ptrdiff_t>(m - 1);
    auto sample = [&](std::ptrdiff_t i) {
      if (i < 0) return 2.0 * raw_grid[0] - raw_grid[static_cast<std::size_t>(-i)];
      if (i > last) return 2.0 * raw_grid[last] - raw_grid[static_cast<std::size_t>(2 * last - i)];
      return raw_grid[static_cast<std::size_t>(i)];
    };
    grid_.assign(m, 0.0);
    for (std::ptrdiff_t i = 0; i <= last; ++i) {
      double acc = 0.0;
      for (std::ptrdiff_t k = -half; k <= half; ++k) {
        // Reflection is only valid one kernel width deep.
        const std::ptrdiff_t j = std::clamp<std::ptrdiff_t>(i + k, -last, 2 * last);
        acc += kernel[k + half] * sample(j);
      }
      grid_[i] = acc;
    }
    const double g0 = grid_.front();
    const double g1 = grid_.back();
    const double scale = (g1 - g0) != 0.0 ? 1.0 / (g1 - g0) : 1.0;
    for (double& g : grid_) g = (g - g0) * scale;
    grid_.front() = 0.0;
    grid_.back() = 1.0;
  }

  double lowpass_interp(double t) const {
    const double x = t / spec_.t_final * double(grid_.size() - 1);
    const std::size_t k = std::min(static_cast<std::size_t>(x), grid_.size() - 2);
    const double w = x - double(k);
    return grid_[k] + w * (grid_[k + 1] - grid_[k]);
  }

  double raw(double t) const {
    const double tf = spec_.t_final;
    switch (spec_.family) {
      case Family::Linear:
        return t / tf;
      case Family::Real:
        return linear_interp(t);
      case Family::Cubic:
        return cubic_interp(t);
      case Family::LowPass:
        return lowpass_interp(t);
      case Family::Fourier: {
        double u = t / tf;
        for (std::size_t j = 0; j < theta_.size(); ++j) {
          u += theta_[j] * std::sin(double(j + 1) * std::numbers::pi * t / tf);
        }
        return u;
      }
      case Family::BangBang: {
        const bool first = t < 0.5 * tf;
        const bool on = spec_.pulse == PulseWindow::FirstHalf ? first : !first;
        return on ? 2.0 * theta_[0] / tf : 0.0;
      }
    }
    return 0.0;
  }

  ScheduleSpec spec_;
  ParameterVector theta_;
  std::vector<double> knots_;
  std::vector<double> moments_;
  std::vector<double> grid_;
};

inline double evaluate(const ScheduleSpec& spec, const ParameterVector& theta, double t) {
  return Schedule(spec, theta)(t);
}

}  // namespace qabo
