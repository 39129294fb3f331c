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

#include <cmath>
#include <numbers>
#include <vector>

#include <gtest/gtest.h>

#include "qabo/rng.hpp"
#include "qabo/schedule.hpp"

namespace qabo {
namespace {

ScheduleSpec spec(Family f, int n, double tf = 1.0, double zeta = 2.0) {
  ScheduleSpec s;
  s.family = f;
  s.n_params = n;
  s.t_final = tf;
  s.zeta = zeta;
  return s;
}

std::vector<double> random_params(const ScheduleSpec& s, Rng& rng) {
  std::vector<double> v;
  for (const auto& b : bounds(s)) v.push_back(uniform(rng, b.lo, b.hi));
  return v;
}

TEST(ScheduleBounds, KnotFamiliesFollowZetaFormula) {
  const auto b = bounds(spec(Family::Real, 4));
  ASSERT_EQ(b.size(), 4u);
  EXPECT_DOUBLE_EQ(b[0].lo, -1.0 / 5.0);
  EXPECT_DOUBLE_EQ(b[0].hi, 3.0 / 5.0);
  for (int j = 1; j <= 4; ++j) {
    EXPECT_DOUBLE_EQ(b[j - 1].lo, (j - 2.0) / 5.0);
    EXPECT_DOUBLE_EQ(b[j - 1].hi, (j + 2.0) / 5.0);
  }
  for (Family f : {Family::Cubic, Family::LowPass}) {
    const auto other = bounds(spec(f, 4));
    for (std::size_t i = 0; i < 4; ++i) {
      EXPECT_DOUBLE_EQ(other[i].lo, b[i].lo);
      EXPECT_DOUBLE_EQ(other[i].hi, b[i].hi);
    }
  }
}

TEST(ScheduleBounds, FourierBangBangLinear) {
  const auto f = bounds(spec(Family::Fourier, 3));
  EXPECT_DOUBLE_EQ(f[0].lo, -1.0);
  EXPECT_DOUBLE_EQ(f[0].hi, 1.0);
  EXPECT_DOUBLE_EQ(f[2].hi, 1.0 / 3.0);
  const auto bb = bounds(spec(Family::BangBang, 1));
  EXPECT_DOUBLE_EQ(bb[0].lo, 0.0);
  EXPECT_DOUBLE_EQ(bb[0].hi, 2.0 * std::numbers::pi);
  EXPECT_TRUE(bounds(spec(Family::Linear, 0)).empty());
}

TEST(ScheduleSpecValidation, RejectsBadShapes) {
  EXPECT_THROW(bounds(spec(Family::Linear, 2)), InvalidArgument);
  EXPECT_THROW(bounds(spec(Family::Real, 0)), InvalidArgument);
  EXPECT_THROW(bounds(spec(Family::BangBang, 2)), InvalidArgument);
  EXPECT_THROW(bounds(spec(Family::Real, 2, 0.0)), InvalidArgument);
  EXPECT_THROW(bounds(spec(Family::Real, 2, 1.0, 0.0)), InvalidArgument);
}

TEST(ScheduleEvaluate, LinearAndKnotValue) {
  EXPECT_DOUBLE_EQ(Schedule(spec(Family::Linear, 0, 4.0), std::vector<double>{})(1.0), 0.25);
  const Schedule real(spec(Family::Real, 1, 2.0), std::vector<double>{0.5});
  EXPECT_DOUBLE_EQ(real(1.0), 0.5);
  // Linear interpolation between (0, 0) and (1, 0.5).
  EXPECT_DOUBLE_EQ(real(0.5), 0.25);
}

TEST(ScheduleEvaluate, FourierWithZeroCoefficientsIsLinear) {
  const Schedule f(spec(Family::Fourier, 3, 3.0), std::vector<double>{0.0, 0.0, 0.0});
  for (double t : {0.0, 0.4, 1.7, 3.0}) EXPECT_NEAR(f(t), t / 3.0, 1e-15);
}

TEST(ScheduleEvaluate, FourierHarmonicsVanishAtTheirZeroCrossings) {
  const double tf = 2.0;
  for (int j = 1; j <= 4; ++j) {
    std::vector<double> theta(4, 0.0);
    theta[std::size_t(j - 1)] = 0.5 / j;
    const Schedule f(spec(Family::Fourier, 4, tf), theta);
    for (int k = 0; k <= j; ++k) {
      const double t = k * tf / j;
      EXPECT_NEAR(f(t), t / tf, 1e-12) << "j=" << j << " k=" << k;
    }
  }
}

TEST(ScheduleEvaluate, BangBangPulseAreaIsTheta) {
  ScheduleSpec s = spec(Family::BangBang, 1, 2.0);
  s.pulse = PulseWindow::FirstHalf;
  const Schedule bb(s, std::vector<double>{std::numbers::pi});
  EXPECT_DOUBLE_EQ(bb(0.5), std::numbers::pi);
  EXPECT_DOUBLE_EQ(bb(1.5), 0.0);
  // Midpoint-rule area over the whole interval.
  const int n = 20000;
  double area = 0.0;
  for (int i = 0; i < n; ++i) area += bb((i + 0.5) * 2.0 / n) * 2.0 / n;
  EXPECT_NEAR(area, std::numbers::pi, 1e-9);

  s.pulse = PulseWindow::SecondHalf;
  const Schedule late(s, std::vector<double>{1.0});
  EXPECT_DOUBLE_EQ(late(0.5), 0.0);
  EXPECT_DOUBLE_EQ(late(1.5), 1.0);
  ASSERT_EQ(late.breakpoints().size(), 1u);
  EXPECT_DOUBLE_EQ(late.breakpoints()[0], 1.0);
}

TEST(ScheduleEvaluate, OneMinusTransform) {
  ScheduleSpec s = spec(Family::Real, 2, 3.0);
  const std::vector<double> theta{0.1, 0.9};
  const Schedule plain(s, theta);
  s.transform = Transform::OneMinus;
  const Schedule flipped(s, theta);
  for (double t : {0.0, 0.3, 1.1, 2.9, 3.0}) EXPECT_DOUBLE_EQ(flipped(t), 1.0 - plain(t));
  EXPECT_DOUBLE_EQ(flipped(0.0), 1.0);
  EXPECT_DOUBLE_EQ(flipped(3.0), 0.0);
}

TEST(ScheduleEvaluate, RejectsTimesOutsideWindowAndBadParameters) {
  const Schedule s(spec(Family::Real, 1), std::vector<double>{0.5});
  EXPECT_THROW(s(-0.1), InvalidArgument);
  EXPECT_THROW(s(1.1), InvalidArgument);
  EXPECT_THROW(Schedule(spec(Family::Real, 1), std::vector<double>{2.0}), InvalidArgument);
  EXPECT_THROW(Schedule(spec(Family::Real, 2), std::vector<double>{0.5}), InvalidArgument);
}

TEST(ScheduleProperties, BoundaryConditionsForRandomParameters) {
  Rng rng(7);
  for (Family f : {Family::Real, Family::Cubic, Family::LowPass, Family::Fourier}) {
    for (int n = 1; n <= 6; ++n) {
      for (int rep = 0; rep < 20; ++rep) {
        const ScheduleSpec s = spec(f, n, 0.5 + 3.0 * uniform01(rng));
        const Schedule u(s, random_params(s, rng));
        EXPECT_LE(std::abs(u(0.0)), 1e-12) << to_string(f) << " n=" << n;
        EXPECT_LE(std::abs(u(s.t_final) - 1.0), 1e-12) << to_string(f) << " n=" << n;
        for (int k = 0; k <= 50; ++k) EXPECT_TRUE(std::isfinite(u(k * s.t_final / 50.0)));
      }
    }
  }
}

TEST(ScheduleProperties, CubicAndRealAgreeAtKnots) {
  Rng rng(11);
  for (int n = 1; n <= 6; ++n) {
    const ScheduleSpec r = spec(Family::Real, n, 2.5);
    const ScheduleSpec c = spec(Family::Cubic, n, 2.5);
    const auto theta = random_params(r, rng);
    const Schedule ur(r, theta), uc(c, theta);
    for (int j = 0; j <= n + 1; ++j) {
      const double t = j * 2.5 / (n + 1);
      EXPECT_NEAR(ur(t), uc(t), 1e-12);
    }
  }
}

TEST(ScheduleProperties, CubicIsNaturalAndSmooth) {
  const ScheduleSpec c = spec(Family::Cubic, 3, 1.0);
  const Schedule u(c, std::vector<double>{0.5, 0.1, 0.9});
  const double h = 1e-4;
  auto second = [&](double t) { return (u(t + h) - 2.0 * u(t) + u(t - h)) / (h * h); };
  // Natural end conditions: the second derivative is linear on the end
  // segments, so extrapolate it to the boundary.
  EXPECT_NEAR(2.0 * second(0.01) - second(0.02), 0.0, 1e-5);
  EXPECT_NEAR(2.0 * second(0.99) - second(0.98), 0.0, 1e-5);
  // First derivative continuous across an interior knot.
  const double knot = 0.5;
  const double left = (u(knot) - u(knot - h)) / h;
  const double right = (u(knot + h) - u(knot)) / h;
  EXPECT_NEAR(left, right, 1e-2);
}

TEST(LinearEquivalent, ReproducesTheLinearRamp) {
  const auto p = linear_equivalent_params(spec(Family::Real, 4));
  ASSERT_EQ(p.size(), 4u);
  for (std::size_t j = 0; j < 4; ++j) EXPECT_DOUBLE_EQ(p[j], (j + 1) / 5.0);
  const auto f = linear_equivalent_params(spec(Family::Fourier, 3));
  for (std::size_t j = 0; j < 3; ++j) EXPECT_EQ(f[j], 0.0);

  for (Family fam : {Family::Real, Family::Cubic, Family::Fourier, Family::LowPass}) {
    const ScheduleSpec s = spec(fam, 3, 2.0);
    const Schedule u(s, linear_equivalent_params(s));
    // The Gaussian filter maps a line to itself, so LowPass is exact too
    // up to grid rounding.
    const double tol = fam == Family::LowPass ? 1e-9 : 1e-12;
    for (int k = 0; k <= 40; ++k) EXPECT_NEAR(u(k * 0.05), k * 0.025, tol) << to_string(fam);
  }
}

TEST(LinearEquivalent, UnsupportedFamilies) {
  EXPECT_THROW(linear_equivalent_params(spec(Family::BangBang, 1)), UnsupportedFamily);
  EXPECT_THROW(linear_equivalent_params(spec(Family::Linear, 0)), UnsupportedFamily);
}

TEST(LowPass, SmoothsCorners) {
  const ScheduleSpec r = spec(Family::Real, 1);
  const ScheduleSpec l = spec(Family::LowPass, 1);
  const std::vector<double> theta{0.9};
  const Schedule ur(r, theta), ul(l, theta);
  // The kink at t = 0.5 is rounded off, so the smoothed value sits below it.
  EXPECT_LT(ul(0.5), ur(0.5));
  EXPECT_GT(ul(0.5), 0.5);
}

TEST(ScheduleParse, FamilyNamesRoundTrip) {
  for (Family f : {Family::Linear, Family::Real, Family::Cubic, Family::LowPass, Family::Fourier, Family::BangBang}) {
    EXPECT_EQ(parse_family(to_string(f)), f);
  }
  EXPECT_THROW(parse_family("spline"), InvalidArgument);
}

}  // namespace
}  // namespace qabo
