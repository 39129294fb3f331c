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
#include <stdexcept>
#include <vector>

#include <gtest/gtest.h>

#include "qabo/optimizer.hpp"

namespace qabo {
namespace {

Objective quadratic(double centre, std::size_t* calls = nullptr) {
  return [=](std::span<const double> x, std::uint64_t) {
    if (calls) ++*calls;
    double v = 0;
    for (double xi : x) v -= (xi - centre) * (xi - centre);
    return Evaluation{v, 0.0};
  };
}

SearchSpace unit_space(std::size_t d) {
  SearchSpace s;
  s.bounds.assign(d, Interval{0.0, 1.0});
  return s;
}

// Best value of the objective on a dense grid, the reference for "how close".
double grid_argmax(const Objective& f, double lo, double hi, int points) {
  double best = -1e300, arg = lo;
  for (int i = 0; i < points; ++i) {
    const double x = lo + (hi - lo) * i / (points - 1);
    const double v = f(std::vector<double>{x}, 0).value;
    if (v > best) best = v, arg = x;
  }
  return arg;
}

TEST(Kappa, ScheduleValues) {
  const BOConfig cfg;
  EXPECT_EQ(kappa_schedule(cfg, 1), 2.0);
  EXPECT_EQ(kappa_schedule(cfg, 10), 2.0);
  EXPECT_EQ(kappa_schedule(cfg, 25), 2.0);
  EXPECT_EQ(kappa_schedule(cfg, 50), 0.01);
  EXPECT_NEAR(kappa_schedule(cfg, 30), 2.0 * std::pow(0.005, 0.2), 1e-14);
  EXPECT_NEAR(kappa_schedule(cfg, 30), 0.693, 5e-4);
  for (std::size_t i = 26; i <= 50; ++i) EXPECT_LT(kappa_schedule(cfg, i), kappa_schedule(cfg, i - 1));
  EXPECT_THROW(kappa_schedule(cfg, 0), InvalidArgument);
  EXPECT_THROW(kappa_schedule(cfg, 51), InvalidArgument);
}

TEST(BoConfig, BudgetAndValidation) {
  BOConfig cfg;
  EXPECT_EQ(cfg.budget(true), 60u);
  EXPECT_EQ(cfg.budget(false), 59u);
  cfg.probe_linear_first = false;
  EXPECT_EQ(cfg.budget(true), 59u);
  BOConfig wide;
  wide.n_random_init = 80;
  wide.n_acquisition_iters = 420;
  wide.kappa_decay_start = 210;
  EXPECT_EQ(wide.budget(false), 500u);
  BOConfig bad;
  bad.kappa_end = 3.0;
  EXPECT_THROW(bad.validate(), InvalidArgument);
  bad = BOConfig{};
  bad.kappa_decay_start = 51;
  EXPECT_THROW(bad.validate(), InvalidArgument);
}

TEST(SearchSpaceBuild, ConcatenatesBoundsAndProbe) {
  ScheduleSpec real, fourier, bang;
  real.family = Family::Real;
  real.n_params = 2;
  fourier.family = Family::Fourier;
  fourier.n_params = 1;
  bang.family = Family::BangBang;
  bang.n_params = 1;
  const std::vector<ScheduleSpec> specs{real, fourier};
  const auto space = search_space(specs);
  ASSERT_EQ(space.dimension(), 3u);
  ASSERT_TRUE(space.linear_probe);
  EXPECT_NEAR((*space.linear_probe)[0], 1.0 / 3.0, 1e-15);
  EXPECT_EQ((*space.linear_probe)[2], 0.0);
  const std::vector<ScheduleSpec> mixed{real, bang};
  EXPECT_FALSE(search_space(mixed).linear_probe);
  EXPECT_THROW(SearchSpace{}.validate(), InvalidArgument);
}

TEST(Bo, PhasesBudgetAndKappaTrace) {
  std::size_t calls = 0;
  ScheduleSpec spec;
  spec.family = Family::Real;
  spec.n_params = 2;
  const auto space = search_space(spec);
  BOConfig cfg;
  cfg.seed = 5;
  const auto trace = run_bo(quadratic(0.4, &calls), space, cfg);
  EXPECT_EQ(calls, 60u);
  ASSERT_EQ(trace.evaluations.size(), 60u);
  EXPECT_EQ(trace.evaluations[0].phase, Phase::LinearProbe);
  EXPECT_EQ(trace.evaluations[0].theta, *space.linear_probe);
  for (std::size_t i = 1; i <= 9; ++i) EXPECT_EQ(trace.evaluations[i].phase, Phase::RandomInit);
  for (std::size_t i = 10; i < 60; ++i) {
    const auto& e = trace.evaluations[i];
    EXPECT_EQ(e.phase, Phase::Acquisition);
    ASSERT_TRUE(e.kappa);
    EXPECT_EQ(*e.kappa, kappa_schedule(cfg, i - 9));
    EXPECT_TRUE(e.length_scale && e.signal_variance);
  }
  for (std::size_t i = 0; i < 60; ++i) {
    EXPECT_EQ(trace.evaluations[i].index, i);
    for (std::size_t j = 0; j < 2; ++j) {
      EXPECT_TRUE(space.bounds[j].contains(trace.evaluations[i].theta[j]));
    }
  }
  double best = -1e300;
  for (const auto& e : trace.evaluations) best = std::max(best, e.value);
  EXPECT_EQ(trace.best_value, best);
  EXPECT_EQ(trace.evaluations[trace.best_index].value, best);
  const auto running = trace.best_so_far();
  EXPECT_EQ(running.back(), best);
  for (std::size_t i = 1; i < running.size(); ++i) EXPECT_GE(running[i], running[i - 1]);

  cfg.probe_linear_first = false;
  calls = 0;
  run_bo(quadratic(0.4, &calls), space, cfg);
  EXPECT_EQ(calls, 59u);
}

TEST(Bo, FindsQuadraticOptimum) {
  const auto f = quadratic(0.7);
  const double target = grid_argmax(f, 0.0, 1.0, 100001);
  BOConfig cfg;
  cfg.probe_linear_first = false;
  cfg.n_random_init = 10;
  cfg.n_acquisition_iters = 20;
  cfg.kappa_decay_start = 10;
  for (std::uint64_t seed : {1, 2, 3}) {
    cfg.seed = seed;
    const auto trace = run_bo(f, unit_space(1), cfg);
    EXPECT_NEAR(trace.best_theta[0], target, 0.05) << "seed " << seed;
  }
}

TEST(Bo, ConstantObjective) {
  const Objective flat = [](std::span<const double>, std::uint64_t) { return Evaluation{3.25, 0.0}; };
  BOConfig cfg;
  cfg.n_acquisition_iters = 10;
  cfg.kappa_decay_start = 5;
  const auto trace = run_bo(flat, unit_space(3), cfg);
  EXPECT_EQ(trace.best_value, 3.25);
  EXPECT_EQ(trace.evaluations.size(), 19u);
}

TEST(Bo, DeterministicGivenSeed) {
  // Noisy objective whose noise comes from the evaluation seed.
  const Objective noisy = [](std::span<const double> x, std::uint64_t seed) {
    Rng rng(seed);
    return Evaluation{-(x[0] - 0.3) * (x[0] - 0.3) + 0.01 * uniform(rng, -1, 1), 0.01};
  };
  BOConfig cfg;
  cfg.seed = 99;
  cfg.n_acquisition_iters = 15;
  cfg.kappa_decay_start = 5;
  const auto a = run_bo(noisy, unit_space(2), cfg), b = run_bo(noisy, unit_space(2), cfg);
  ASSERT_EQ(a.evaluations.size(), b.evaluations.size());
  for (std::size_t i = 0; i < a.evaluations.size(); ++i) {
    EXPECT_EQ(a.evaluations[i].theta, b.evaluations[i].theta);
    EXPECT_EQ(a.evaluations[i].value, b.evaluations[i].value);
  }
  cfg.seed = 100;
  const auto c = run_bo(noisy, unit_space(2), cfg);
  EXPECT_NE(a.evaluations[1].theta, c.evaluations[1].theta);
}

TEST(Bo, ObjectiveErrorsCarryTheta) {
  const Objective failing = [](std::span<const double> x, std::uint64_t) -> Evaluation {
    if (x[0] > 0.5) throw std::runtime_error("simulation blew up");
    return {x[0], 0.0};
  };
  BOConfig cfg;
  cfg.seed = 3;
  try {
    run_bo(failing, unit_space(1), cfg);
    FAIL() << "expected an objective error";
  } catch (const ObjectiveError& e) {
    ASSERT_EQ(e.theta().size(), 1u);
    EXPECT_GT(e.theta()[0], 0.5);
    EXPECT_NE(std::string(e.what()).find("blew up"), std::string::npos);
  }
  const Objective nan = [](std::span<const double>, std::uint64_t) { return Evaluation{std::nan(""), 0.0}; };
  EXPECT_THROW(run_random(nan, unit_space(1), 2, 0), ObjectiveError);
}

TEST(Spsa, ConvergesOnQuadratic) {
  const auto f = quadratic(0.7);
  const double target = grid_argmax(f, 0.0, 1.0, 100001);
  SPSAConfig cfg;
  cfg.seed = 4;
  std::size_t calls = 0;
  const auto trace = run_spsa(quadratic(0.7, &calls), unit_space(1), cfg, 200);
  EXPECT_EQ(calls, 200u);
  ASSERT_TRUE(trace.final_theta);
  EXPECT_NEAR((*trace.final_theta)[0], target, 0.05);
  EXPECT_NEAR(trace.best_theta[0], target, 0.05);
  for (const auto& e : trace.evaluations) EXPECT_EQ(e.phase, Phase::Spsa);
  // Odd budgets round down to whole steps.
  calls = 0;
  run_spsa(quadratic(0.7, &calls), unit_space(1), cfg, 7);
  EXPECT_EQ(calls, 6u);
}

TEST(Spsa, ZeroGainNeverMoves) {
  SPSAConfig cfg;
  cfg.a = 0.0;
  cfg.initial = std::vector<double>{0.25, 0.6};
  const auto trace = run_spsa(quadratic(0.9), unit_space(2), cfg, 40);
  EXPECT_EQ(*trace.final_theta, *cfg.initial);
  // Every probe sits within c of the unchanged iterate.
  for (const auto& e : trace.evaluations) {
    EXPECT_LE(std::abs(e.theta[0] - 0.25), cfg.c + 1e-15);
    EXPECT_LE(std::abs(e.theta[1] - 0.6), cfg.c + 1e-15);
  }
  EXPECT_THROW(run_spsa(quadratic(0.9), unit_space(2), cfg, 1), InvalidArgument);
  cfg.initial = std::vector<double>{2.0, 0.0};
  EXPECT_THROW(run_spsa(quadratic(0.9), unit_space(2), cfg, 4), InvalidArgument);
}

TEST(RandomSearch, SingleDrawAndDenseSampling) {
  const auto one = run_random(quadratic(0.7), unit_space(1), 1, 8);
  ASSERT_EQ(one.evaluations.size(), 1u);
  EXPECT_EQ(one.best_theta, one.evaluations[0].theta);
  EXPECT_EQ(one.evaluations[0].phase, Phase::RandomSearch);
  // P(no draw within 0.01 of the optimum) = 0.98^1000, about 2e-9.
  for (std::uint64_t seed : {1, 2, 3, 4, 5}) {
    const auto trace = run_random(quadratic(0.7), unit_space(1), 1000, seed);
    EXPECT_NEAR(trace.best_theta[0], 0.7, 0.01);
  }
  EXPECT_EQ(run_random(quadratic(0.7), unit_space(1), 5, 3).evaluations[2].theta,
            run_random(quadratic(0.7), unit_space(1), 5, 3).evaluations[2].theta);
  EXPECT_THROW(run_random(quadratic(0.7), unit_space(1), 0, 3), InvalidArgument);
}

TEST(PhaseNames, RoundTrip) {
  for (Phase p : {Phase::LinearProbe, Phase::RandomInit, Phase::Acquisition, Phase::RandomSearch, Phase::Spsa, Phase::Fixed}) {
    EXPECT_EQ(parse_phase(to_string(p)), p);
  }
  EXPECT_THROW(parse_phase("warmup"), InvalidArgument);
}

}  // namespace
}  // namespace qabo
