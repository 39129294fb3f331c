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

// Bayesian optimization loop plus SPSA and random-search baselines.
//
// All optimizers maximize. Objectives receive the parameter vector and a
// per-evaluation seed derived from the optimizer seed, so stochastic
// figures of merit are reproducible.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "qabo/error.hpp"
#include "qabo/rng.hpp"
#include "qabo/schedule.hpp"
#include "qabo/surrogate.hpp"

namespace qabo {

struct Evaluation {
  double value = 0.0;
  double sigma_obs = 0.0;
};

using Objective = std::function<Evaluation(std::span<const double> theta, std::uint64_t eval_seed)>;

// Fixed marks a single evaluation at user-supplied parameters.
enum class Phase { LinearProbe, RandomInit, Acquisition, RandomSearch, Spsa, Fixed };

inline std::string to_string(Phase p) {
  switch (p) {
    case Phase::LinearProbe: return "linear_probe";
    case Phase::RandomInit: return "random_init";
    case Phase::Acquisition: return "acquisition";
    case Phase::RandomSearch: return "random_search";
    case Phase::Spsa: return "spsa";
    case Phase::Fixed: return "fixed";
  }
  return "unknown";
}

inline Phase parse_phase(const std::string& s) {
  for (Phase p : {Phase::LinearProbe, Phase::RandomInit, Phase::Acquisition, Phase::RandomSearch, Phase::Spsa,
                  Phase::Fixed}) {
    if (to_string(p) == s) return p;
  }
  throw InvalidArgument("unknown phase '" + s + "'");
}

struct TraceEntry {
  std::vector<double> theta;
  double value = 0.0;
  double sigma_obs = 0.0;
  std::size_t index = 0;
  Phase phase = Phase::RandomInit;
  std::optional<double> kappa;         // acquisition steps only
  std::optional<double> length_scale;  // GP state the suggestion came from
  std::optional<double> signal_variance;
};

struct OptimizationTrace {
  std::vector<TraceEntry> evaluations;
  std::vector<double> best_theta;
  double best_value = -std::numeric_limits<double>::infinity();
  std::size_t best_index = 0;
  // SPSA only: the iterate after the last update.
  std::optional<std::vector<double>> final_theta;

  void record(TraceEntry e) {
    e.index = evaluations.size();
    if (evaluations.empty() || e.value > best_value) {
      best_value = e.value;
      best_theta = e.theta;
      best_index = e.index;
    }
    evaluations.push_back(std::move(e));
  }

  // Running maximum after each evaluation.
  std::vector<double> best_so_far() const {
    std::vector<double> out;
    out.reserve(evaluations.size());
    double b = -std::numeric_limits<double>::infinity();
    for (const auto& e : evaluations) out.push_back(b = std::max(b, e.value));
    return out;
  }
};

// Box domain with an optional point that reproduces the linear schedule.
struct SearchSpace {
  std::vector<Interval> bounds;
  std::optional<std::vector<double>> linear_probe;

  std::size_t dimension() const { return bounds.size(); }

  void validate() const {
    if (bounds.empty()) throw InvalidArgument("search space has no parameters");
    for (const auto& b : bounds) {
      if (!(b.hi > b.lo)) throw InvalidArgument("search-space interval must have positive width");
    }
    if (linear_probe) {
      if (linear_probe->size() != bounds.size()) throw InvalidArgument("linear probe has wrong dimension");
      for (std::size_t i = 0; i < bounds.size(); ++i) {
        if (!bounds[i].contains((*linear_probe)[i])) throw InvalidArgument("linear probe outside bounds");
      }
    }
  }
};

// Concatenates the schedule domains; the probe exists when every schedule
// family has a linear-equivalent parameter vector.
inline SearchSpace search_space(std::span<const ScheduleSpec> specs) {
  SearchSpace space;
  std::vector<double> probe;
  bool probe_ok = true;
  for (const auto& spec : specs) {
    const auto b = bounds(spec);
    space.bounds.insert(space.bounds.end(), b.begin(), b.end());
    if (!probe_ok) continue;
    try {
      const auto p = linear_equivalent_params(spec);
      probe.insert(probe.end(), p.values().begin(), p.values().end());
    } catch (const UnsupportedFamily&) {
      probe_ok = false;
    }
  }
  if (probe_ok) space.linear_probe = std::move(probe);
  return space;
}

inline SearchSpace search_space(const ScheduleSpec& spec) { return search_space(std::span(&spec, 1)); }

struct BOConfig {
  std::size_t n_random_init = 9;
  bool probe_linear_first = true;
  std::size_t n_acquisition_iters = 50;
  double kappa_start = 2.0;
  double kappa_end = 0.01;
  std::size_t kappa_decay_start = 25;
  std::uint64_t seed = 0;
  // Floor applied to sigma_obs before it enters the GP.
  double noise_floor = 1e-6;
  GpSettings gp;
  HyperparameterBounds hyper;
  AcquisitionSettings acquisition;

  void validate() const {
    if (!(kappa_start >= 0.0 && kappa_end > 0.0)) throw InvalidArgument("kappa values must be positive");
    if (kappa_end > kappa_start) throw InvalidArgument("kappa_end must not exceed kappa_start");
    if (kappa_decay_start > n_acquisition_iters) {
      throw InvalidArgument("kappa_decay_start must not exceed n_acquisition_iters");
    }
    if (!(noise_floor >= 0.0)) throw InvalidArgument("noise_floor must be nonnegative");
  }

  std::size_t budget(bool probe_available) const {
    return (probe_linear_first && probe_available ? 1 : 0) + n_random_init + n_acquisition_iters;
  }
};

inline double kappa_schedule(const BOConfig& cfg, std::size_t i) {
  if (i < 1 || i > cfg.n_acquisition_iters) {
    throw InvalidArgument("acquisition index " + std::to_string(i) + " outside 1.." +
                          std::to_string(cfg.n_acquisition_iters));
  }
  if (i <= cfg.kappa_decay_start) return cfg.kappa_start;
  if (i == cfg.n_acquisition_iters) return cfg.kappa_end;
  const double span = double(cfg.n_acquisition_iters - cfg.kappa_decay_start);
  const double r = std::pow(cfg.kappa_end / cfg.kappa_start, 1.0 / span);
  return cfg.kappa_start * std::pow(r, double(i - cfg.kappa_decay_start));
}

namespace detail {

inline Evaluation call_objective(const Objective& f, std::span<const double> theta, std::uint64_t seed) {
  Evaluation e;
  try {
    e = f(theta, seed);
  } catch (const ObjectiveError&) {
    throw;
  } catch (const std::exception& ex) {
    throw ObjectiveError(ex.what(), std::vector<double>(theta.begin(), theta.end()));
  }
  if (!std::isfinite(e.value) || !(e.sigma_obs >= 0.0)) {
    throw ObjectiveError("objective returned a non-finite value or negative sigma",
                         std::vector<double>(theta.begin(), theta.end()));
  }
  return e;
}

inline std::vector<double> random_point(std::span<const Interval> bounds, Rng& rng) {
  std::vector<double> x(bounds.size());
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = uniform(rng, bounds[i].lo, bounds[i].hi);
  return x;
}

}  // namespace detail

// Linear probe (optional), uniform random initialization, then UCB
// acquisition with the hyperparameters refit after every observation.
inline OptimizationTrace run_bo(const Objective& objective, const SearchSpace& space, const BOConfig& cfg) {
  space.validate();
  cfg.validate();
  Rng rng(cfg.seed);
  OptimizationTrace trace;
  GaussianProcess gp(space.bounds, cfg.gp);

  auto evaluate = [&](std::vector<double> theta, Phase phase, std::optional<double> kappa) {
    const std::uint64_t eval_seed = mix_seed(cfg.seed, trace.evaluations.size());
    const Evaluation e = detail::call_objective(objective, theta, eval_seed);
    TraceEntry entry{theta, e.value, e.sigma_obs, 0, phase, kappa, std::nullopt, std::nullopt};
    if (phase == Phase::Acquisition) {
      entry.length_scale = gp.length_scale();
      entry.signal_variance = gp.signal_variance();
    }
    trace.record(std::move(entry));
    gp = gp.condition({std::move(theta), e.value, std::max(e.sigma_obs, cfg.noise_floor)});
    if (gp.observations().size() >= 2) gp = fit_hyperparameters(gp, cfg.hyper);
  };

  if (cfg.probe_linear_first && space.linear_probe) evaluate(*space.linear_probe, Phase::LinearProbe, std::nullopt);
  for (std::size_t i = 0; i < cfg.n_random_init; ++i) {
    evaluate(detail::random_point(space.bounds, rng), Phase::RandomInit, std::nullopt);
  }
  for (std::size_t i = 1; i <= cfg.n_acquisition_iters; ++i) {
    const double kappa = kappa_schedule(cfg, i);
    evaluate(suggest_next(gp, kappa, rng, cfg.acquisition), Phase::Acquisition, kappa);
  }
  return trace;
}

struct SPSAConfig {
  // Gains in unit-cube coordinates, i.e. fractions of each bound width.
  double a = 0.2;
  double c = 0.1;
  std::optional<double> stability;  // A; defaults to 10% of the step count
  double alpha = 0.602;
  double gamma = 0.101;
  std::uint64_t seed = 0;
  // Start point; the linear probe, then the domain centre, when unset.
  std::optional<std::vector<double>> initial;
};

inline OptimizationTrace run_spsa(const Objective& objective, const SearchSpace& space, const SPSAConfig& cfg,
                                  std::size_t n_evals) {
  space.validate();
  if (n_evals < 2) throw InvalidArgument("SPSA needs at least 2 evaluations");
  if (!(cfg.a >= 0.0 && cfg.c > 0.0)) throw InvalidArgument("SPSA gains need a >= 0 and c > 0");
  const std::size_t dim = space.dimension();
  const std::size_t steps = n_evals / 2;
  const double big_a = cfg.stability.value_or(0.1 * double(steps));
  Rng rng(cfg.seed);

  std::vector<double> x(dim);
  if (cfg.initial || space.linear_probe) {
    const auto& init = cfg.initial ? *cfg.initial : *space.linear_probe;
    if (init.size() != dim) throw InvalidArgument("SPSA initial point has wrong dimension");
    for (std::size_t i = 0; i < dim; ++i) {
      if (!space.bounds[i].contains(init[i])) throw InvalidArgument("SPSA initial point outside bounds");
      x[i] = (init[i] - space.bounds[i].lo) / space.bounds[i].width();
    }
  } else {
    std::fill(x.begin(), x.end(), 0.5);
  }
  auto to_theta = [&](const std::vector<double>& u) {
    std::vector<double> t(dim);
    for (std::size_t i = 0; i < dim; ++i) t[i] = space.bounds[i].lo + space.bounds[i].width() * std::clamp(u[i], 0.0, 1.0);
    return t;
  };

  OptimizationTrace trace;
  auto evaluate = [&](const std::vector<double>& u) {
    auto theta = to_theta(u);
    const Evaluation e = detail::call_objective(objective, theta, mix_seed(cfg.seed, trace.evaluations.size()));
    trace.record({std::move(theta), e.value, e.sigma_obs, 0, Phase::Spsa, std::nullopt, std::nullopt, std::nullopt});
    return e.value;
  };

  std::vector<double> plus(dim), minus(dim), delta(dim);
  for (std::size_t k = 0; k < steps; ++k) {
    const double ak = cfg.a / std::pow(double(k) + 1.0 + big_a, cfg.alpha);
    const double ck = cfg.c / std::pow(double(k) + 1.0, cfg.gamma);
    for (std::size_t i = 0; i < dim; ++i) {
      delta[i] = (rng() >> 63) ? 1.0 : -1.0;
      plus[i] = std::clamp(x[i] + ck * delta[i], 0.0, 1.0);
      minus[i] = std::clamp(x[i] - ck * delta[i], 0.0, 1.0);
    }
    const double yp = evaluate(plus);
    const double ym = evaluate(minus);
    for (std::size_t i = 0; i < dim; ++i) {
      x[i] = std::clamp(x[i] + ak * (yp - ym) / (2.0 * ck * delta[i]), 0.0, 1.0);
    }
  }
  trace.final_theta = to_theta(x);
  return trace;
}

inline OptimizationTrace run_random(const Objective& objective, const SearchSpace& space, std::size_t n_evals,
                                    std::uint64_t seed) {
  space.validate();
  if (n_evals < 1) throw InvalidArgument("random search needs at least 1 evaluation");
  Rng rng(seed);
  OptimizationTrace trace;
  for (std::size_t i = 0; i < n_evals; ++i) {
    auto theta = detail::random_point(space.bounds, rng);
    const Evaluation e = detail::call_objective(objective, theta, mix_seed(seed, i));
    trace.record({std::move(theta), e.value, e.sigma_obs, 0, Phase::RandomSearch, std::nullopt, std::nullopt,
                  std::nullopt});
  }
  return trace;
}

}  // namespace qabo
