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

// Gaussian-process surrogate over a box domain.
//
// Inputs are mapped to the unit hypercube before distances are taken, the
// kernel is isotropic Matern 5/2 scaled by a signal variance, and each
// observation carries its own noise standard deviation. A small nugget
// (the jitter) is added to the Gram diagonal and to zero-distance
// cross-covariances, so noiseless observations are interpolated exactly.

#pragma once

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>
#include <memory>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "qabo/error.hpp"
#include "qabo/rng.hpp"
#include "qabo/schedule.hpp"

namespace qabo {

inline double matern52(double d, double ell) {
  const double r = std::sqrt(5.0) * d / ell;
  return (1.0 + r + r * r / 3.0) * std::exp(-r);
}

struct Observation {
  std::vector<double> theta;
  double value = 0.0;
  double sigma_obs = 0.0;
};

struct Posterior {
  double mu = 0.0;
  double sigma = 0.0;
};

// Length-scale bounds are fractions of the unit-cube diagonal sqrt(d).
// Without a floor the likelihood of sparse noiseless data in several
// dimensions favours length scales so short that UCB degenerates into
// space filling.
struct HyperparameterBounds {
  double ell_min = 0.06;
  double ell_max = 5.0;
  double variance_min = 1e-8;
  double variance_max = 1e3;
};

enum class Acquisition { UCB };

struct GpSettings {
  double length_scale = 0.3;
  double signal_variance = 1.0;
  // Used when there are no observations, or always when running_mean is off.
  double prior_mean = 0.0;
  bool running_mean = true;
  double jitter = 1e-10;
  double max_jitter = 1e-6;
};

class GaussianProcess {
 public:
  explicit GaussianProcess(std::vector<Interval> domain, GpSettings settings = {},
                           std::vector<Observation> observations = {})
      : domain_(std::move(domain)), settings_(settings), obs_(std::move(observations)) {
    if (domain_.empty()) throw InvalidArgument("GP domain must have at least one dimension");
    for (const auto& b : domain_) {
      if (!(b.hi > b.lo)) throw InvalidArgument("GP domain intervals must have positive width");
    }
    if (!(settings_.length_scale > 0.0)) throw InvalidArgument("length scale must be positive");
    if (!(settings_.signal_variance > 0.0)) throw InvalidArgument("signal variance must be positive");
    if (!(settings_.jitter > 0.0) || settings_.max_jitter < settings_.jitter) {
      throw InvalidArgument("jitter must be positive and not above max_jitter");
    }
    for (const auto& o : obs_) check_observation(o);
    factorize();
  }

  GaussianProcess condition(Observation o) const {
    auto next = obs_;
    next.push_back(std::move(o));
    return GaussianProcess(domain_, settings_, std::move(next));
  }

  GaussianProcess with_hyperparameters(double length_scale, double signal_variance) const {
    GpSettings s = settings_;
    s.length_scale = length_scale;
    s.signal_variance = signal_variance;
    return GaussianProcess(domain_, s, obs_);
  }

  std::span<const Interval> domain() const { return domain_; }
  std::size_t dimension() const { return domain_.size(); }
  std::span<const Observation> observations() const { return obs_; }
  const GpSettings& settings() const { return settings_; }
  double length_scale() const { return settings_.length_scale; }
  double signal_variance() const { return settings_.signal_variance; }
  double prior_mean() const { return mean_; }
  // Jitter that made the Gram matrix factorizable.
  double jitter_used() const { return jitter_used_; }

  Eigen::VectorXd to_unit(std::span<const double> theta) const {
    if (theta.size() != domain_.size()) {
      throw InvalidArgument("point has " + std::to_string(theta.size()) + " coordinates, domain has " +
                            std::to_string(domain_.size()));
    }
    Eigen::VectorXd u(static_cast<Eigen::Index>(theta.size()));
    for (std::size_t i = 0; i < theta.size(); ++i) {
      u[static_cast<Eigen::Index>(i)] = (theta[i] - domain_[i].lo) / domain_[i].width();
    }
    return u;
  }

  std::vector<double> from_unit(const Eigen::VectorXd& u) const {
    std::vector<double> theta(domain_.size());
    for (std::size_t i = 0; i < theta.size(); ++i) {
      theta[i] = domain_[i].lo + domain_[i].width() * u[static_cast<Eigen::Index>(i)];
    }
    return theta;
  }

  Posterior posterior_unit(const Eigen::VectorXd& u) const {
    const double prior_var = settings_.signal_variance;
    if (obs_.empty()) return {mean_, std::sqrt(prior_var)};
    const auto n = static_cast<Eigen::Index>(obs_.size());
    Eigen::VectorXd k(n);
    for (Eigen::Index i = 0; i < n; ++i) k[i] = cross_covariance(u, x_.col(i));
    const double mu = mean_ + k.dot(alpha_);
    const Eigen::VectorXd v = factor_->matrixL().solve(k);
    double var = prior_var - v.squaredNorm();
    // Differences at the rounding level of the prior are not resolvable.
    if (var < 64.0 * std::numeric_limits<double>::epsilon() * (prior_var + jitter_used_)) var = 0.0;
    return {mu, std::sqrt(var)};
  }

  Posterior posterior(std::span<const double> theta) const { return posterior_unit(to_unit(theta)); }

  std::vector<Posterior> posterior(std::span<const std::vector<double>> queries) const {
    std::vector<Posterior> out;
    out.reserve(queries.size());
    for (const auto& q : queries) out.push_back(posterior(q));
    return out;
  }

  double log_marginal_likelihood() const {
    if (obs_.empty()) return 0.0;
    const double n = static_cast<double>(obs_.size());
    const auto& l = factor_->matrixLLT();
    double log_det = 0.0;
    for (Eigen::Index i = 0; i < l.rows(); ++i) log_det += std::log(l(i, i));
    return -0.5 * residual_.dot(alpha_) - log_det - 0.5 * n * std::log(2.0 * std::numbers::pi);
  }

 private:
  static void check_observation(const Observation& o) {
    if (!std::isfinite(o.value)) throw InvalidArgument("observation value must be finite");
    if (!(o.sigma_obs >= 0.0)) throw InvalidArgument("observation sigma_obs must be nonnegative");
  }

  double cross_covariance(const Eigen::VectorXd& a, const Eigen::VectorXd& b) const {
    const double d = (a - b).norm();
    return settings_.signal_variance * matern52(d, settings_.length_scale) + (d == 0.0 ? jitter_used_ : 0.0);
  }

  void factorize() {
    const auto n = static_cast<Eigen::Index>(obs_.size());
    const auto dim = static_cast<Eigen::Index>(domain_.size());
    mean_ = settings_.prior_mean;
    jitter_used_ = settings_.jitter;
    if (n == 0) return;
    if (settings_.running_mean) {
      mean_ = 0.0;
      for (const auto& o : obs_) mean_ += o.value;
      mean_ /= double(n);
    }
    x_.resize(dim, n);
    residual_.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      x_.col(i) = to_unit(obs_[static_cast<std::size_t>(i)].theta);
      residual_[i] = obs_[static_cast<std::size_t>(i)].value - mean_;
    }
    Eigen::MatrixXd base(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j <= i; ++j) {
        base(i, j) = base(j, i) =
            settings_.signal_variance * matern52((x_.col(i) - x_.col(j)).norm(), settings_.length_scale);
      }
    }
    for (double jitter = settings_.jitter; jitter <= settings_.max_jitter * (1.0 + 1e-9); jitter *= 10.0) {
      jitter_used_ = jitter;
      Eigen::MatrixXd gram = base;
      for (Eigen::Index i = 0; i < n; ++i) {
        const double s = obs_[static_cast<std::size_t>(i)].sigma_obs;
        gram(i, i) += s * s + jitter;
      }
      auto llt = std::make_shared<Eigen::LLT<Eigen::MatrixXd>>(gram);
      if (llt->info() == Eigen::Success && (llt->matrixLLT().diagonal().array() > 0.0).all()) {
        factor_ = std::move(llt);
        alpha_ = factor_->solve(residual_);
        return;
      }
    }
    throw IllConditioned("GP Gram matrix is not positive definite with jitter up to " +
                         std::to_string(settings_.max_jitter));
  }

  std::vector<Interval> domain_;
  GpSettings settings_;
  std::vector<Observation> obs_;
  double mean_ = 0.0;
  double jitter_used_ = 0.0;
  Eigen::MatrixXd x_;
  Eigen::VectorXd residual_;
  Eigen::VectorXd alpha_;
  std::shared_ptr<const Eigen::LLT<Eigen::MatrixXd>> factor_;
};

// Maximizes the log marginal likelihood over (length scale, signal variance):
// a log-spaced grid, then a shrinking pattern search in log space from the
// grid winner. Returns the input model when no candidate factorizes.
inline GaussianProcess fit_hyperparameters(const GaussianProcess& model, const HyperparameterBounds& hb = {},
                                           std::size_t grid_ell = 12, std::size_t grid_variance = 12) {
  if (model.observations().size() < 2) {
    throw InvalidArgument("hyperparameter fitting needs at least 2 observations");
  }
  if (!(hb.ell_min > 0.0 && hb.ell_max >= hb.ell_min && hb.variance_min > 0.0 &&
        hb.variance_max >= hb.variance_min)) {
    throw InvalidArgument("invalid hyperparameter bounds");
  }
  const double diag = std::sqrt(double(model.dimension()));
  const double le0 = std::log(hb.ell_min * diag), le1 = std::log(hb.ell_max * diag);
  const double lv0 = std::log(hb.variance_min), lv1 = std::log(hb.variance_max);
  auto score = [&](double le, double lv) {
    try {
      return model.with_hyperparameters(std::exp(le), std::exp(lv)).log_marginal_likelihood();
    } catch (const IllConditioned&) {
      return -std::numeric_limits<double>::infinity();
    }
  };
  auto lerp = [](double a, double b, std::size_t i, std::size_t n) {
    return n < 2 ? a : a + (b - a) * double(i) / double(n - 1);
  };

  double best_le = std::clamp(std::log(model.length_scale()), le0, le1);
  double best_lv = std::log(std::clamp(model.signal_variance(), hb.variance_min, hb.variance_max));
  double best = score(best_le, best_lv);
  for (std::size_t i = 0; i < grid_ell; ++i) {
    for (std::size_t j = 0; j < grid_variance; ++j) {
      const double le = lerp(le0, le1, i, grid_ell), lv = lerp(lv0, lv1, j, grid_variance);
      const double s = score(le, lv);
      if (s > best) {
        best = s;
        best_le = le;
        best_lv = lv;
      }
    }
  }
  double step_e = (le1 - le0) / double(std::max<std::size_t>(grid_ell, 2) - 1);
  double step_v = (lv1 - lv0) / double(std::max<std::size_t>(grid_variance, 2) - 1);
  for (int round = 0; round < 40 && (step_e > 1e-3 || step_v > 1e-3); ++round) {
    bool moved = false;
    const double cand[4][2] = {{step_e, 0}, {-step_e, 0}, {0, step_v}, {0, -step_v}};
    for (const auto& c : cand) {
      const double le = std::clamp(best_le + c[0], le0, le1);
      const double lv = std::clamp(best_lv + c[1], lv0, lv1);
      const double s = score(le, lv);
      if (s > best) {
        best = s;
        best_le = le;
        best_lv = lv;
        moved = true;
      }
    }
    if (!moved) {
      step_e *= 0.5;
      step_v *= 0.5;
    }
  }
  if (!std::isfinite(best)) {
    std::clog << "warning: no hyperparameter candidate factorized; keeping current values\n";
    return model;
  }
  return model.with_hyperparameters(std::exp(best_le), std::exp(best_lv));
}

inline double ucb(const GaussianProcess& model, std::span<const double> theta, double kappa) {
  if (!(kappa >= 0.0)) throw InvalidArgument("kappa must be nonnegative");
  const Posterior p = model.posterior(theta);
  return p.mu + kappa * p.sigma;
}

struct AcquisitionSettings {
  std::size_t candidates = 1024;
  std::size_t refine_starts = 8;
  double initial_step = 0.05;
  double min_step = 1e-4;
};

// Multi-start maximization of UCB: uniform candidates in the unit cube, then
// coordinate-wise pattern search from the best few.
inline std::vector<double> suggest_next(const GaussianProcess& model, double kappa, Rng& rng,
                                        const AcquisitionSettings& acq = {}) {
  if (!(kappa >= 0.0)) throw InvalidArgument("kappa must be nonnegative");
  if (acq.candidates == 0) throw InvalidArgument("acquisition needs at least one candidate");
  const auto dim = static_cast<Eigen::Index>(model.dimension());
  auto value = [&](const Eigen::VectorXd& u) {
    const Posterior p = model.posterior_unit(u);
    return p.mu + kappa * p.sigma;
  };

  struct Candidate {
    Eigen::VectorXd u;
    double v;
  };
  std::vector<Candidate> pool;
  pool.reserve(acq.candidates);
  for (std::size_t c = 0; c < acq.candidates; ++c) {
    Eigen::VectorXd u(dim);
    for (Eigen::Index i = 0; i < dim; ++i) u[i] = uniform01(rng);
    const double v = value(u);
    pool.push_back({std::move(u), v});
  }
  // Stable order keeps the suggestion deterministic under ties.
  std::stable_sort(pool.begin(), pool.end(), [](const Candidate& a, const Candidate& b) { return a.v > b.v; });

  Candidate best = pool.front();
  const std::size_t starts = std::min(acq.refine_starts, pool.size());
  for (std::size_t s = 0; s < starts; ++s) {
    Candidate cur = pool[s];
    std::size_t moves = 0;
    for (double step = acq.initial_step; step >= acq.min_step && moves < 500;) {
      bool moved = false;
      for (Eigen::Index i = 0; i < dim; ++i) {
        for (double dir : {1.0, -1.0}) {
          Eigen::VectorXd trial = cur.u;
          trial[i] = std::clamp(trial[i] + dir * step, 0.0, 1.0);
          const double v = value(trial);
          if (v > cur.v) {
            cur = {std::move(trial), v};
            moved = true;
            ++moves;
            break;
          }
        }
      }
      if (!moved) step *= 0.5;
    }
    if (cur.v > best.v) best = cur;
  }
  auto theta = model.from_unit(best.u);
  for (std::size_t i = 0; i < theta.size(); ++i) {
    theta[i] = std::clamp(theta[i], model.domain()[i].lo, model.domain()[i].hi);
  }
  return theta;
}

}  // namespace qabo
