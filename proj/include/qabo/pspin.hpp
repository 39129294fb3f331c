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

// Closed-system quantum and reverse annealing of the p-spin model
//
//   H_t  = -N (S_z / N)^p,      H_TF = -Gamma S_x,      S_a = sum_i sigma_a^i
//
// simulated in the permutation-symmetric subspace. Quantum annealing uses a
// single sector of N spins (dimension N + 1). Reverse annealing splits the
// spins into an aligned sector of N_c = round(N c) spins and an anti-aligned
// sector of N - N_c spins, giving a product space of dimension
// (N_c + 1)(N - N_c + 1).
//
// Basis ordering: in a sector of n spins, index k carries magnetization
// m = n - 2k, so index 0 is all-up. Product states are indexed
// k1 * (n2 + 1) + k2. The target ground state (p odd) is always index 0.

#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "qabo/error.hpp"
#include "qabo/integrator.hpp"
#include "qabo/rng.hpp"
#include "qabo/schedule.hpp"

namespace qabo {

using cplx = std::complex<double>;
using StateVector = Eigen::VectorXcd;
using SparseReal = Eigen::SparseMatrix<double, Eigen::RowMajor>;

enum class PSpinMode { QaDependent, QaIndependent, ReverseAnnealing, BangBang };

struct PSpinSystem {
  int n_spins = 15;
  int p = 3;
  double gamma = 5.0;
  double c = 0.8;  // reverse annealing only
  PSpinMode mode = PSpinMode::QaDependent;

  bool reverse() const { return mode == PSpinMode::ReverseAnnealing; }

  // Nearest integer to N c, ties to even.
  int aligned_spins() const {
    if (!reverse()) return n_spins;
    const double x = n_spins * c;
    double r = std::round(x);
    if (std::abs(x - std::trunc(x)) == 0.5 && std::fmod(r, 2.0) != 0.0) r -= std::copysign(1.0, x);
    return static_cast<int>(r);
  }

  std::size_t dimension() const {
    if (!reverse()) return static_cast<std::size_t>(n_spins) + 1;
    const auto nc = static_cast<std::size_t>(aligned_spins());
    return (nc + 1) * (static_cast<std::size_t>(n_spins) - nc + 1);
  }

  void validate() const {
    if (n_spins <= 0) throw InvalidArgument("p-spin system needs N > 0");
    if (p < 1) throw InvalidArgument("p-spin interaction order must be >= 1");
    if (reverse() && !(c >= 0.0 && c <= 1.0)) throw InvalidArgument("alignment fraction c must lie in [0, 1]");
  }
};

// Collective spin operators on the symmetric sector of `spins` spins, Pauli
// normalization (S = sum sigma, so S_z eigenvalues step by 2).
struct SectorOperators {
  int spins = 0;
  Eigen::VectorXd sz;  // diagonal
  SparseReal sx;       // symmetric tridiagonal

  Eigen::MatrixXd sz_dense() const { return sz.asDiagonal(); }
  Eigen::MatrixXd sx_dense() const { return Eigen::MatrixXd(sx); }
};

inline SectorOperators sector_operators(int spins) {
  if (spins < 0) throw InvalidArgument("sector spin count must be nonnegative");
  const int d = spins + 1;
  SectorOperators ops;
  ops.spins = spins;
  ops.sz.resize(d);
  for (int k = 0; k < d; ++k) ops.sz[k] = spins - 2.0 * k;
  std::vector<Eigen::Triplet<double>> trips;
  const double j = 0.5 * spins;
  for (int k = 0; k + 1 < d; ++k) {
    // <m+1| J+ |m> with m the lower state's J_z, doubled for Pauli units.
    const double m = 0.5 * ops.sz[k + 1];
    const double v = std::sqrt(j * (j + 1.0) - m * (m + 1.0));
    trips.emplace_back(k, k + 1, v);
    trips.emplace_back(k + 1, k, v);
  }
  ops.sx.resize(d, d);
  ops.sx.setFromTriplets(trips.begin(), trips.end());
  return ops;
}

inline std::vector<SectorOperators> build_operators(const PSpinSystem& sys) {
  sys.validate();
  if (!sys.reverse()) return {sector_operators(sys.n_spins)};
  const int nc = sys.aligned_spins();
  return {sector_operators(nc), sector_operators(sys.n_spins - nc)};
}

// Coefficients of the three cached terms: H = driver*H_TF + target*H_t + init*H_init.
struct TermWeights {
  double driver = 0.0;
  double target = 0.0;
  double init = 0.0;
};

// Cached term matrices of a p-spin system. Immutable after construction.
class PSpinModel {
 public:
  explicit PSpinModel(PSpinSystem sys) : sys_(sys), sectors_(build_operators(sys)) {
    const std::size_t dim = sys_.dimension();
    const double n = sys_.n_spins;
    target_.resize(static_cast<Eigen::Index>(dim));
    init_.setZero(static_cast<Eigen::Index>(dim));
    sz_total_.resize(static_cast<Eigen::Index>(dim));
    if (!sys_.reverse()) {
      sz_total_ = sectors_[0].sz;
      driver_ = -sys_.gamma * sectors_[0].sx;
    } else {
      const auto& s1 = sectors_[0];
      const auto& s2 = sectors_[1];
      const Eigen::Index d1 = s1.sz.size(), d2 = s2.sz.size();
      std::vector<Eigen::Triplet<double>> trips;
      for (Eigen::Index a = 0; a < d1; ++a) {
        for (Eigen::Index b = 0; b < d2; ++b) {
          const Eigen::Index row = a * d2 + b;
          sz_total_[row] = s1.sz[a] + s2.sz[b];
          init_[row] = -s1.sz[a] + s2.sz[b];
          for (SparseReal::InnerIterator it(s1.sx, a); it; ++it) {
            trips.emplace_back(row, it.col() * d2 + b, -sys_.gamma * it.value());
          }
          for (SparseReal::InnerIterator it(s2.sx, b); it; ++it) {
            trips.emplace_back(row, a * d2 + it.col(), -sys_.gamma * it.value());
          }
        }
      }
      driver_.resize(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
      driver_.setFromTriplets(trips.begin(), trips.end());
    }
    for (Eigen::Index i = 0; i < target_.size(); ++i) {
      target_[i] = -n * std::pow(sz_total_[i] / n, sys_.p);
    }
  }

  const PSpinSystem& system() const { return sys_; }
  const std::vector<SectorOperators>& sectors() const { return sectors_; }
  std::size_t dimension() const { return static_cast<std::size_t>(target_.size()); }

  const Eigen::VectorXd& target_diagonal() const { return target_; }
  const Eigen::VectorXd& init_diagonal() const { return init_; }
  const Eigen::VectorXd& total_sz() const { return sz_total_; }
  const SparseReal& driver() const { return driver_; }

  // Index of the all-up configuration, the unique ground state for odd p.
  std::size_t ground_index() const { return 0; }

  // Magnetization labels: (m) for one sector, (m1, m2) for two.
  std::vector<int> labels(std::size_t index) const {
    if (sectors_.size() == 1) return {sectors_[0].spins - 2 * static_cast<int>(index)};
    const auto d2 = static_cast<std::size_t>(sectors_[1].spins + 1);
    return {sectors_[0].spins - 2 * static_cast<int>(index / d2),
            sectors_[1].spins - 2 * static_cast<int>(index % d2)};
  }

  SparseReal hamiltonian(const TermWeights& w) const {
    SparseReal h = w.driver * driver_;
    const Eigen::VectorXd diag = w.target * target_ + w.init * init_;
    SparseReal d(h.rows(), h.cols());
    d.reserve(Eigen::VectorXi::Constant(h.rows(), 1));
    for (Eigen::Index i = 0; i < diag.size(); ++i) d.insert(i, i) = diag[i];
    h += d;
    h.makeCompressed();
    return h;
  }

  Eigen::MatrixXd dense_hamiltonian(const TermWeights& w) const {
    Eigen::MatrixXd h = w.driver * Eigen::MatrixXd(driver_);
    h.diagonal() += w.target * target_ + w.init * init_;
    return h;
  }

  // out = H(w) x
  void apply(const TermWeights& w, const StateVector& x, StateVector& out) const {
    const Eigen::VectorXd diag = w.target * target_ + w.init * init_;
    for (Eigen::Index row = 0; row < driver_.outerSize(); ++row) {
      cplx acc = diag[row] * x[row];
      for (SparseReal::InnerIterator it(driver_, row); it; ++it) {
        acc += (w.driver * it.value()) * x[it.col()];
      }
      out[row] = acc;
    }
  }

 private:
  PSpinSystem sys_;
  std::vector<SectorOperators> sectors_;
  Eigen::VectorXd target_;
  Eigen::VectorXd init_;
  Eigen::VectorXd sz_total_;
  SparseReal driver_;
};

inline Eigen::MatrixXd target_hamiltonian(const PSpinModel& model) {
  return model.target_diagonal().asDiagonal();
}

// H(s) = s H_TF + (1 - s) H_t. Annealing runs s from 1 to 0.
inline TermWeights qa_weights(double s) { return {s, 1.0 - s, 0.0}; }
inline SparseReal qa_hamiltonian(const PSpinModel& model, double s) {
  return model.hamiltonian(qa_weights(s));
}

// H = u1 H_TF + u2 H_t.
inline TermWeights qa_independent_weights(double u1, double u2) { return {u1, u2, 0.0}; }
inline SparseReal qa_hamiltonian_independent(const PSpinModel& model, double u1, double u2) {
  return model.hamiltonian(qa_independent_weights(u1, u2));
}

// H = (1-s)(1-lambda) H_init + s H_t + (1-s) lambda H_TF.
inline TermWeights ra_weights(double s, double lambda) {
  return {(1.0 - s) * lambda, s, (1.0 - s) * (1.0 - lambda)};
}
inline SparseReal ra_hamiltonian(const PSpinModel& model, double s, double lambda) {
  if (!model.system().reverse()) throw InvalidArgument("ra_hamiltonian requires a reverse-annealing system");
  return model.hamiltonian(ra_weights(s, lambda));
}

// |+>^N in the symmetric basis for quantum annealing; |psi_c> for reverse annealing.
inline StateVector initial_state(const PSpinModel& model) {
  const auto& sys = model.system();
  StateVector psi = StateVector::Zero(static_cast<Eigen::Index>(model.dimension()));
  if (!sys.reverse()) {
    const int n = sys.n_spins;
    for (int k = 0; k <= n; ++k) {
      const double log_amp = 0.5 * (std::lgamma(n + 1.0) - std::lgamma(k + 1.0) -
                                    std::lgamma(n - k + 1.0) - n * std::log(2.0));
      psi[k] = std::exp(log_amp);
    }
  } else {
    // m1 = N_c (k1 = 0), m2 = -(N - N_c) (k2 = last).
    const auto d2 = static_cast<Eigen::Index>(model.sectors()[1].spins + 1);
    psi[d2 - 1] = 1.0;
  }
  return psi;
}

// Schedules driving one run. Interpretation by mode:
//   QaDependent:      [s]           H = s H_TF + (1-s) H_t
//   QaIndependent:    [u1, u2]      H = u1 H_TF + u2 H_t
//   ReverseAnnealing: [s, lambda]
//   BangBang:         [target pulse, driver pulse]
struct AnnealingControls {
  std::vector<Schedule> schedules;

  std::size_t required(PSpinMode mode) const { return mode == PSpinMode::QaDependent ? 1 : 2; }

  TermWeights weights(PSpinMode mode, double t) const {
    switch (mode) {
      case PSpinMode::QaDependent:
        return qa_weights(schedules[0](t));
      case PSpinMode::QaIndependent:
        return qa_independent_weights(schedules[0](t), schedules[1](t));
      case PSpinMode::ReverseAnnealing:
        return ra_weights(schedules[0](t), schedules[1](t));
      case PSpinMode::BangBang:
        return {schedules[1](t), schedules[0](t), 0.0};
    }
    return {};
  }

  std::vector<double> breakpoints() const {
    std::vector<double> out;
    for (const auto& s : schedules) {
      for (double b : s.breakpoints()) out.push_back(b);
    }
    return out;
  }
};

inline IntegratorOptions schrodinger_integrator_defaults() {
  IntegratorOptions o;
  o.rtol = 1e-8;
  o.atol = 1e-10;
  o.renormalize = true;
  return o;
}

struct EvolveOptions {
  IntegratorOptions integrator = schrodinger_integrator_defaults();
  std::optional<StateVector> initial;  // defaults to initial_state(model)
  // Called at every accepted step with (t, psi).
  std::function<void(double, const StateVector&)> observer;
};

namespace detail {

// exp(-i theta H) psi for a real symmetric H.
inline StateVector expm_apply(const Eigen::MatrixXd& h, double theta, const StateVector& psi) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(h);
  if (eig.info() != Eigen::Success) throw Error("eigensolver failed");
  const Eigen::MatrixXd& v = eig.eigenvectors();
  Eigen::VectorXcd coeff = v.transpose() * psi;
  for (Eigen::Index i = 0; i < coeff.size(); ++i) {
    coeff[i] *= std::exp(cplx(0.0, -theta * eig.eigenvalues()[i]));
  }
  return v * coeff;
}

inline void check_controls(const PSpinModel& model, const AnnealingControls& controls, double t_final) {
  const auto mode = model.system().mode;
  if (controls.schedules.size() != controls.required(mode)) {
    throw InvalidArgument("mode needs " + std::to_string(controls.required(mode)) +
                          " schedules, got " + std::to_string(controls.schedules.size()));
  }
  for (const auto& s : controls.schedules) {
    if (std::abs(s.spec().t_final - t_final) > 1e-12 * t_final) {
      throw InvalidArgument("schedule duration does not match t_final");
    }
  }
}

}  // namespace detail

// Evolves the initial state under i d/dt psi = H(t) psi.
//
// BangBang mode is applied as the exact product of two pulse propagators,
// exp(-i theta_2 H_TF) exp(-i theta_1 H_t); every other mode goes through
// the adaptive integrator.
inline StateVector evolve(const PSpinModel& model, const AnnealingControls& controls,
                          double t_final, const EvolveOptions& opt = {}) {
  detail::check_controls(model, controls, t_final);
  StateVector psi = opt.initial ? *opt.initial : initial_state(model);
  if (static_cast<std::size_t>(psi.size()) != model.dimension()) {
    throw InvalidArgument("initial state has the wrong dimension");
  }
  const auto mode = model.system().mode;
  if (mode == PSpinMode::BangBang) {
    for (const auto& s : controls.schedules) {
      if (s.spec().family != Family::BangBang) throw InvalidArgument("bang-bang mode needs bang-bang schedules");
    }
    const double area_target = controls.schedules[0].params()[0];
    const double area_driver = controls.schedules[1].params()[0];
    const bool target_first = controls.schedules[0].spec().pulse == PulseWindow::FirstHalf;
    const Eigen::VectorXd& diag = model.target_diagonal();
    auto target_pulse = [&](const StateVector& in) {
      StateVector out = in;
      for (Eigen::Index i = 0; i < out.size(); ++i) out[i] *= std::exp(cplx(0.0, -area_target * diag[i]));
      return out;
    };
    const Eigen::MatrixXd driver = Eigen::MatrixXd(model.driver());
    if (target_first) {
      psi = detail::expm_apply(driver, area_driver, target_pulse(psi));
    } else {
      psi = target_pulse(detail::expm_apply(driver, area_driver, psi));
    }
    if (opt.observer) opt.observer(t_final, psi);
    return psi;
  }

  auto rhs = [&](double t, const StateVector& y, StateVector& dy) {
    model.apply(controls.weights(mode, t), y, dy);
    dy *= cplx(0.0, -1.0);
  };
  const auto cuts = controls.breakpoints();
  if (opt.observer) {
    return integrate_piecewise(rhs, std::move(psi), 0.0, t_final, cuts, opt.integrator,
                               [&](double t, const StateVector& y) { opt.observer(t, y); });
  }
  return integrate_piecewise(rhs, std::move(psi), 0.0, t_final, cuts, opt.integrator);
}

inline double fidelity(const StateVector& psi, const PSpinModel& model) {
  return std::norm(psi[static_cast<Eigen::Index>(model.ground_index())]);
}

inline double expected_energy(const StateVector& psi, const PSpinModel& model) {
  return (psi.cwiseAbs2().array() * model.target_diagonal().array()).sum();
}

// E1 - E0 of the instantaneous Hamiltonian.
inline double spectral_gap(const PSpinModel& model, const TermWeights& w) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(model.dense_hamiltonian(w), Eigen::EigenvaluesOnly);
  if (eig.info() != Eigen::Success) throw Error("eigensolver failed");
  const auto& e = eig.eigenvalues();
  return e.size() < 2 ? 0.0 : e[1] - e[0];
}

inline double spectral_gap_qa(const PSpinModel& model, double s) {
  return spectral_gap(model, qa_weights(s));
}

inline double spectral_gap_ra(const PSpinModel& model, double s, double lambda) {
  return spectral_gap(model, ra_weights(s, lambda));
}

struct GapPoint {
  double s = 0.0;
  double lambda = 0.0;
  double gap = 0.0;
};

// Gap along s for quantum annealing (lambda column left at 1).
inline std::vector<GapPoint> gap_landscape_qa(const PSpinModel& model, std::span<const double> s_grid) {
  std::vector<GapPoint> out;
  out.reserve(s_grid.size());
  for (double s : s_grid) out.push_back({s, 1.0, spectral_gap_qa(model, s)});
  return out;
}

inline std::vector<GapPoint> gap_landscape_ra(const PSpinModel& model, std::span<const double> s_grid,
                                              std::span<const double> lambda_grid) {
  std::vector<GapPoint> out;
  out.reserve(s_grid.size() * lambda_grid.size());
  for (double s : s_grid) {
    for (double l : lambda_grid) out.push_back({s, l, spectral_gap_ra(model, s, l)});
  }
  return out;
}

inline std::vector<double> uniform_grid(double lo, double hi, std::size_t points) {
  std::vector<double> g(points);
  for (std::size_t i = 0; i < points; ++i) {
    g[i] = points == 1 ? lo : lo + (hi - lo) * double(i) / double(points - 1);
  }
  return g;
}

// Measures psi n_shots times in the magnetization basis and returns the
// H_t energy of each outcome.
inline std::vector<double> sample_energies(const StateVector& psi, const PSpinModel& model,
                                           int n_shots, std::uint64_t seed) {
  if (n_shots <= 0) throw InvalidArgument("n_shots must be positive");
  const Eigen::VectorXd prob = psi.cwiseAbs2();
  const DiscreteSampler sampler(std::span<const double>(prob.data(), static_cast<std::size_t>(prob.size())));
  Rng rng(seed);
  std::vector<double> out(static_cast<std::size_t>(n_shots));
  for (double& e : out) e = model.target_diagonal()[static_cast<Eigen::Index>(sampler(rng))];
  return out;
}

// Number of entries in the top x-quantile of `count` items.
inline std::size_t quantile_count(std::size_t count, double x) {
  const double raw = x * static_cast<double>(count);
  const auto k = static_cast<std::size_t>(std::ceil(raw - 1e-9 * std::max(1.0, raw)));
  return std::clamp<std::size_t>(k, 1, count);
}

// Negated mean of the lowest ceil(x * len) energies.
inline double quantile_fom(std::vector<double> energies, double x) {
  if (energies.empty()) throw InvalidArgument("quantile_fom needs at least one energy");
  if (!(x > 0.0 && x <= 1.0)) throw InvalidArgument("quantile fraction must lie in (0, 1]");
  const std::size_t k = quantile_count(energies.size(), x);
  std::partial_sort(energies.begin(), energies.begin() + static_cast<std::ptrdiff_t>(k), energies.end());
  double acc = 0.0;
  for (std::size_t i = 0; i < k; ++i) acc += energies[i];
  return -acc / static_cast<double>(k);
}

// Infinite-shot limit of quantile_fom: negated mean energy of the lowest
// x of the probability mass.
inline double quantile_fom_exact(std::span<const double> probabilities, std::span<const double> energies,
                                 double x) {
  if (probabilities.size() != energies.size() || energies.empty()) {
    throw InvalidArgument("quantile_fom_exact needs matching, nonempty inputs");
  }
  if (!(x > 0.0 && x <= 1.0)) throw InvalidArgument("quantile fraction must lie in (0, 1]");
  std::vector<std::size_t> order(energies.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return energies[a] < energies[b]; });
  double total = 0.0;
  for (double p : probabilities) total += p;
  double need = x * total, mass = 0.0, acc = 0.0;
  for (std::size_t i : order) {
    if (need <= 0.0) break;
    const double take = std::min(probabilities[i], need);
    acc += take * energies[i];
    mass += take;
    need -= take;
  }
  return mass > 0.0 ? -acc / mass : 0.0;
}

}  // namespace qabo
